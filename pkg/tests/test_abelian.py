import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hofa import StructuralError
from hofa.abelian import (Character, GroupFunction, GroupSpec, add, char_eval, dft, e, fourier_support,
                          inverse_dft, neg)

moduli_st = st.lists(st.integers(2, 7), min_size=1, max_size=3).map(tuple)


def test_mixed_radix_first_modulus_most_significant():
    G = GroupSpec((2, 3))
    assert G.order == 6
    assert G.index((1, 0)) == 3
    assert tuple(G.residues(5)) == (1, 2)


@given(moduli_st)
def test_index_roundtrip(moduli):
    G = GroupSpec(moduli)
    idx = np.arange(G.order)
    assert np.array_equal(G.index(G.residues(idx)), idx)
    assert len(list(G.elements())) == G.order


def test_rejects_small_modulus():
    with pytest.raises(StructuralError):
        GroupSpec((4, 1))


def test_add_examples():
    Z4 = GroupSpec((4,))
    assert add(Z4.element(3), Z4.element(2)) == Z4.element(1)
    G = GroupSpec((2, 3))
    assert G.element((1, 2)) + G.element((1, 2)) == G.element((0, 1))


@given(moduli_st, st.data())
def test_add_neg_is_identity(moduli, data):
    G = GroupSpec(moduli)
    a = G.element_at(data.draw(st.integers(0, G.order - 1)))
    assert add(a, neg(a)) == G.identity


def test_add_mismatched_groups():
    with pytest.raises(StructuralError):
        GroupSpec((4,)).element(1) + GroupSpec((5,)).element(1)


def test_index_arithmetic_matches_elements():
    G = GroupSpec((3, 4))
    i, j = np.meshgrid(np.arange(G.order), np.arange(G.order))
    s = G.add_indices(i, j)
    for a, b in [(1, 7), (11, 11), (5, 0)]:
        assert G.element_at(s[b, a]) == G.element_at(a) + G.element_at(b)
    assert np.array_equal(G.sub_indices(s, j), i)


def test_char_eval_examples():
    Z4 = GroupSpec((4,))
    assert char_eval(Character(Z4, (1,)), Z4.element(1)) == pytest.approx(1j, abs=1e-15)
    triv = Character(GroupSpec((3, 5)), (0, 0))
    for x in triv.spec.elements():
        assert triv(x) == 1


def test_char_multiplicativity_z6():
    Z6 = GroupSpec((6,))
    for chi in Z6.characters():
        for x in Z6.elements():
            for y in Z6.elements():
                assert abs(chi(x + y) - chi(x) * chi(y)) <= 1e-12


def test_char_eval_mismatch():
    with pytest.raises(StructuralError):
        char_eval(Character(GroupSpec((4,)), (1,)), GroupSpec((5,)).element(1))


@given(moduli_st)
def test_character_values_match_char_eval(moduli):
    G = GroupSpec(moduli)
    chi = Character(G, tuple(range(1, G.rank + 1)))
    vals = chi.values()
    assert np.allclose(np.abs(vals), 1, atol=1e-12)
    assert all(abs(vals[x.index] - chi(x)) < 1e-12 for x in G.elements())


def test_dft_character_and_delta():
    G = GroupSpec((4,))
    lam = dft(Character(G, (3,)).as_function())
    assert np.allclose(lam, np.eye(4)[3], atol=1e-12)
    assert np.allclose(dft(GroupFunction.indicator(G, [0])), 0.25, atol=1e-12)


@pytest.mark.parametrize("moduli", [(8,), (3, 4), (2, 2, 5), (128,), (256, 3), (7, 9)])
def test_dft_matches_numpy_fft(moduli, rng):
    # independent oracle: numpy's FFT with forward sign, normalized by |A|
    G = GroupSpec(moduli)
    f = GroupFunction.random_bounded(G, rng)
    expected = np.fft.fftn(f.values.reshape(moduli)).ravel() / G.order
    assert np.max(np.abs(dft(f) - expected)) < 1e-9


def test_parseval_z8_direct_sum(rng):
    G = GroupSpec((8,))
    f = GroupFunction.random_unimodular(G, rng)
    # direct-summation Fourier coefficients as an oracle
    direct = np.array([np.mean(f.values * np.conj(chi.values())) for chi in G.characters()])
    assert np.allclose(dft(f), direct, atol=1e-12)
    assert abs(np.sum(np.abs(direct) ** 2) - np.mean(np.abs(f.values) ** 2)) < 1e-9


@given(moduli_st, st.integers(0, 2**32 - 1))
def test_inverse_roundtrip_and_parseval(moduli, seed):
    G = GroupSpec(moduli)
    f = GroupFunction.random_bounded(G, seed)
    lam = dft(f)
    assert inverse_dft(lam, G).allclose(f, 1e-9)
    assert abs(np.sum(np.abs(lam) ** 2) - np.mean(np.abs(f.values) ** 2)) < 1e-9


def test_fourier_support():
    G = GroupSpec((9,))
    f = Character(G, (2,)).as_function() * 0.5 + Character(G, (4,)).as_function() * 0.25
    idx, coef = fourier_support(f)
    assert idx.tolist() == [2, 4]
    assert np.allclose(coef, [0.5, 0.25])


def test_group_function_shift_conj_inner():
    G = GroupSpec((5,))
    f = GroupFunction(G, e(np.arange(5) ** 2 / 5))
    assert f.shift(G.element(2))(G.element(1)) == f(G.element(3))
    assert f.inner(f) == pytest.approx(1.0)
    assert f.conj().inner(f) == pytest.approx(np.mean(np.conj(f.values) ** 2))
    assert f.lp_norm(4) == pytest.approx(1.0)


def test_bound_and_shape_validation():
    G = GroupSpec((3,))
    with pytest.raises(StructuralError):
        GroupFunction(G, [1, 2])
    with pytest.raises(StructuralError):
        GroupFunction(G, [1, 2, 0], bound=1.0)


def test_json_roundtrip(rng):
    f = GroupFunction.random_bounded(GroupSpec((2, 3)), rng)
    data = json.loads(f.to_json())
    assert set(data) == {"moduli", "values"}
    assert data["moduli"] == [2, 3] and len(data["values"]) == 6
    assert GroupFunction.from_json(f.to_json()).allclose(f, 0)
    with pytest.raises(StructuralError):
        GroupFunction.from_dict({"values": []})
