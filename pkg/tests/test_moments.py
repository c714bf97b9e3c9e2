import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_moment

from hofa import StructuralError
from hofa.abelian import GroupFunction, GroupSpec
from hofa.moments import (Moment, chi_plus_chi_power, convergence_scan, distribution, moment_discrepancy,
                          moment_estimate, moment_family, moment_value, search_limit_exponents,
                          simple_moment_family, torus_limit, triangle_moment)


def random_function(spec, rng, bounded=True):
    z = rng.normal(size=spec.order) + 1j * rng.normal(size=spec.order)
    if bounded:
        z /= np.maximum(1, np.abs(z))
    return GroupFunction(spec, z)


terms = st.lists(st.tuples(st.integers(1, 7), st.integers(0, 2), st.integers(0, 2))
                 .filter(lambda t: t[1] + t[2] >= 1), min_size=1, max_size=4)


def test_moment_basics():
    M = triangle_moment()
    assert M.simple and M.degree == 1 and M.total_degree == 3
    assert str(M) == "f12*f13*f23"
    assert Moment.from_json(M.to_json()) == M
    assert json.loads(M.to_json())["terms"][0] == {"S": [1, 2], "a": 1, "b": 0}
    for bad in [((), 1, 0), ((4,), 1, 0), ((1,), 0, 0), ((1,), -1, 2)]:
        with pytest.raises(StructuralError):
            Moment(3, (bad,))
    with pytest.raises(StructuralError):
        Moment.from_dict({"n": 3})


@pytest.mark.parametrize("moduli", [(5,), (2, 3), (4,)])
@given(terms=terms, seed=st.integers(0, 2**31))
def test_methods_agree_with_brute_force(moduli, terms, seed):
    spec = GroupSpec(moduli)
    f = random_function(spec, np.random.default_rng(seed))
    M = Moment(3, tuple(terms))
    ref = brute_moment(f, M)
    for method in ("exact", "fourier", "auto"):
        assert moment_value(f, M, method) == pytest.approx(ref, abs=1e-10)


def test_triangle_moment_of_a_character_is_one():
    spec = GroupSpec((7,))
    chi = GroupFunction(spec, np.exp(2j * np.pi * np.arange(7) / 7))
    assert moment_value(chi, Moment(2, (((1,), 1, 0), ((2,), 1, 0), ((1, 2), 0, 1)))) == pytest.approx(1)
    # a single term averages a character to zero
    assert moment_value(chi, Moment(1, (((1,), 1, 0),))) == pytest.approx(0, abs=1e-12)


def test_symmetries(rng):
    spec = GroupSpec((6,))
    f = random_function(spec, rng)
    # x -> 5x is an automorphism of Z_6, and x_i -> 5 x_i fixes the moment
    dilated = GroupFunction(spec, f.values[(5 * np.arange(6)) % 6])
    conj = GroupFunction(spec, np.conj(f.values))
    neg = GroupFunction(spec, -f.values)
    for M in moment_family(2, power_cap=2)[:200]:
        v = moment_value(f, M)
        flipped = Moment(M.n, tuple((m, b, a) for m, a, b in M.terms))
        assert moment_value(conj, M) == pytest.approx(moment_value(f, flipped), abs=1e-10)
        assert moment_value(neg, M) == pytest.approx((-1) ** M.total_degree * v, abs=1e-10)
        assert moment_value(dilated, M) == pytest.approx(v, abs=1e-10)


def test_distribution_moments(rng):
    spec = GroupSpec((5,))
    f = random_function(spec, rng)
    D = distribution(f, 3)
    assert D.exact and D.count == 125 and D.samples.shape == (125, 7)
    assert D.subsets[2] == (1, 2)
    for M in [triangle_moment(), Moment(3, (((1, 2, 3), 2, 1), ((2,), 0, 1)))]:
        assert D.moment(M) == pytest.approx(brute_moment(f, M), abs=1e-12)
    S = distribution(f, 3, method="sample", samples=4000, seed=5)
    assert not S.exact and S.count == 4000
    assert np.array_equal(S.samples, distribution(f, 3, method="sample", samples=4000, seed=5).samples)


def test_monte_carlo_within_four_sigma(rng):
    spec = GroupSpec((11,))
    f = random_function(spec, rng)
    M = triangle_moment()
    exact = moment_value(f, M, "exact")
    est, se = moment_estimate(f, M, 20000, seed=9)
    assert abs(est - exact) <= 4 * se
    assert moment_value(f, M, "monte_carlo", samples=20000, seed=9) == est
    with pytest.raises(StructuralError):
        moment_value(f, M, "monte_carlo")


def test_moment_family_counts():
    assert len(simple_moment_family(3)) == 3**7 - 1
    assert len(simple_moment_family(3, degree_cap=1)) == 3**6 - 1
    assert len(moment_family(2, power_cap=2)) == 6**3 - 1
    fam = moment_family(3, degree_cap=0, power_cap=1)
    assert all(M.degree == 0 for M in fam) and len(fam) == 3**3 - 1


def test_discrepancy_examples(rng):
    spec = GroupSpec((5,))
    f = random_function(spec, rng)
    assert moment_discrepancy(f, f).value == 0
    reflected = GroupFunction(spec, f.values[(-np.arange(5)) % 5])
    assert moment_discrepancy(f, reflected, n=2).value < 1e-12
    g = random_function(spec, rng)
    d = moment_discrepancy(f, g, n=2)
    assert d.value > 0.01
    assert abs(moment_value(f, d.witness) - moment_value(g, d.witness)) == pytest.approx(d.value)


def test_convergence_scan():
    spec = GroupSpec((7,))
    base = GroupFunction(spec, np.exp(2j * np.pi * np.arange(7) ** 2 / 7))
    seq = [GroupFunction(spec, base.values * (1 - 2.0**-i)) for i in range(1, 30)]
    scan = convergence_scan(seq, degree_cap=1, n=2, tol=1e-3)
    assert scan.all_converged
    osc = [GroupFunction(spec, base.values * (-1) ** i) for i in range(10)]
    scan = convergence_scan(osc, degree_cap=1, n=2, tol=1e-6)
    assert not scan.all_converged
    assert all(c == (M.total_degree % 2 == 0) for M, c in zip(scan.family, scan.converged))
    lines = scan.to_csv().strip().split("\n")
    assert lines[0].startswith("moment,step") and len(lines) == 1 + 10 * len(scan.family)


def test_chi_plus_chi_power_limit():
    m = 17
    f = chi_plus_chi_power(m, 5)
    assert f.values[1] == pytest.approx(np.exp(2j * np.pi / m) + np.exp(10j * np.pi / m))
    assert torus_limit(m).group.moduli == (m, m)
    matches, disc = search_limit_exponents(m)
    assert 2 not in matches and disc[2] > 0.1
    for j in matches:
        # no additive relation of small height between 1 and j
        assert all((a + b * j) % m for a in range(-3, 4) for b in range(-3, 4) if (a, b) != (0, 0)
                   and abs(a) + abs(b) <= 3)


def test_distribution_matches_moment_value_z4(rng):
    f = random_function(GroupSpec((4,)), rng)
    D = distribution(f, 2)
    for M in moment_family(2, power_cap=2):
        assert D.moment(M) == pytest.approx(moment_value(f, M), abs=1e-9)
