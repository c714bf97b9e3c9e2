import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hofa import StructuralError
from hofa.abelian import Character, GroupSpec
from hofa.cubespace import all_cubes, degree_cube_mask, random_degree_cube, random_punctured_degree_map
from hofa.nilspace import (CubespaceOracle, FilteredGroup, PolynomialMap, character_component,
                           check_nilspace_axioms, corner_complete, degree_cube_space, dual_cube_orthogonality,
                           filtered_cube_mask, filtered_group_space, fourier_components, gray_code_masks,
                           gray_code_order, gray_code_product, gray_code_property, gray_products, hk_contains,
                           hk_count, hk_enumerate, hk_rooted_cubes, hk_sample, is_filtered_cube, is_morphism,
                           is_polynomial_of_degree, polynomial_basis)

H3 = FilteredGroup.heisenberg(3)


def heis_matrix(p, idx):
    a, b, c = idx // (p * p), (idx // p) % p, idx % p
    return np.array([[1, a, c], [0, 1, b], [0, 0, 1]], dtype=np.int64)


def matrix_gray_product(p, labels):
    # oracle: explicit 3x3 integer matrices mod p, inverse by the adjugate formula
    n = int(np.log2(len(labels)))
    acc = np.eye(3, dtype=np.int64)
    for i, v in enumerate(gray_code_masks(n), start=1):
        M = heis_matrix(p, labels[v])
        if i % 2:
            a, b, c = M[0, 1], M[1, 2], M[0, 2]
            M = np.array([[1, -a, a * b - c], [0, 1, -b], [0, 0, 1]])
        acc = acc @ M % p
    return acc


def test_gray_code_order_examples():
    assert gray_code_order(1) == [(0,), (1,)]
    assert gray_code_order(2) == [(0, 0), (1, 0), (1, 1), (0, 1)]
    with pytest.raises(StructuralError):
        gray_code_order(0)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_gray_code_is_adjacent_bijection(n):
    order = gray_code_order(n)
    assert len(set(order)) == 2**n
    for u, v in zip(order, order[1:]):
        assert sum(a != b for a, b in zip(u, v)) == 1


def test_gray_code_recursion():
    # g_n((v,1)) = 2^n + 1 - g_{n-1}(v), with the new coordinate as the highest bit
    for n in range(2, 6):
        rank = {v: i for i, v in enumerate(gray_code_masks(n), start=1)}
        prev = {v: i for i, v in enumerate(gray_code_masks(n - 1), start=1)}
        for v, r in prev.items():
            assert rank[v] == r
            assert rank[v | 1 << (n - 1)] == 2**n + 1 - r


def test_gray_code_property_examples():
    assert gray_code_property([5] * 8, H3, modulo=[H3.identity])
    spec = GroupSpec((5,))
    A = FilteredGroup.abelian(spec)
    for labels in itertools.product(range(5), repeat=4):
        alt = (labels[0] - labels[1] - labels[2] + labels[3]) % 5
        assert gray_code_property(list(labels), A, modulo=[0]) == (alt == 0)


def test_gray_code_heisenberg_against_matrices(rng):
    for n in (2, 3):
        labels = rng.integers(27, size=(50, 2**n))
        prods = gray_products(H3, labels)
        for row, prod in zip(labels, prods):
            assert np.array_equal(heis_matrix(3, int(prod)), matrix_gray_product(3, row))
            generic = gray_code_product(list(row), H3.mul, H3.inv, H3.identity)
            assert int(generic) == int(prod)


def test_filtered_group_validation():
    assert H3.order == 27 and H3.k == 3 and H3.degree == 2
    assert H3.filtration_ok() and all(H3.is_normal_level(i) for i in range(4))
    r = list(range(27))
    with pytest.raises(StructuralError):  # [F, F] is not trivial
        FilteredGroup(H3.table, [r, r, [0]])
    with pytest.raises(StructuralError):  # not a subgroup
        FilteredGroup(H3.table, [r, [0, 1], [0]])
    G = FilteredGroup.from_dict(json.loads(json.dumps(H3.to_dict())))
    assert np.array_equal(G.table, H3.table) and np.array_equal(G.levels, H3.levels)


def test_is_filtered_cube_examples():
    assert is_filtered_cube([0] * 8, H3)
    assert filtered_cube_mask(H3, hk_sample(H3, 3, seed=1, size=200)).all()
    spec = GroupSpec((2,))
    A = FilteredGroup.abelian(spec)
    grid = np.array(list(itertools.product(range(2), repeat=4)))
    assert np.array_equal(filtered_cube_mask(A, grid), degree_cube_mask(spec, grid, 1))


def test_abelian_higher_degree_filtration_matches_degree_cubes():
    spec = GroupSpec((3,))
    A2 = FilteredGroup.abelian(spec, degree=2)
    grid = np.array(list(itertools.product(range(3), repeat=8)))
    assert np.array_equal(filtered_cube_mask(A2, grid), degree_cube_mask(spec, grid, 2))


def test_hk_examples():
    assert hk_enumerate(H3, 0).ravel().tolist() == list(range(27))
    spec = GroupSpec((4,))
    A = FilteredGroup.abelian(spec)
    cubes = hk_enumerate(A, 2)
    assert len(cubes) == 4**3 == hk_count(A, 2)
    assert {tuple(r) for r in cubes} == {tuple(r) for r in all_cubes(spec, 2)}
    samples = hk_sample(H3, 2, seed=3, size=300)
    assert filtered_cube_mask(H3, samples).all()


def test_hk_enumerate_matches_gray_code_exhaustively_small():
    H2 = FilteredGroup.heisenberg(2)
    for n in (1, 2):
        grid = np.array(list(itertools.product(range(8), repeat=2**n)))
        gray = {tuple(r) for r in grid[filtered_cube_mask(H2, grid)]}
        gen = {tuple(r) for r in hk_enumerate(H2, n)}
        assert gray == gen
        assert np.array_equal(hk_contains(H2, grid), filtered_cube_mask(H2, grid))


def test_hk_enumerate_n3_z2():
    H2 = FilteredGroup.heisenberg(2)
    cubes = hk_enumerate(H2, 3)
    assert len(cubes) == hk_count(H2, 3) == 8**4 * 2**3
    assert filtered_cube_mask(H2, cubes).all() and hk_contains(H2, cubes).all()
    rooted = hk_rooted_cubes(H2, 3)
    full = H2.mul(np.arange(8)[:, None, None], rooted[None, :, :]).reshape(-1, 8)
    assert {tuple(r) for r in full} == {tuple(r) for r in cubes}


@given(st.integers(0, 2**31))
def test_hk_contains_agrees_with_gray_code_on_perturbed_samples(seed):
    rng = np.random.Generator(np.random.Philox(seed))
    cubes = hk_sample(H3, 3, seed=rng, size=50)
    bumped = cubes.copy()
    rows = np.arange(50)
    cols = rng.integers(8, size=50)
    bumped[rows, cols] = H3.mul(bumped[rows, cols], rng.integers(27, size=50))
    for batch in (cubes, bumped):
        assert np.array_equal(hk_contains(H3, batch), filtered_cube_mask(H3, batch))


def test_axioms_examples():
    rep = check_nilspace_axioms(degree_cube_space(GroupSpec((2,)), 1), 1, 3)
    assert rep.passed and rep.completion_counts[2] == [1]
    rep = check_nilspace_axioms(degree_cube_space(GroupSpec((3,)), 2), 2, 3)
    assert rep.passed and rep.completion_counts[3] == [1] and rep.completion_counts[2] == [3]
    rep = check_nilspace_axioms(degree_cube_space(GroupSpec((3,)), 2), 1, 3)
    assert not rep.uniqueness and rep.witnesses["uniqueness"]["n"] == 2
    assert rep.witnesses["uniqueness"]["completions"] == 3
    assert json.loads(json.dumps(rep.to_dict()))["passed"] is False


def test_axioms_generic_oracle_failures():
    # every labelling a cube: a nilspace of no finite step
    free = CubespaceOracle(2, lambda n, labels: np.ones(len(labels), dtype=bool), max_dim=3)
    rep = check_nilspace_axioms(free, 1, 2)
    assert rep.composition and rep.ergodicity and rep.gluing and not rep.uniqueness
    # only constant maps: ergodicity fails
    const = CubespaceOracle(3, lambda n, labels: np.all(labels == labels[:, :1], axis=1), max_dim=3)
    rep = check_nilspace_axioms(const, 1, 2)
    assert not rep.ergodicity and rep.witnesses["ergodicity"][0] != rep.witnesses["ergodicity"][1]


def test_axioms_generic_composition_failure():
    # cubes of Z_4 plus one extra 1-dimensional cube family that is not closed under reflection
    spec = GroupSpec((4,))

    def member(n, labels):
        ok = degree_cube_mask(spec, labels, 1)
        if n == 2:
            ok |= np.all(labels == [0, 1, 1, 1], axis=1)
        return ok

    rep = check_nilspace_axioms(CubespaceOracle(4, member, max_dim=3), 1, 2)
    assert not rep.composition and "composition" in rep.witnesses


def test_corner_complete_examples():
    Z5 = GroupSpec((5,))
    D1 = degree_cube_space(Z5, 1)
    assert corner_complete(D1, [1, 3, 4]) == [(3 + 4 - 1) % 5]
    D2 = degree_cube_space(GroupSpec((3,)), 2)
    assert len(corner_complete(D2, [0, 1, 2])) == 3
    c = random_degree_cube(GroupSpec((3,)), 3, 2, 7)
    assert corner_complete(D2, c.labels[:7].tolist()) == [int(c.labels[7])]
    with pytest.raises(StructuralError):
        corner_complete(D1, [0, 0, 1, 0, 0, 0, 0])  # face v_1 = 0 is not a cube


@pytest.mark.parametrize("space", ["D1Z4", "D2Z2"])
def test_completion_counts(space):
    spec, k = (GroupSpec((4,)), 1) if space == "D1Z4" else (GroupSpec((2,)), 2)
    rep = check_nilspace_axioms(degree_cube_space(spec, k), k, k + 1)
    assert rep.completion_counts[k] == [spec.order]
    assert rep.completion_counts[k + 1] == [1]


def test_heisenberg_nilspace_z2():
    rep = check_nilspace_axioms(filtered_group_space(FilteredGroup.heisenberg(2)), 2, 3)
    assert rep.passed and rep.completion_counts[3] == [1] and rep.completion_counts[2] == [2]


def test_polynomial_basis_examples():
    Zm = GroupSpec((6,))
    basis0 = polynomial_basis(2, 0, Zm)
    assert len(basis0) == 1 and np.all(basis0[0].table == Zm.index([1]))
    basis1 = polynomial_basis(1, 1, Zm)
    assert [p.label for p in basis1] == ["e1*C(x1,0)", "e1*C(x1,1)"]
    assert basis1[1].table.tolist() == [0, 1, 2]
    for n, k, A in [(1, 2, GroupSpec((4,))), (2, 2, GroupSpec((2, 3))), (2, 3, GroupSpec((5,)))]:
        basis = polynomial_basis(n, k, A)
        assert all(is_polynomial_of_degree(p, k) for p in basis)
        assert len(basis) == A.rank * sum(len(list(itertools.combinations_with_replacement(range(n), d)))
                                          for d in range(k + 1))


def test_polynomial_closure(rng):
    A = GroupSpec((7,))
    basis = polynomial_basis(2, 3, A, box=6)
    by_degree = {}
    for p in basis:
        d = sum(int(ch) for ch in p.label.replace(")", ",").split(",")[1::2] if ch.strip().isdigit())
        by_degree.setdefault(d, []).append(p)
    for _ in range(10):
        i, j = rng.integers(len(basis), size=2)
        assert is_polynomial_of_degree(basis[i] + basis[j], 3)
    for a in by_degree[1]:
        for b in by_degree[2]:
            assert is_polynomial_of_degree(a.times(b), 3)
            assert not is_polynomial_of_degree(a.times(b), 2) or not np.any(a.table) or not np.any(b.table)


def test_is_polynomial_examples():
    Z4 = GroupSpec((4,))
    const = PolynomialMap.from_callable(1, Z4, lambda x: (3,), box=2)
    assert is_polynomial_of_degree(const, 0)
    sq = PolynomialMap.from_callable(1, Z4, lambda x: (x[0] ** 2,), box=4)
    assert is_polynomial_of_degree(sq, 2) and not is_polynomial_of_degree(sq, 1)
    m = 6
    chi = PolynomialMap.from_callable(GroupSpec((m,)), GroupSpec((m,)), lambda x: (2 * x[0] + 1,))
    assert is_polynomial_of_degree(chi, 1) and not is_polynomial_of_degree(chi, 0)
    with pytest.raises(StructuralError):
        is_polynomial_of_degree(PolynomialMap.from_callable(1, Z4, lambda x: (x[0],), box=2), 1)


def test_polynomial_into_heisenberg():
    x = 9  # (1, 0, 0)
    y = 3  # (0, 1, 0)

    def power(g, n):
        out = H3.identity
        for _ in range(n):
            out = H3.mul(out, g)
        return out

    phi = PolynomialMap.from_callable(1, H3, lambda n: H3.mul(power(x, n[0]), power(y, n[0])), box=5)
    assert is_polynomial_of_degree(phi, 2) and not is_polynomial_of_degree(phi, 1)
    hom = PolynomialMap.from_callable(GroupSpec((3,)), H3, lambda n: power(x, n[0]))
    assert is_polynomial_of_degree(hom, 1)


def test_is_morphism_examples():
    for m in (2, 3, 4):
        spec = GroupSpec((m,))
        assert is_morphism(np.arange(m), spec, degree_cube_space(spec, 1), 3)
        sq = np.arange(m) ** 2 % m
        assert is_morphism(sq, spec, degree_cube_space(spec, 2), 3)
    bad = is_morphism(np.arange(3) ** 2 % 3, GroupSpec((3,)), degree_cube_space(GroupSpec((3,)), 1), 3)
    assert not bad and bad.witness["n"] == 2
    with pytest.raises(StructuralError):
        is_morphism([0, 1], GroupSpec((3,)), degree_cube_space(GroupSpec((3,)), 1), 2)


def test_character_component_examples(rng):
    spec, act = H3.top_action()
    assert spec.order == 3
    chars = list(spec.characters())
    const = np.full(27, 2.5 + 0j)
    assert np.allclose(character_component(const, chars[0], act), const)
    assert np.allclose(character_component(const, chars[1], act), 0)
    f = rng.normal(size=27) + 1j * rng.normal(size=27)
    comps = fourier_components(f, spec, act)
    assert np.allclose(sum(comps.values()), f, atol=1e-9)
    for chi in chars:
        fc = comps[chi.frequencies]
        assert np.allclose(character_component(fc, chi, act), fc, atol=1e-12)
        for other in chars:
            if other != chi:
                assert np.allclose(character_component(fc, other, act), 0, atol=1e-12)
        for b in range(3):
            assert np.allclose(fc[act[:, b]], fc * chi.values()[b], atol=1e-12)


def test_character_component_requires_free_action():
    act = np.array([[0, 0], [1, 0]])
    with pytest.raises(StructuralError):
        character_component(np.ones(2), Character(GroupSpec((2,)), (1,)), act)


def test_dual_cube_examples():
    Z5 = GroupSpec((5,))
    assert dual_cube_orthogonality(Z5, 2, 1, [0] * 4, random_degree_cube(Z5, 2, 1, 0)).value == pytest.approx(1)
    dual = random_degree_cube(Z5, 2, 1, 1)
    res = dual_cube_orthogonality(Z5, 2, 0, dual.labels, [3] * 4)
    assert res.valid and abs(res.value - 1) < 1e-12


@pytest.mark.parametrize("moduli", [(3,), (4,)])
def test_dual_cube_random_valid(moduli, rng):
    spec = GroupSpec(moduli)
    for n in (1, 2, 3):
        for k in range(0, n):
            for _ in range(5):
                c = random_degree_cube(spec, n, k, rng)
                d = random_degree_cube(spec, n, n - k - 1, rng)
                res = dual_cube_orthogonality(spec, n, k, d.labels, c)
                assert res.valid and abs(res.value - 1) < 1e-9
                c0 = random_degree_cube(spec, n, k, rng, base=0)
                dp = random_punctured_degree_map(spec, n, n - k - 1, rng)
                res = dual_cube_orthogonality(spec, n, k, dp, c0, punctured=True)
                assert res.valid and abs(res.value - 1) < 1e-9


def test_dual_cube_reports_violations():
    Z3 = GroupSpec((3,))
    res = dual_cube_orthogonality(Z3, 2, 0, [1, 0, 0, 0], [0, 1, 0, 0])
    assert len(res.violations) == 2 and abs(res.value) == pytest.approx(1)
    res = dual_cube_orthogonality(Z3, 2, 1, [0] * 4, [1, 0, 0, 2], punctured=True)
    assert "cube is not rooted at 0" in res.violations


def test_structure_groups_and_complexity():
    assert H3.structure_group_orders() == (9, 3)
    A = FilteredGroup.abelian(GroupSpec((4,)), degree=2)
    assert A.structure_group_orders() == (1, 4)
    groups = [H3, FilteredGroup.heisenberg(2), A, FilteredGroup.abelian(GroupSpec((4,)))]
    ranked = sorted(groups, key=FilteredGroup.complexity_key)
    assert [g.complexity_key() for g in ranked] == [(4, (1, 4)), (4, (4,)), (8, (4, 2)), (27, (9, 3))]
