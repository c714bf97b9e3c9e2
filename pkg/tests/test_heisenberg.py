from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hofa import StructuralError
from hofa.heisenberg import (TABLE_HEADER, HeisMatrix, check_tau_morphism, closed_form_phase,
                             heis_filtered_cube, identity_discrepancies, nilsequence_function,
                             nilsequence_value, pipeline_phase, reduce_to_domain, table_csv, tau, u3_of_heis)

params = st.integers(3, 40).flatmap(lambda m: st.tuples(st.just(m), st.integers(2, m - 1)))


def as_matrix(X):
    a, c, b = X.entries()
    return [[Fraction(1), a, c], [Fraction(0), Fraction(1), b], [Fraction(0), Fraction(0), Fraction(1)]]


def matmul(A, B):
    return [[sum(A[i][l] * B[l][j] for l in range(3)) for j in range(3)] for i in range(3)]


def test_generator_entries():
    M = HeisMatrix.generator(5, 3)
    assert M.entries() == (Fraction(6, 5), Fraction(3, 25), Fraction(1, 5))


@given(params, st.integers(-30, 30), st.integers(-30, 30))
def test_multiplication_matches_fraction_matrices(mt, j, k):
    m, t = mt
    X, Y = tau(j, m, t), tau(k, m, t)
    assert as_matrix(X * Y) == matmul(as_matrix(X), as_matrix(Y))
    assert (X * X.inverse()).is_identity()
    assert X * Y == tau(j + k, m, t)


@given(params, st.integers(-50, 50))
def test_power_closed_form(mt, k):
    # M^k has entries 2tk/m, k/m and t k^2 / m^2
    m, t = mt
    a, c, b = tau(k, m, t).entries()
    assert (a, b, c) == (Fraction(2 * t * k, m), Fraction(k, m), Fraction(t * k * k, m * m))


@given(params, st.integers(-200, 200))
def test_reduction_lands_in_domain_and_stays_in_coset(mt, k):
    m, t = mt
    X = tau(k, m, t)
    rep = reduce_to_domain(X)
    assert all(0 <= v < 1 for v in rep.entries())
    p, q, r = rep.gamma
    gamma = HeisMatrix(m, p * m, q * m, r * m * m)
    assert gamma.is_integral()
    assert (X * gamma).entries() == rep.entries()


@given(params, st.integers(0, 100))
def test_pipeline_matches_closed_form(mt, k):
    # the closed form is stated on representatives 0 <= k < m
    m, t = mt
    k %= m
    assert pipeline_phase(k, m, t) == closed_form_phase(k, m, t)


@given(params, st.integers(-100, 100))
def test_orbit_is_periodic(mt, k):
    m, t = mt
    assert reduce_to_domain(tau(k + m, m, t)) == reduce_to_domain(tau(k, m, t))


def test_identity_discrepancies_vanish():
    for m in range(3, 25):
        for t in range(2, m):
            assert not any(identity_discrepancies(m, t))


def test_table_k3():
    text = table_csv(5, 2)
    lines = text.strip().split("\n")
    assert lines[0].split(",") == TABLE_HEADER
    assert len(lines) == 6
    row = lines[4].split(",")
    assert row[:3] == ["3", "18/25", "18/25"]
    assert float(row[3]) == pytest.approx(np.cos(2 * np.pi * 18 / 25))


def test_values_and_parameter_checks():
    assert nilsequence_value(0, 7, 3) == 1
    assert nilsequence_value(2, 7, 3) == pytest.approx(np.exp(2j * np.pi * 12 / 49))
    f = nilsequence_function(7, 3)
    assert np.allclose(np.abs(f.values), 1)
    for m, t in [(5, 1), (5, 5), (1, 0)]:
        with pytest.raises(StructuralError):
            tau(1, m, t)
    with pytest.raises(StructuralError):
        nilsequence_value(7, 7, 3)


def test_u3_is_large():
    assert u3_of_heis(8, 4) == pytest.approx(1.0)
    for m, t in [(8, 3), (12, 5), (16, 3)]:
        assert 0.5 < u3_of_heis(m, t) <= 1 + 1e-12


@pytest.mark.parametrize("m,t", [(5, 2), (6, 5), (4, 3)])
def test_tau_is_a_morphism(m, t):
    ok, witness = check_tau_morphism(m, t, n_max=3)
    assert ok and witness is None


def test_filtered_cube_detects_non_cubes():
    m = 5
    M = HeisMatrix.generator(m, 2)
    line = [M ** e for e in (0, 1, 1, 2)]
    assert heis_filtered_cube(line)
    # a non-quadratic exponent pattern breaks the degree-2 condition on a 3-face
    labels = [M ** (e * e * e) for e in (0, 1, 1, 2, 1, 2, 2, 3)]
    assert not heis_filtered_cube(labels)
