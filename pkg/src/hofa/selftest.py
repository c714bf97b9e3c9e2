"""Fast invariant suite behind ``hofa selftest``: small instances of every module's checks."""

import numpy as np

from ._config import make_rng
from .abelian import Character, GroupFunction, GroupSpec, dft, inverse_dft
from .approx import lowrank_approx
from .cubespace import random_degree_cube
from .decompose import PhaseDictionary, fourier_regularize, inverse_lower_bound_check, phase_multiply_invariance
from .gowers import FunctionSystem, check_identities, gowers_inner, gowers_norm
from .heisenberg import check_tau_morphism, identity_discrepancies
from .moments import distribution, moment_family, moment_value
from .nilspace import (FilteredGroup, check_nilspace_axioms, degree_cube_space, dual_cube_orthogonality,
                       filtered_cube_mask, hk_contains, hk_enumerate, hk_sample)


def _fourier_roundtrip():
    f = GroupFunction.random_bounded(GroupSpec((4, 6)), 1)
    return float(np.max(np.abs(inverse_dft(dft(f), f.group).values - f.values))) < 1e-12


def _u2_methods():
    f = GroupFunction.random_unimodular(GroupSpec((16,)), 2)
    vals = [gowers_norm(f, 2, m) for m in ("direct", "recursive", "fourier2")]
    return max(vals) - min(vals) < 1e-9


def _ladder():
    f = GroupFunction.random_bounded(GroupSpec((6,)), 3)
    u = [gowers_norm(f, k) for k in (2, 3)]
    return u[0] <= u[1] + 1e-9 and u[1] <= f.lp_norm(4) + 1e-9


def _gcs():
    G = FunctionSystem.random(GroupSpec((4,)), 2, rng=4, unimodular=False)
    bound = np.prod([gowers_norm(G[v], 2) for v in G.vertices])
    return abs(gowers_inner(G)) <= bound + 1e-9


def _identities():
    G = FunctionSystem.random(GroupSpec((3,)), 2, rng=5)
    return max(check_identities(G).values()) <= 1e-9


def _dual_cubes():
    rng = make_rng(6)
    spec = GroupSpec((3,))
    for _ in range(10):
        c = random_degree_cube(spec, 3, 1, rng, base=0)
        d = random_degree_cube(spec, 3, 1, rng)
        r = dual_cube_orthogonality(spec, 3, 1, d.labels, c)
        if not r.valid or abs(r.value - 1) > 1e-9:
            return False
    return True


def _nilspace():
    rep = check_nilspace_axioms(degree_cube_space(GroupSpec((3,)), 2), 2, 3)
    return rep.passed and rep.completion_counts[3] == [1] and rep.completion_counts[2] == [3]


def _gray_vs_generative():
    H = FilteredGroup.heisenberg(3)
    cubes = hk_enumerate(H, 2)
    samples = hk_sample(H, 3, seed=7, size=200)
    return bool(filtered_cube_mask(H, cubes).all() and filtered_cube_mask(H, samples).all()
                and hk_contains(H, samples).all())


def _heisenberg():
    return not any(any(identity_discrepancies(m, t)) for m in range(3, 10) for t in range(2, m)) \
        and check_tau_morphism(4, 3, 2)[0]


def _lowrank():
    F = FunctionSystem.random(GroupSpec((4,)), 2, "punctured", rng=8)
    return lowrank_approx(F, 0.5, seed=8).error <= 0.5


def _moments():
    f = GroupFunction.random_bounded(GroupSpec((4,)), 9)
    D = distribution(f, 2)
    fam = moment_family(2, 1, 1)
    return all(abs(D.moment(M) - moment_value(f, M, "exact")) < 1e-9 for M in fam) \
        and all(abs(moment_value(f, M, "fourier") - moment_value(f, M, "exact")) < 1e-9 for M in fam)


def _regularize():
    f = GroupFunction.random_bounded(GroupSpec((16,)), 10)
    d = fourier_regularize(f, 0.3)
    return (d.residual() < 1e-12 and abs(d.f_r.inner(d.f_s)) < 1e-12
            and gowers_norm(d.f_r, 2) <= (0.09 * f.lp_norm(2) ** 2) ** 0.25 + 1e-9)


def _converse():
    f = GroupFunction.random_bounded(GroupSpec((7,)), 11)
    for q in PhaseDictionary.build(7, 2, heisenberg=False):
        a, b = phase_multiply_invariance(f, q, 2)
        if abs(a - b) > 1e-9 or not inverse_lower_bound_check(f, q, 2, strict=False):
            return False
    return True


def _characters():
    spec = GroupSpec((5,))
    chi = Character(spec, (2,))
    return abs(chi.as_function().mean()) < 1e-12


CHECKS = [
    ("fourier_roundtrip", _fourier_roundtrip),
    ("character_orthogonality", _characters),
    ("u2_method_agreement", _u2_methods),
    ("norm_ladder", _ladder),
    ("gowers_cauchy_schwarz", _gcs),
    ("convolution_identities", _identities),
    ("dual_cube_orthogonality", _dual_cubes),
    ("nilspace_axioms_D2_Z3", _nilspace),
    ("gray_code_vs_generative", _gray_vs_generative),
    ("heisenberg_identity", _heisenberg),
    ("lowrank_approximation", _lowrank),
    ("moment_consistency", _moments),
    ("fourier_regularization", _regularize),
    ("exact_converse", _converse),
]


def run():
    """[(name, passed, error message or None)] in fixed order."""
    results = []
    for name, fn in CHECKS:
        try:
            results.append((name, bool(fn()), None))
        except Exception as exc:  # a crash counts as a failure
            results.append((name, False, f"{type(exc).__name__}: {exc}"))
    return results
