"""Exact Heisenberg nilsequence on Z_m.

M has entries a = 2t/m at (1,2), b = 1/m at (2,3) and c = t/m^2 at (1,3).
k -> M^k Gamma is m-periodic into H / Gamma (Gamma = integer matrices), and
the fundamental-domain function A -> e(A_{1,3}) evaluates to e(k^2 t / m^2).
Numerators are Python ints, so nothing overflows.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import csv
import io
import math

import numpy as np

from ._config import StructuralError
from .abelian import GroupFunction, GroupSpec
from .cubespace import all_cubes, faces
from .gowers import gowers_norm
from .nilspace import gray_code_product


@dataclass(frozen=True)
class HeisMatrix:
    """[[1, a_num/m, c_num/m^2], [0, 1, b_num/m], [0, 0, 1]]."""

    m: int
    a_num: int
    b_num: int
    c_num: int

    @classmethod
    def identity(cls, m):
        return cls(m, 0, 0, 0)

    @classmethod
    def generator(cls, m, t):
        return cls(m, 2 * t, 1, t)

    @property
    def a(self):
        return Fraction(self.a_num, self.m)

    @property
    def b(self):
        return Fraction(self.b_num, self.m)

    @property
    def c(self):
        return Fraction(self.c_num, self.m * self.m)

    def entries(self):
        return self.a, self.c, self.b

    def __mul__(self, other):
        return heis_mul(self, other)

    def inverse(self):
        return HeisMatrix(self.m, -self.a_num, -self.b_num, -self.c_num + self.a_num * self.b_num)

    def __pow__(self, k):
        base = self if k >= 0 else self.inverse()
        out = HeisMatrix.identity(self.m)
        k = abs(int(k))
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def is_integral(self):
        return self.a_num % self.m == 0 and self.b_num % self.m == 0 and self.c_num % (self.m * self.m) == 0

    def is_central(self):
        return self.a_num == 0 and self.b_num == 0

    def is_identity(self):
        return self.a_num == 0 and self.b_num == 0 and self.c_num == 0


def heis_mul(X, Y):
    if X.m != Y.m:
        raise StructuralError(f"modulus mismatch {X.m} vs {Y.m}")
    return HeisMatrix(X.m, X.a_num + Y.a_num, X.b_num + Y.b_num, X.c_num + Y.c_num + X.a_num * Y.b_num)


def _check_params(m, t):
    if m < 2 or not 1 < t < m:
        raise StructuralError(f"need 1 < t < m, got m={m}, t={t}")


def tau(k, m, t):
    """M^k, the representative of M^k Gamma before reduction."""
    _check_params(m, t)
    return HeisMatrix.generator(m, t) ** k


@dataclass(frozen=True)
class FundamentalDomainRep:
    """Entries in [0, 1) plus the integral matrix (p, q, r) used to get there."""

    a: Fraction
    b: Fraction
    c: Fraction
    gamma: tuple = field(default=None, compare=False)  # not part of the coset

    def entries(self):
        return self.a, self.c, self.b


def reduce_to_domain(X):
    """X * gamma in the fundamental domain; gamma integral with entries p, q, r.

    Right multiplication by (p, q, r) sends (a, b, c) to (a + p, b + q, c + r + a q):
    first q = -floor(b), then p = -floor(a) and r = -floor(c + a q).
    """
    m = X.m
    q = -(X.b_num // m)
    c_num = X.c_num + X.a_num * q * m
    p = -(X.a_num // m)
    r = -(c_num // (m * m))
    Y = X * HeisMatrix(m, p * m, q * m, r * m * m)
    rep = FundamentalDomainRep(Y.a, Y.b, Y.c, (p, q, r))
    assert all(0 <= v < 1 for v in (rep.a, rep.b, rep.c))
    return rep


def g_phase(rep):
    """The fundamental-domain function A -> e(A_{1,3}), as its exact phase."""
    return rep.c


def closed_form_phase(k, m, t):
    return Fraction((k * k * t) % (m * m), m * m)


def pipeline_phase(k, m, t):
    return g_phase(reduce_to_domain(tau(k, m, t)))


def phase_to_complex(phase):
    return complex(np.exp(2j * np.pi * float(phase)))


def nilsequence_value(k, m, t):
    _check_params(m, t)
    if not 0 <= k < m:
        raise StructuralError(f"need 0 <= k < m, got k={k}")
    return phase_to_complex(closed_form_phase(k, m, t))


def nilsequence_function(m, t):
    """k -> e(k^2 t / m^2) on Z_m, evaluated through the reduction pipeline."""
    _check_params(m, t)
    return GroupFunction(GroupSpec((m,)), [phase_to_complex(pipeline_phase(k, m, t)) for k in range(m)])


def u3_of_heis(m, t, budget=None):
    return gowers_norm(nilsequence_function(m, t), 3, method="direct", budget=budget)


def identity_discrepancies(m, t):
    """Exact differences pipeline - closed form for k in [0, m)."""
    return [pipeline_phase(k, m, t) - closed_form_phase(k, m, t) for k in range(m)]


def table_rows(m, t):
    rows = []
    for k in range(m):
        cf, pp = closed_form_phase(k, m, t), pipeline_phase(k, m, t)
        zc, zp = phase_to_complex(cf), phase_to_complex(pp)
        rows.append([k, str(cf), str(pp), repr(zc.real), repr(zc.imag), repr(zp.real), repr(zp.imag)])
    return rows


TABLE_HEADER = ["k", "closed_phase", "pipeline_phase", "closed_re", "closed_im", "pipeline_re", "pipeline_im"]


def table_csv(m, t):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    w.writerows(table_rows(m, t))
    return buf.getvalue()


# ---------------------------------------------------------------------------
# tau as a morphism Z_m -> H / Gamma


def heis_filtered_cube(labels):
    """Gray code test in H with filtration H, H, centre, {1} on every face of dimension <= 3."""
    n = int(round(math.log2(len(labels))))
    mul = heis_mul
    inv = HeisMatrix.inverse
    ident = HeisMatrix.identity(labels[0].m)
    for d, ok in ((2, HeisMatrix.is_central), (3, HeisMatrix.is_identity)):
        if d > n:
            break
        for face in faces(n, d):
            if not ok(gray_code_product([labels[v] for v in face], mul, inv, ident)):
                return False
    return True


def check_tau_morphism(m, t, n_max=3, budget=None):
    """Every n-cube of Z_m lifts through tau to a cube of H whose cosets are tau of the labels.

    Returns (ok, witness).  The lift uses integer representatives of the cube
    parameters, so the lifted labels are M^{x + sum v_i t_i} with integer exponents.
    """
    _check_params(m, t)
    spec = GroupSpec((m,))
    M = HeisMatrix.generator(m, t)
    reps = {k: reduce_to_domain(M ** k) for k in range(m)}
    for n in range(1, n_max + 1):
        for labels in all_cubes(spec, n, budget):
            x = int(labels[0])
            steps = [(int(labels[1 << i]) - x) % m for i in range(n)]
            exps = [x + sum(s for i, s in enumerate(steps) if (v >> i) & 1) for v in range(2**n)]
            lifted = [M ** e for e in exps]
            if any(reduce_to_domain(L) != reps[int(lab)] for L, lab in zip(lifted, labels)):
                return False, {"n": n, "cube": labels.tolist(), "reason": "coset mismatch"}
            if not heis_filtered_cube(lifted):
                return False, {"n": n, "cube": labels.tolist(), "reason": "lift is not a cube"}
    return True, None
