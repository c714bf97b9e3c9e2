"""Fourier regularization at k = 1, polynomial phase dictionaries and correlation search.

Wrapping phases on Z_m are e(P(x)/m) with P = sum_j c_j binom(x, j), kept only
when P(x + m) = P(x) mod m, so that the phase is a genuine function on Z_m
whose (k+1)-fold differences vanish.  Degree-2 dictionaries also carry the
Heisenberg nilsequences x -> e(x^2 t / m^2), which are not wrapping.
"""

from dataclasses import dataclass, field
from itertools import product
import math

import numpy as np

from ._config import InvariantFailure, StructuralError
from .abelian import GroupFunction, GroupSpec, dft, e, inverse_dft
from .gowers import gowers_norm
from .heisenberg import nilsequence_function


@dataclass
class Decomposition:
    f: GroupFunction
    f_s: GroupFunction
    f_e: GroupFunction
    f_r: GroupFunction
    kept: np.ndarray  # frequency indices in f_s
    meta: dict = field(default_factory=dict)

    def residual(self):
        return float(np.max(np.abs(self.f.values - self.f_s.values - self.f_e.values - self.f_r.values)))


def fourier_regularize(f, delta):
    """f_s = characters with |lambda| >= delta, f_e = 0, f_r = the rest.

    At most 1/delta^2 characters are kept (Parseval, |f| <= 1) and
    ||f_r||_{U_2}^4 = sum_{small} |lambda|^4 <= delta^2 ||f||_2^2.
    """
    if not 0 < delta <= 1:
        raise StructuralError("delta must lie in (0, 1]")
    if f.sup_norm() > 1 + 1e-12:
        raise StructuralError("fourier_regularize needs |f| <= 1")
    lam = dft(f)
    keep = np.abs(lam) >= delta
    f_s = inverse_dft(np.where(keep, lam, 0), f.group)
    f_r = GroupFunction(f.group, f.values - f_s.values)
    return Decomposition(f, f_s, GroupFunction.constant(f.group, 0), f_r, np.flatnonzero(keep),
                         {"delta": delta, "kept": int(keep.sum())})


# ---------------------------------------------------------------------------
# phase dictionaries


@dataclass(eq=False)
class PhaseEntry:
    function: GroupFunction
    kind: str  # "wrapping" or "heisenberg"
    degree: int  # actual degree (wrapping) or 2 (heisenberg)
    params: tuple  # binomial coefficients (c_1..c_k) or (m, t)
    description: str = ""

    @property
    def wrapping(self):
        return self.kind == "wrapping"


def wraps(coeffs, m):
    """P(x) = sum_j coeffs[j-1] binom(x, j) satisfies P(x + m) = P(x) mod m on a full window."""
    k = len(coeffs)
    for x in range(k + 1):  # a degree-k difference identity is decided by k+1 points
        P0 = sum(c * math.comb(x, j) for j, c in enumerate(coeffs, start=1))
        P1 = sum(c * math.comb(x + m, j) for j, c in enumerate(coeffs, start=1))
        if (P1 - P0) % m:
            return False
    return True


def _binomial_phase(coeffs, m):
    """Numerators P(x) mod m for x in [0, m)."""
    return np.array([sum(c * math.comb(x, j) for j, c in enumerate(coeffs, start=1)) % m
                     for x in range(m)], dtype=np.int64)


@dataclass
class PhaseDictionary:
    m: int
    k: int
    entries: list

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @classmethod
    def build(cls, m, k, heisenberg=True):
        """Distinct nonconstant wrapping phases of degree <= k, ordered by (degree, coefficients);
        Heisenberg entries (t = 2..m-1) last when k >= 2."""
        if m < 2 or k < 1:
            raise StructuralError("need m >= 2 and k >= 1")
        spec = GroupSpec((m,))
        seen, wrapping = set(), []
        for coeffs in product(range(m), repeat=k):
            if not any(coeffs) or not wraps(coeffs, m):
                continue
            num = _binomial_phase(coeffs, m)
            key = tuple(num.tolist())
            if key in seen:
                continue
            seen.add(key)
            deg = max(j for j, c in enumerate(coeffs, start=1) if c)
            desc = "e((" + " + ".join(f"{c}*C(x,{j})" for j, c in enumerate(coeffs, start=1) if c) + f")/{m})"
            wrapping.append(PhaseEntry(GroupFunction(spec, e(num / m)), "wrapping", deg,
                                       tuple(coeffs), desc))
        wrapping.sort(key=lambda q: (q.degree, q.params[::-1]))
        entries = list(wrapping)
        if heisenberg and k >= 2:
            for t in range(2, m):
                entries.append(PhaseEntry(nilsequence_function(m, t), "heisenberg", 2, (m, t),
                                          f"e(x^2*{t}/{m}^2)"))
        return cls(m, k, entries)


def _require_wrapping(q):
    if not isinstance(q, PhaseEntry) or not q.wrapping:
        raise StructuralError("expected a wrapping phase dictionary entry")


def phase_multiply_invariance(f, q, k=None):
    """(||f||_{U_{k+1}}, ||f q||_{U_{k+1}}) for a wrapping phase q of degree <= k."""
    _require_wrapping(q)
    k = q.degree if k is None else k
    if q.degree > k:
        raise StructuralError(f"phase of degree {q.degree} exceeds k = {k}")
    return gowers_norm(f, k + 1), gowers_norm(f * q.function, k + 1)


@dataclass
class CorrelationResult:
    best: PhaseEntry
    value: complex  # (f, best) = E f conj(best)
    ranked: list  # rows (index, description, |corr|, re, im)


def correlation_search(f, dictionary):
    """Entries ranked by |(f, g)|; ties keep dictionary order."""
    entries = list(dictionary)
    if not entries:
        raise StructuralError("empty dictionary")
    corr = [f.inner(q.function) for q in entries]
    # rounding makes float noise irrelevant for tie breaking
    order = sorted(range(len(entries)), key=lambda i: (-round(abs(corr[i]), 12), i))
    ranked = [(i, entries[i].description, abs(corr[i]), corr[i].real, corr[i].imag) for i in order]
    return CorrelationResult(entries[order[0]], corr[order[0]], ranked)


@dataclass
class LowerBound:
    norm: float
    correlation: float
    margin: float

    @property
    def holds(self):
        return self.margin >= -1e-9

    def __bool__(self):
        return self.holds


def inverse_lower_bound_check(f, g, k=None, strict=True):
    """||f||_{U_{k+1}} >= |(f, g)| for a wrapping phase g of degree <= k; margin = lhs - rhs."""
    _require_wrapping(g)
    k = g.degree if k is None else k
    norm = gowers_norm(f, k + 1)
    corr = abs(f.inner(g.function))
    res = LowerBound(norm, corr, norm - corr)
    if strict and not res.holds:
        raise InvariantFailure(f"U_{k + 1} lower bound violated by {res.margin}")
    return res
