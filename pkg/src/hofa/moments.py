"""Pattern moments, joint subset-sum distributions and convergence scans.

A moment on n variables is a list of terms (S, a, b), S a nonempty subset of
{1..n}; its value on f is E_{x_1..x_n} prod_terms h(sum_{i in S} x_i) with
h = f^a conj(f)^b.  Subsets are encoded as bitmasks (variable i is bit i-1)
and distributions index their columns by masks 1..2^n - 1.
"""

from dataclasses import dataclass, field
from itertools import product
import csv
import io
import json
import math

import numpy as np

from ._config import StructuralError, check_budget, make_rng
from .abelian import GroupFunction, GroupSpec, dft, e

# ---------------------------------------------------------------------------
# moments


def _mask(S):
    if isinstance(S, (int, np.integer)):
        return int(S)
    m = 0
    for i in S:
        m |= 1 << (int(i) - 1)
    return m


def _subset(mask):
    return tuple(i + 1 for i in range(mask.bit_length()) if (mask >> i) & 1)


@dataclass(frozen=True)
class Moment:
    n: int
    terms: tuple  # of (mask, a, b)

    def __post_init__(self):
        if not self.terms:
            raise StructuralError("a moment needs at least one term")
        norm = []
        for t in self.terms:
            mask, a, b = _mask(t[0]), int(t[1]), int(t[2])
            if mask <= 0 or mask >= 1 << self.n:
                raise StructuralError(f"subset {_subset(mask)} is empty or exceeds {self.n} variables")
            if a < 0 or b < 0 or a + b < 1:
                raise StructuralError("exponents must satisfy a, b >= 0 and a + b >= 1")
            norm.append((mask, a, b))
        object.__setattr__(self, "terms", tuple(norm))

    @property
    def simple(self):
        return all(a + b == 1 for _, a, b in self.terms)

    @property
    def degree(self):
        return max(bin(m).count("1") for m, _, _ in self.terms) - 1

    @property
    def total_degree(self):
        """Sum of a + b over the terms; odd values flip sign under f -> -f."""
        return sum(a + b for _, a, b in self.terms)

    def to_dict(self):
        return {"n": self.n, "terms": [{"S": list(_subset(m)), "a": a, "b": b} for m, a, b in self.terms]}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(int(data["n"]), tuple((tuple(t["S"]), t["a"], t["b"]) for t in data["terms"]))
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"malformed moment JSON: {exc}") from exc

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __str__(self):
        parts = []
        for m, a, b in self.terms:
            s = "".join(map(str, _subset(m)))
            parts.append(f"f{s}" * a + f"F{s}" * b)
        return "*".join(parts)


def triangle_moment():
    return Moment(3, (((1, 2), 1, 0), ((1, 3), 1, 0), ((2, 3), 1, 0)))


def _powered(values, a, b):
    return values**a * np.conj(values) ** b


def _subset_sum_indices(group, xs, mask):
    """Element indices of sum_{i in S} x_i for index arrays xs[i]."""
    out = None
    for i in range(len(xs)):
        if (mask >> i) & 1:
            out = xs[i] if out is None else group.add_indices(out, xs[i])
    return out


def _moment_exact(f, M, budget=None):
    spec, N = f.group, f.group.order
    check_budget(N**M.n, budget, "exact moment")
    tables = [(_powered(f.values, a, b), m) for m, a, b in M.terms]
    total = 0j
    # the leading variable is looped, the rest vectorized
    rest = np.indices((N,) * (M.n - 1)).reshape(M.n - 1, -1) if M.n > 1 else np.zeros((0, 1), dtype=np.int64)
    for x1 in range(N):
        xs = [np.full(rest.shape[1], x1, dtype=np.int64)] + list(rest)
        prod = np.ones(rest.shape[1], dtype=complex)
        for table, m in tables:
            prod *= table[_subset_sum_indices(spec, xs, m)]
        total += prod.sum()
    return complex(total / N**M.n)


def _power_support(f, a, b, tol=1e-13):
    lam = dft(GroupFunction(f.group, _powered(f.values, a, b)))
    idx = np.flatnonzero(np.abs(lam) > tol * max(np.max(np.abs(lam)), 1.0))
    return idx, lam[idx]


def _moment_fourier(f, M, budget=None, cache=None):
    """Expand each h = f^a conj(f)^b in characters; only frequency tuples with
    sum_{j : i in S_j} xi_j = 0 for every variable i survive the average."""
    spec = f.group
    cache = {} if cache is None else cache
    supports = []
    for m, a, b in M.terms:
        if (a, b) not in cache:
            cache[a, b] = _power_support(f, a, b)
        idx, lam = cache[a, b]
        if idx.size == 0:
            return 0j
        supports.append((m, idx, lam))
    count = math.prod(s[1].size for s in supports)
    check_budget(count, budget, "Fourier moment expansion")
    grids = np.indices(tuple(s[1].size for s in supports)).reshape(len(supports), -1)
    coeff = np.ones(grids.shape[1], dtype=complex)
    mods = spec._mod
    sums = np.zeros((M.n, grids.shape[1], spec.rank), dtype=np.int64)
    for j, (m, idx, lam) in enumerate(supports):
        coeff *= lam[grids[j]]
        res = spec.residues(idx[grids[j]])
        for i in range(M.n):
            if (m >> i) & 1:
                sums[i] += res
    ok = np.all(sums % mods == 0, axis=(0, 2))
    return complex(coeff[ok].sum())


def moment_estimate(f, M, samples, seed=0):
    """(mean, standard error) from i.i.d. uniform tuples."""
    rng = make_rng(seed)
    spec = f.group
    xs = list(rng.integers(spec.order, size=(M.n, int(samples))))
    prod = np.ones(int(samples), dtype=complex)
    for m, a, b in M.terms:
        prod *= _powered(f.values, a, b)[_subset_sum_indices(spec, xs, m)]
    se = float(np.std(prod, ddof=1) / math.sqrt(samples)) if samples > 1 else float("inf")
    return complex(prod.mean()), se


MOMENT_METHODS = ("auto", "exact", "fourier", "monte_carlo")


def moment_value(f, M, method="auto", samples=None, seed=0, budget=None):
    """Exact summation, character expansion, or Monte Carlo.

    ``auto`` uses the character expansion when it has fewer terms than the
    tuple enumeration.
    """
    if method == "exact":
        return _moment_exact(f, M, budget)
    if method == "fourier":
        return _moment_fourier(f, M, budget)
    if method == "monte_carlo":
        if not samples:
            raise StructuralError("monte_carlo needs a positive sample count")
        return moment_estimate(f, M, samples, seed)[0]
    if method == "auto":
        cache = {(a, b): _power_support(f, a, b) for _, a, b in M.terms}
        support = math.prod(cache[a, b][0].size for _, a, b in M.terms)
        if support < f.group.order**M.n:
            return _moment_fourier(f, M, budget, cache)
        return _moment_exact(f, M, budget)
    raise StructuralError(f"unknown method {method!r}; choose from {MOMENT_METHODS}")


# ---------------------------------------------------------------------------
# distributions


@dataclass
class EmpiricalDistribution:
    n: int
    samples: np.ndarray  # (rows, 2^n - 1), column j is the subset with mask j + 1
    exact: bool = False

    @property
    def count(self):
        return self.samples.shape[0]

    @property
    def subsets(self):
        return [_subset(m) for m in range(1, 2**self.n)]

    def moment(self, M):
        if M.n > self.n:
            raise StructuralError("moment uses more variables than the distribution")
        prod = np.ones(self.count, dtype=complex)
        for m, a, b in M.terms:
            prod *= _powered(self.samples[:, m - 1], a, b)
        return complex(prod.mean())


def distribution(f, n, method="exact", samples=None, seed=0, budget=None):
    """Joint law of (f(sum_{i in S} x_i))_S over all nonempty S, as equally weighted rows."""
    spec, N = f.group, f.group.order
    if method == "exact":
        check_budget(N**n * (2**n - 1), budget, "exact distribution")
        xs = list(np.indices((N,) * n).reshape(n, -1))
        exact = True
    elif method == "sample":
        if not samples:
            raise StructuralError("sampling needs a positive sample count")
        check_budget(int(samples) * (2**n - 1), budget, "sampled distribution")
        xs = list(make_rng(seed).integers(N, size=(n, int(samples))))
        exact = False
    else:
        raise StructuralError(f"unknown method {method!r}")
    cols = [f.values[_subset_sum_indices(spec, xs, m)] for m in range(1, 2**n)]
    return EmpiricalDistribution(n, np.stack(cols, axis=1), exact)


# ---------------------------------------------------------------------------
# moment families, discrepancy, convergence


def moment_family(n=3, degree_cap=None, power_cap=1, budget=None):
    """Every moment on n variables using edges of size <= degree_cap + 1 and
    exponents a + b <= power_cap, each edge appearing at most once."""
    degree_cap = n - 1 if degree_cap is None else degree_cap
    masks = [m for m in range(1, 2**n) if bin(m).count("1") <= degree_cap + 1]
    choices = [(0, 0)] + [(a, s - a) for s in range(1, power_cap + 1) for a in range(s, -1, -1)]
    check_budget(len(choices) ** len(masks), budget, "moment family")
    family = []
    for pick in product(range(len(choices)), repeat=len(masks)):
        terms = tuple((m, *choices[c]) for m, c in zip(masks, pick) if c)
        if terms:
            family.append(Moment(n, terms))
    return family


def simple_moment_family(n=3, degree_cap=None):
    return moment_family(n, degree_cap, 1)


def moment_values(f, family, method="auto", budget=None):
    if method == "fourier":
        cache = {}
        return np.array([_moment_fourier(f, M, budget, cache) for M in family])
    return np.array([moment_value(f, M, method, budget=budget) for M in family])


@dataclass
class Discrepancy:
    value: float
    witness: Moment = None


def moment_discrepancy(f, g, degree_cap=2, power_cap=1, n=3, method="auto", budget=None, family=None):
    """max |M(f) - M(g)| over a finite moment family (the package's stand-in metric)."""
    family = moment_family(n, degree_cap, power_cap, budget) if family is None else family
    diff = np.abs(moment_values(f, family, method, budget) - moment_values(g, family, method, budget))
    j = int(np.argmax(diff))
    return Discrepancy(float(diff[j]), family[j])


@dataclass
class ConvergenceScan:
    family: list
    values: np.ndarray  # (len(sequence), len(family))
    oscillation: np.ndarray  # max pairwise spread over the tail, per moment
    tol: float
    labels: list = field(default_factory=list)

    @property
    def converged(self):
        return self.oscillation <= self.tol

    @property
    def all_converged(self):
        return bool(np.all(self.converged))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["moment", "step", "label", "re", "im", "tail_oscillation", "converged"])
        for j, M in enumerate(self.family):
            for i in range(self.values.shape[0]):
                z = self.values[i, j]
                lab = self.labels[i] if self.labels else i
                w.writerow([str(M), i, lab, repr(float(z.real)), repr(float(z.imag)),
                            repr(float(self.oscillation[j])), bool(self.converged[j])])
        return buf.getvalue()


def convergence_scan(sequence, degree_cap=2, power_cap=1, n=3, tol=1e-9, tail=None,
                     method="auto", budget=None, family=None, labels=None):
    """Moment trajectories along a sequence; a moment converges when its values over the
    last ``tail`` entries (default: the second half) stay within ``tol`` of each other."""
    sequence = list(sequence)
    if not sequence:
        raise StructuralError("empty sequence")
    family = moment_family(n, degree_cap, power_cap, budget) if family is None else family
    values = np.array([moment_values(f, family, method, budget) for f in sequence])
    tail = max(1, len(sequence) // 2) if tail is None else int(tail)
    last = values[-tail:]
    osc = np.max(np.abs(last[:, None, :] - last[None, :, :]), axis=(0, 1))
    return ConvergenceScan(family, values, osc, tol, list(labels or []))


# ---------------------------------------------------------------------------
# the chi + chi^j example


def chi_plus_chi_power(m, j):
    """x -> e(x/m) + e(jx/m) on Z_m."""
    x = np.arange(m)
    return GroupFunction(GroupSpec((m,)), e(x / m) + e(j * x / m))


def torus_limit(m):
    """(x, y) -> e(x/m) + e(y/m) on Z_m x Z_m."""
    r = np.indices((m, m)).reshape(2, -1)
    return GroupFunction(GroupSpec((m, m)), e(r[0] / m) + e(r[1] / m))


def search_limit_exponents(m, tol=1e-9, family=None, budget=None):
    """All j in [2, m) for which every simple moment on <= 3 variables of chi + chi^j
    matches the torus function; returns (matches, per-j discrepancy)."""
    family = simple_moment_family(3) if family is None else family
    target = moment_values(torus_limit(m), family, "fourier", budget)
    disc = {}
    for j in range(2, m):
        vals = moment_values(chi_plus_chi_power(m, j), family, "fourier", budget)
        disc[j] = float(np.max(np.abs(vals - target)))
    return [j for j, d in disc.items() if d <= tol], disc
