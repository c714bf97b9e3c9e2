"""Gowers norms, Gowers inner products and corner convolutions.

Star convention: the factor attached to a vertex with an odd number of ones
is conjugated.  Plain (unstarred) pattern averages live in :mod:`hofa.moments`.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from ._config import StructuralError, check_budget, fsum_complex, make_rng
from .abelian import GroupFunction, GroupSpec, dft
from .cubespace import all_cubes, param_cube_labels, parity_array

CHUNK = 1 << 20


def delta(f, t):
    """x -> f(x) conj(f(x + t))."""
    return f * f.shift(t).conj()


@lru_cache(maxsize=64)
def _t_vertex_indices(spec, n):
    """(2^n, |A|^n) indices of sum_i v_i t_i over all t in lexicographic order."""
    grid = np.indices((spec.order,) * n).reshape(n, -1).T if n else np.zeros((1, 0), dtype=np.int64)
    params = np.concatenate([np.zeros((grid.shape[0], 1), dtype=np.int64), grid], axis=1)
    out = param_cube_labels(spec, n, params).T.copy()
    out.setflags(write=False)
    return out


def _starred(table, n):
    """Conjugate rows of odd-weight vertices; ``table`` has 2^n rows."""
    odd = parity_array(n).astype(bool)
    out = table.astype(complex, copy=True)
    out[odd] = np.conj(out[odd])
    return out


def _cube_product_sums(spec, star_table, n, vertices, x_values=None):
    """For each x: sum over t of prod_{v in vertices} star_table[v](x + v.t)."""
    T = _t_vertex_indices(spec, n)
    xs = np.arange(spec.order) if x_values is None else np.asarray(x_values)
    per_x = max(1, CHUNK // max(1, T.shape[1]))
    out = np.empty(xs.size, dtype=complex)
    for start in range(0, xs.size, per_x):
        xc = xs[start:start + per_x]
        prod = np.ones((xc.size, T.shape[1]), dtype=complex)
        for v in vertices:
            prod *= star_table[v][spec.add_indices(xc[:, None], T[v][None, :])]
        out[start:start + per_x] = [fsum_complex(row) for row in prod]
    return out


# ---------------------------------------------------------------------------
# Gowers norms


@dataclass
class MonteCarloEstimate:
    power: float  # estimate of ||f||_{U_k}^{2^k}
    standard_error: float
    samples: int
    clamped: bool  # the raw mean was negative and got clamped to 0
    k: int

    @property
    def value(self):
        return max(self.power, 0.0) ** (1.0 / 2**self.k)


def _gowers_power_direct(f, k, budget=None):
    spec = f.group
    check_budget(spec.order ** (k + 1), budget, f"U_{k} direct evaluation")
    star = _starred(np.tile(f.values, (2**k, 1)), k)
    sums = _cube_product_sums(spec, star, k, range(2**k))
    return fsum_complex(sums) / spec.order ** (k + 1)


def _gowers_power_recursive(f, k, budget=None):
    spec = f.group
    check_budget(spec.order ** (k + 1), budget, f"U_{k} recursive evaluation")
    add = spec.add_indices(np.arange(spec.order)[:, None], np.arange(spec.order)[None, :])
    rows = f.values[None, :]
    for _ in range(k - 1):
        # rows (B, N) -> (B*N, N): Delta_t for every t
        shifted = rows[:, add.T]  # (B, t, x) = f(x + t)
        rows = (rows[:, None, :] * np.conj(shifted)).reshape(-1, spec.order)
    return complex(np.mean(np.abs(rows.mean(axis=1)) ** 2))


def _gowers_power_fourier2(f):
    lam = dft(f)
    return complex(math.fsum(np.abs(lam) ** 4))


def gowers_estimate(f, k, samples, seed=0):
    """Unbiased Monte Carlo estimate of ||f||_{U_k}^{2^k} with its standard error."""
    if samples < 1:
        raise StructuralError("monte_carlo needs at least one sample")
    if k < 1:
        raise StructuralError("k must be >= 1")
    rng = make_rng(seed)
    spec = f.group
    params = rng.integers(spec.order, size=(samples, k + 1))
    labels = param_cube_labels(spec, k, params)
    vals = f.values[labels]
    odd = parity_array(k).astype(bool)
    vals[:, odd] = np.conj(vals[:, odd])
    prod = np.prod(vals, axis=1).real
    mean = math.fsum(prod) / samples
    se = float(np.std(prod, ddof=1) / math.sqrt(samples)) if samples > 1 else float("inf")
    return MonteCarloEstimate(max(mean, 0.0), se, samples, mean < 0, k)


METHODS = ("direct", "recursive", "fourier2", "monte_carlo")


def gowers_power(f, k, method="direct", samples=None, seed=0, budget=None):
    """||f||_{U_k}^{2^k} (real; exact methods return the real part of the mean)."""
    if k < 1:
        raise StructuralError("k must be >= 1")
    if method == "direct":
        p = _gowers_power_direct(f, k, budget)
    elif method == "recursive":
        p = _gowers_power_recursive(f, k, budget)
    elif method == "fourier2":
        if k != 2:
            raise StructuralError("fourier2 only evaluates U_2")
        p = _gowers_power_fourier2(f)
    elif method == "monte_carlo":
        return gowers_estimate(f, k, samples or 10_000, seed).power
    else:
        raise StructuralError(f"unknown method {method!r}; choose from {METHODS}")
    return float(p.real)


def gowers_norm(f, k, method="direct", samples=None, seed=0, budget=None):
    p = gowers_power(f, k, method, samples, seed, budget)
    return max(p, 0.0) ** (1.0 / 2**k)


# ---------------------------------------------------------------------------
# function systems


@dataclass(eq=False)
class FunctionSystem:
    """Functions f_v indexed by {0,1}^n (mode "full") or K_n = {0,1}^n minus 0 ("punctured")."""

    group: GroupSpec
    dim: int
    members: dict
    mode: str = "full"

    def __post_init__(self):
        if self.mode not in ("full", "punctured"):
            raise StructuralError(f"unknown index mode {self.mode!r}")
        wanted = set(range(2**self.dim)) if self.mode == "full" else set(range(1, 2**self.dim))
        if set(self.members) != wanted:
            raise StructuralError(f"{self.mode} system of dim {self.dim} needs {len(wanted)} members")
        for f in self.members.values():
            if f.group != self.group:
                raise StructuralError("all members must live on the same group")

    @classmethod
    def full(cls, functions):
        functions = list(functions)
        n = int(round(math.log2(len(functions))))
        if 2**n != len(functions):
            raise StructuralError("a full system needs 2^n members")
        return cls(functions[0].group, n, dict(enumerate(functions)), "full")

    @classmethod
    def punctured(cls, functions):
        functions = list(functions)
        n = int(round(math.log2(len(functions) + 1)))
        if 2**n - 1 != len(functions):
            raise StructuralError("a punctured system needs 2^n - 1 members")
        return cls(functions[0].group, n, {v + 1: f for v, f in enumerate(functions)}, "punctured")

    @classmethod
    def constant(cls, f, n, mode="full"):
        start = 0 if mode == "full" else 1
        return cls(f.group, n, {v: f for v in range(start, 2**n)}, mode)

    @classmethod
    def random(cls, group, n, mode="full", rng=None, unimodular=True):
        rng = make_rng(rng)
        make = GroupFunction.random_unimodular if unimodular else GroupFunction.random_bounded
        start = 0 if mode == "full" else 1
        return cls(group, n, {v: make(group, rng) for v in range(start, 2**n)}, mode)

    @property
    def vertices(self):
        return sorted(self.members)

    def __getitem__(self, v):
        return self.members[v]

    def table(self):
        t = np.ones((2**self.dim, self.group.order), dtype=complex)
        for v, f in self.members.items():
            t[v] = f.values
        return t

    def without_root(self):
        members = {v: f for v, f in self.members.items() if v != 0}
        return FunctionSystem(self.group, self.dim, members, "punctured")

    def to_dict(self):
        return {"moduli": list(self.group.moduli), "dim": self.dim, "mode": self.mode,
                "members": [self.members[v].to_dict()["values"] for v in self.vertices]}

    @classmethod
    def from_dict(cls, data):
        group = GroupSpec(tuple(data["moduli"]))
        n, mode = int(data["dim"]), data.get("mode", "full")
        start = 0 if mode == "full" else 1
        fns = [GroupFunction(group, [complex(a, b) for a, b in vals]) for vals in data["members"]]
        return cls(group, n, {start + i: f for i, f in enumerate(fns)}, mode)


def gowers_inner(G, budget=None):
    """(G) = E_{x,t} prod_v g_v^*(x + v.t) for a full system."""
    if G.mode != "full":
        raise StructuralError("the Gowers inner product needs a full system")
    spec, n = G.group, G.dim
    check_budget(spec.order ** (n + 1), budget, "Gowers inner product")
    star = _starred(G.table(), n)
    sums = _cube_product_sums(spec, star, n, range(2**n))
    return fsum_complex(sums) / spec.order ** (n + 1)


def corner_convolution(F, budget=None):
    """[F](x) = E_t prod_{v != 0} f_v^*(x + v.t); a full system's root member is ignored."""
    spec, n = F.group, F.dim
    check_budget(spec.order ** (n + 1), budget, "corner convolution")
    star = _starred(F.table(), n)
    sums = _cube_product_sums(spec, star, n, range(1, 2**n))
    return GroupFunction(spec, sums / spec.order**n)


def delta_system(F, i, t):
    """delta_{i,t} F: members f_v(x) conj(f_{v+w}(x + t)) on the face v_i = 0, dimension n-1."""
    n = F.dim
    if not 1 <= i <= n:
        raise StructuralError(f"coordinate {i} outside 1..{n}")
    t = F.group.element(t)
    bit = 1 << (i - 1)
    low = bit - 1
    members = {}
    for v in range(2**n):
        if v & bit or v not in F.members:
            continue
        new = (v & low) | ((v >> i) << (i - 1))
        members[new] = delta_pair(F.members[v], F.members[v | bit], t)
    return FunctionSystem(F.group, n - 1, members, F.mode)


def delta_pair(f, g, t):
    return f * g.shift(t).conj()


# ---------------------------------------------------------------------------
# identities checked through explicit cube enumeration


def _starred_cube_product(system, labels):
    """prod_v f_v^*(c(v)) for every cube row of ``labels`` over the system's vertices."""
    n = system.dim
    star = _starred(system.table(), n)
    out = np.ones(labels.shape[0], dtype=complex)
    for v in system.vertices:
        out *= star[v][labels[:, v]]
    return out


def cube_group(spec, k):
    """C^k(A) as the group A^(k+1) of parameters (x, t_1, ..., t_k)."""
    return GroupSpec(spec.moduli * (k + 1))


def rank_one_values(F, budget=None):
    """[F]^x as a table on cube_group(A, k): prod_{v in K_k} f_v^*(c(v))."""
    labels = all_cubes(F.group, F.dim, budget)
    return _starred_cube_product(F.without_root() if F.mode == "full" else F, labels)


IDENTITIES = ("coincon", "expectation", "rankcon")


def check_identities(system, which="all", budget=None):
    """Residuals of the convolution identities on a full system G or punctured system F.

    coincon:     (G) = ([G], conj g_0) = ([G]^x, conj(g_0) o psi_0)
    expectation: E over C^n(A) of (G)^x equals (G)
    rankcon:     E_{y in C_0^k} [F]^x(z + y) = [F](psi_0(z)) for every cube z
    """
    names = IDENTITIES if which == "all" else (which,)
    spec, n = system.group, system.dim
    out = {}
    for name in names:
        if name not in IDENTITIES:
            raise StructuralError(f"unknown identity {name!r}")
        if name in ("coincon", "expectation") and system.mode != "full":
            raise StructuralError(f"{name} needs a full system")
    labels = all_cubes(spec, n, budget)
    if "coincon" in names or "expectation" in names:
        inner = gowers_inner(system, budget)
    if "coincon" in names:
        conv = corner_convolution(system, budget)
        g0 = system[0]
        first = conv.inner(g0.conj())
        lifted = _starred_cube_product(system.without_root(), labels)
        second = fsum_complex(lifted * g0.values[labels[:, 0]]) / labels.shape[0]
        out["coincon"] = max(abs(inner - first), abs(inner - second))
    if "expectation" in names:
        full = _starred_cube_product(system, labels)
        out["expectation"] = abs(fsum_complex(full) / labels.shape[0] - inner)
    if "rankcon" in names:
        F = system.without_root() if system.mode == "full" else system
        conv = corner_convolution(F, budget)
        P = cube_group(spec, n)
        check_budget(P.order * spec.order**n, budget, "rankcon averaging")
        R = _starred_cube_product(F, labels)
        z = np.arange(P.order)
        y = np.arange(spec.order**n)  # parameter indices with x = 0
        avg = R[P.add_indices(z[:, None], y[None, :])].mean(axis=1)
        x_of_z = labels[:, 0]
        out["rankcon"] = float(np.max(np.abs(avg - conv.values[x_of_z])))
    return {k: float(v) for k, v in out.items()}
