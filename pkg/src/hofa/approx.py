"""Randomized approximations: shift averages, low-rank lifts of convolutions, products.

The existence statements are realized as seeded retry loops.  Each accepted
draw is certified by an exact L^2 computation over the whole (finite) group.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._config import InvariantFailure, StructuralError, make_rng
from .abelian import GroupFunction
from .gowers import (FunctionSystem, corner_convolution, cube_group, rank_one_values,
                     _t_vertex_indices)

MAX_RETRIES = 32


@dataclass(eq=False)
class Subgroup:
    parent: object  # GroupSpec
    generators: tuple
    elements: np.ndarray  # sorted element indices

    @classmethod
    def generated_by(cls, parent, generators):
        gens = tuple(parent.element(g) for g in generators)
        seen = {parent.identity.index}
        frontier = [parent.identity.index]
        gidx = [g.index for g in gens]
        while frontier:
            nxt = []
            for a in frontier:
                for g in gidx:
                    b = int(parent.add_indices(a, g))
                    if b not in seen:
                        seen.add(b)
                        nxt.append(b)
            frontier = nxt
        return cls(parent, gens, np.array(sorted(seen), dtype=np.int64))

    @classmethod
    def from_elements(cls, parent, elements):
        idx = np.array(sorted({parent.element(x).index if not isinstance(x, (int, np.integer))
                               else int(x) for x in elements}), dtype=np.int64)
        if parent.identity.index not in set(idx.tolist()):
            raise StructuralError("subgroup must contain the identity")
        sums = parent.add_indices(idx[:, None], parent.neg_indices(idx)[None, :])
        if not np.isin(sums, idx).all():
            raise StructuralError("element set is not closed under subtraction")
        return cls(parent, tuple(parent.element_at(i) for i in idx), idx)

    @property
    def order(self):
        return int(self.elements.size)

    def __contains__(self, x):
        return self.parent.element(x).index in set(self.elements.tolist())


def shift_average(f, B):
    """f_B(z) = E_{y in B} f(z + y)."""
    if B.parent != f.group:
        raise StructuralError("subgroup of a different group")
    z = np.arange(f.group.order)
    return GroupFunction(f.group, f.values[f.group.add_indices(z[:, None], B.elements[None, :])].mean(axis=1))


def l2_distance(f, g):
    return float(np.sqrt(np.mean(np.abs(np.asarray(f) - np.asarray(g)) ** 2)))


@dataclass
class ShiftApproximation:
    shifts: np.ndarray  # element indices a_1..a_n in B
    g: GroupFunction
    error: float  # exact ||f_B - g||_2
    attempts: int

    @property
    def n(self):
        return int(self.shifts.size)


def sample_count(eps, cap=None):
    n = 1 + 4 / eps**2
    if cap is not None:
        n = min(n, cap)
    return math.ceil(n)


def shift_sample_approx(f, B, eps, seed=0, max_retries=MAX_RETRIES, n=None):
    """Average g of n shifts of f with ||f_B - g||_2 <= eps.

    By default n = ceil(min(1 + 4/eps^2, |B|)).  When the cap |B| binds the
    shifts are the elements of B, each used once, and g = f_B exactly.
    Otherwise the shifts are i.i.d. uniform in B and the draw is repeated
    until it is within eps.  Passing ``n`` forces n i.i.d. draws.
    """
    if eps <= 0:
        raise StructuralError("eps must be positive")
    if f.sup_norm() > 1 + 1e-12:
        raise StructuralError("shift_sample_approx needs |f| <= 1")
    rng = make_rng(seed)
    target = shift_average(f, B).values
    z = np.arange(f.group.order)

    def average(shifts):
        return f.values[f.group.add_indices(z[:, None], shifts[None, :])].mean(axis=1)

    if n is None:
        n = sample_count(eps, B.order)
        if n >= B.order:
            g = average(B.elements)
            return ShiftApproximation(B.elements.copy(), GroupFunction(f.group, g),
                                      l2_distance(target, g), 1)
    for attempt in range(1, max_retries + 1):
        shifts = B.elements[rng.integers(B.order, size=int(n))]
        g = average(shifts)
        err = l2_distance(target, g)
        if err <= eps:
            return ShiftApproximation(shifts, GroupFunction(f.group, g), err, attempt)
    raise InvariantFailure(f"no draw within eps={eps} after {max_retries} attempts")


# ---------------------------------------------------------------------------
# rank one functions on C^k(A)


@dataclass(eq=False)
class RankOneTerm:
    """z -> [F]^x(z + y) on C^k(A), with y = (0, s_1, ..., s_k) in C^k_0(A)."""

    base_system: FunctionSystem
    shift: tuple  # s_1..s_k as GroupElements

    def __post_init__(self):
        F = self.base_system
        if F.mode != "punctured":
            raise StructuralError("rank one terms are built from punctured systems")
        self.shift = tuple(F.group.element(s) for s in self.shift)
        if len(self.shift) != F.dim:
            raise StructuralError("shift needs one element per cube coordinate")

    @property
    def k(self):
        return self.base_system.dim

    def as_system(self):
        """Punctured system G of shifted members with [G]^x(z) = this term at z."""
        F = self.base_system
        members = {}
        for v, f in F.members.items():
            s = F.group.identity
            for i in range(F.dim):
                if (v >> i) & 1:
                    s = s + self.shift[i]
            members[v] = f.shift(s)
        return FunctionSystem(F.group, F.dim, members, "punctured")

    def shifted(self, y):
        """The term z -> self(z + y') for y' = (0, y_1, ..., y_k)."""
        return RankOneTerm(self.base_system, tuple(a + self.base_system.group.element(b)
                                                   for a, b in zip(self.shift, y)))

    def values(self):
        """Table on cube_group(A, k)."""
        return rank_one_values(self.as_system())

    def evaluate(self, x, t):
        F = self.base_system
        x = F.group.element(x)
        t = [F.group.element(ti) for ti in t]
        out = 1.0 + 0j
        for v, f in F.members.items():
            p = x
            for i in range(F.dim):
                if (v >> i) & 1:
                    p = p + t[i] + self.shift[i]
            val = f(p)
            out *= np.conj(val) if bin(v).count("1") % 2 else val
        return complex(out)


@dataclass
class LowRankApproximation:
    terms: list
    error: float  # certified ||avg(terms) - [F] o psi_0||_2 over C^k(A)
    attempts: int

    @property
    def n(self):
        return len(self.terms)

    def values(self):
        return np.mean([t.values() for t in self.terms], axis=0)


def _check_bounded(F):
    for f in F.members.values():
        if f.sup_norm() > 1 + 1e-12:
            raise StructuralError("members must satisfy |f_v| <= 1")


def _lifted_convolution(F, budget=None):
    """[F] o psi_0 as a table on C^k(A) (x is the most significant parameter)."""
    conv = corner_convolution(F, budget).values
    return np.repeat(conv, F.group.order**F.dim)


def certify_lowrank(F, terms, budget=None):
    """Exact L^2(C^k(A)) distance between the term average and [F] o psi_0."""
    approx = np.mean([t.values() for t in terms], axis=0)
    return l2_distance(approx, _lifted_convolution(F, budget))


def lowrank_approx(F, eps, seed=0, max_retries=MAX_RETRIES, budget=None):
    """At most 1 + 4/eps^2 rank one terms whose average is eps-close to [F] o psi_0."""
    if F.mode != "punctured":
        F = F.without_root()
    _check_bounded(F)
    if eps <= 0:
        raise StructuralError("eps must be positive")
    spec, k = F.group, F.dim
    P = cube_group(spec, k)
    R = GroupFunction(P, rank_one_values(F, budget))
    B = Subgroup(P, (), np.arange(spec.order**k, dtype=np.int64))
    zero = tuple(spec.identity for _ in range(k))
    if np.allclose(shift_average(R, B).values, R.values, atol=1e-12, rtol=0):
        terms = [RankOneTerm(F, zero)]
        return LowRankApproximation(terms, certify_lowrank(F, terms, budget), 1)
    res = shift_sample_approx(R, B, eps, seed, max_retries)
    terms = []
    for idx in res.shifts:
        params = P.residues(int(idx)).reshape(k + 1, spec.rank)
        terms.append(RankOneTerm(F, tuple(spec.element(r) for r in params[1:])))
    err = certify_lowrank(F, terms, budget)
    if abs(err - res.error) > 1e-9:
        raise InvariantFailure(f"certification mismatch {err} vs {res.error}")
    return LowRankApproximation(terms, err, res.attempts)


@dataclass
class ProductApproximation:
    systems: list  # the H^i
    error: float  # certified ||[F][G] - avg [H^i]||_2 over A
    attempts: int

    @property
    def n(self):
        return len(self.systems)


def _average_convolution(systems):
    spec, k = systems[0].group, systems[0].dim
    T = _t_vertex_indices(spec, k)
    x = np.arange(spec.order)
    idx = {v: spec.add_indices(x[:, None], T[v][None, :]) for v in range(1, 2**k)}
    acc = np.zeros(spec.order, dtype=complex)
    for H in systems:
        prod = np.ones(idx[1].shape, dtype=complex)
        for v, f in H.members.items():
            vals = f.values[idx[v]]
            prod *= np.conj(vals) if bin(v).count("1") % 2 else vals
        acc += prod.mean(axis=1)
    return acc / len(systems)


def conv_product_approx(F, G, eps, seed=0, max_retries=MAX_RETRIES, budget=None):
    """Systems H^1..H^n, n <= (1 + 64/eps^2)^2, with ||[F][G] - avg [H^i]||_2 <= eps."""
    F = F if F.mode == "punctured" else F.without_root()
    G = G if G.mode == "punctured" else G.without_root()
    if F.group != G.group or F.dim != G.dim:
        raise StructuralError("systems must share group and dimension")
    if eps <= 0:
        raise StructuralError("eps must be positive")
    rng = make_rng(seed)
    target = corner_convolution(F, budget).values * corner_convolution(G, budget).values
    cap = (1 + 64 / eps**2) ** 2
    for attempt in range(1, max_retries + 1):
        lf = lowrank_approx(F, eps / 4, rng, max_retries, budget)
        lg = lowrank_approx(G, eps / 4, rng, max_retries, budget)
        systems = []
        for a in lf.terms:
            sa = a.as_system()
            for b in lg.terms:
                sb = b.as_system()
                systems.append(FunctionSystem(
                    F.group, F.dim, {v: sa[v] * sb[v] for v in sa.vertices}, "punctured"))
        if len(systems) > cap:
            raise InvariantFailure(f"{len(systems)} systems exceed the cap {cap}")
        err = l2_distance(target, _average_convolution(systems))
        if err <= eps:
            return ProductApproximation(systems, err, attempt)
    raise InvariantFailure(f"no product approximation within eps={eps} after {max_retries} attempts")

