"""Finite cubespaces and nilspaces.

Filtered groups F = F_0 >= F_1 >= ... >= F_k = {1} with [F, F_i] <= F_{i+1}
carry two equivalent cube structures:

* generative (Host-Kra): start from the constant 1 labelling and multiply the
  labels on a face of codimension i by an element of F_i;
* Gray code: for every face of dimension d the alternating product of the
  labels taken along the Gray code ordering lies in F_d.

With F_0 = F_1 = A abelian and F_2 = {0} both give the ordinary cubes of A.
Elements are integer indices into an explicit multiplication table.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement, product
import math

import numpy as np

from ._config import BudgetExceeded, StructuralError, check_budget, make_rng
from .abelian import Character, GroupSpec
from .cubespace import (degree_cube_mask, degree_cubes, face_signs, faces, morphism_generators,
                        all_cubes, parity_array)

# ---------------------------------------------------------------------------
# Gray code


@lru_cache(maxsize=None)
def gray_code_masks(n):
    """Vertex masks in Gray code order: entry i-1 is the vertex with rank i."""
    if n == 0:
        return (0,)
    prev = gray_code_masks(n - 1)
    top = 1 << (n - 1)
    return prev + tuple(v | top for v in reversed(prev))


def gray_code_order(n):
    if n < 1:
        raise StructuralError("n must be >= 1")
    return [tuple((v >> i) & 1 for i in range(n)) for v in gray_code_masks(n)]


def gray_code_product(labels, mul, inv, identity):
    """prod_{i=1}^{2^n} f(g_n^{-1}(i))^{(-1)^i} for labels indexed by vertex mask."""
    n = int(round(math.log2(len(labels))))
    acc = identity
    for i, v in enumerate(gray_code_masks(n), start=1):
        x = labels[v]
        acc = mul(acc, x if i % 2 == 0 else inv(x))
    return acc


# ---------------------------------------------------------------------------
# filtered groups


class FilteredGroup:
    """Finite group given by a multiplication table, with a filtration.

    ``filtration[i]`` lists the element indices of F_i; the last level must be
    the trivial subgroup.
    """

    def __init__(self, table, filtration, names=None, check=True):
        self.table = np.asarray(table, dtype=np.int64)
        n = self.table.shape[0]
        if self.table.shape != (n, n):
            raise StructuralError("multiplication table must be square")
        if n > 4096:
            raise BudgetExceeded("explicit tables are limited to 4096 elements")
        self.order = n
        ident = [e for e in range(n) if np.array_equal(self.table[e], np.arange(n))]
        if len(ident) != 1:
            raise StructuralError("table has no unique identity")
        self.identity = ident[0]
        inv = np.argmax(self.table == self.identity, axis=1)
        if not np.all(self.table[np.arange(n), inv] == self.identity):
            raise StructuralError("table has elements without inverses")
        self.inverse = inv
        self.levels = np.zeros((len(filtration), n), dtype=bool)
        for i, level in enumerate(filtration):
            self.levels[i, list(level)] = True
        self.names = names
        if check:
            self.validate()

    @property
    def k(self):
        """Index of the first trivial level."""
        return self.levels.shape[0] - 1

    @property
    def degree(self):
        return self.k - 1

    def structure_group_orders(self):
        """|F_i / F_{i+1}| for i = 1..k-1, the orders of A_1..A_{k-1}."""
        sizes = self.levels.sum(axis=1)
        return tuple(int(sizes[i] // sizes[i + 1]) for i in range(1, self.k))

    def complexity_key(self):
        """Sort key (|G|, structure group orders); a fixed choice of ordering, smaller is simpler."""
        return self.order, self.structure_group_orders()

    def mul(self, a, b):
        return self.table[a, b]

    def inv(self, a):
        return self.inverse[a]

    def level(self, i):
        return np.flatnonzero(self.levels[min(i, self.k)])

    def in_level(self, i, x):
        return self.levels[min(i, self.k)][x]

    def commutator(self, a, b):
        return self.mul(self.mul(self.inv(a), self.inv(b)), self.mul(a, b))

    def validate(self):
        lv = self.levels
        if lv.shape[0] < 1 or not lv[0].all():
            raise StructuralError("F_0 must be the whole group")
        if lv[-1].sum() != 1 or not lv[-1][self.identity]:
            raise StructuralError("last filtration level must be trivial")
        for i in range(lv.shape[0]):
            el = np.flatnonzero(lv[i])
            if not lv[i][self.identity] or not lv[i][self.mul(el[:, None], self.inv(el)[None, :])].all():
                raise StructuralError(f"F_{i} is not a subgroup")
            if i + 1 < lv.shape[0] and np.any(lv[i + 1] & ~lv[i]):
                raise StructuralError(f"F_{i + 1} is not contained in F_{i}")
        if not self.filtration_ok():
            raise StructuralError("[F, F_i] is not contained in F_{i+1}")

    def filtration_ok(self):
        g = np.arange(self.order)
        for i in range(self.k):
            el = self.level(i)
            comm = self.commutator(g[:, None], el[None, :])
            if not self.levels[i + 1][comm].all():
                return False
        return True

    def is_normal_level(self, i):
        g = np.arange(self.order)
        el = self.level(i)
        conj = self.mul(self.mul(self.inv(g)[:, None], el[None, :]), g[:, None])
        return bool(self.levels[min(i, self.k)][conj].all())

    def generators(self, i):
        """A small generating set of F_i (greedy)."""
        gens, span = [], {self.identity}
        for x in self.level(i):
            if int(x) in span:
                continue
            gens.append(int(x))
            span = self._closure(gens)
        return gens

    def _closure(self, gens):
        seen = {self.identity}
        frontier = [self.identity]
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    b = int(self.table[a, g])
                    if b not in seen:
                        seen.add(b)
                        nxt.append(b)
            frontier = nxt
        return seen

    def top_action(self):
        """(structure group Z_r, act) for a cyclic last nontrivial level acting by right multiplication."""
        top = self.level(self.k - 1)
        for z in top:
            if len(self._closure([int(z)])) == top.size:
                break
        else:
            raise StructuralError("top structure group is not cyclic")
        powers = [self.identity]
        for _ in range(top.size - 1):
            powers.append(int(self.table[powers[-1], z]))
        act = self.table[np.arange(self.order)[:, None], np.array(powers)[None, :]]
        return GroupSpec((top.size,)), act

    # constructors -------------------------------------------------------
    @classmethod
    def heisenberg(cls, p):
        """Upper unitriangular 3x3 matrices over Z_p; filtration F, F, centre, {1}.

        Element (a, b, c) has a at (1,2), b at (2,3), c at (1,3); index a p^2 + b p + c.
        """
        r = np.arange(p**3)
        a, b, c = r // (p * p), (r // p) % p, r % p
        A2 = (a[:, None] + a[None, :]) % p
        B2 = (b[:, None] + b[None, :]) % p
        C2 = (c[:, None] + c[None, :] + a[:, None] * b[None, :]) % p
        table = A2 * p * p + B2 * p + C2
        centre = [int(x) for x in r if a[x] == 0 and b[x] == 0]
        names = [(int(a[x]), int(b[x]), int(c[x])) for x in r]
        return cls(table, [r.tolist(), r.tolist(), centre, [0]], names=names)

    @classmethod
    def abelian(cls, spec, degree=1):
        """A with F_0 = ... = F_degree = A and F_{degree+1} = {0}."""
        r = np.arange(spec.order)
        table = spec.add_indices(r[:, None], r[None, :])
        levels = [r.tolist()] * (degree + 1) + [[0]]
        return cls(table, levels, names=[tuple(map(int, x)) for x in spec.all_residues])

    def to_dict(self):
        return {"table": self.table.tolist(),
                "filtration": [self.level(i).tolist() for i in range(self.k + 1)]}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["table"], data["filtration"])
        except KeyError as exc:
            raise StructuralError(f"FilteredGroup JSON lacks {exc}") from exc


def gray_products(group, labels):
    """Vectorized Gray code products for an (M, 2^n) label array."""
    labels = np.atleast_2d(labels)
    n = int(round(math.log2(labels.shape[1])))
    acc = np.full(labels.shape[0], group.identity, dtype=np.int64)
    for i, v in enumerate(gray_code_masks(n), start=1):
        x = labels[:, v]
        acc = group.mul(acc, x if i % 2 == 0 else group.inv(x))
    return acc


def gray_code_property(labels, group, modulo=None):
    """Gray code product of ``labels`` lies in ``modulo`` (level index or element collection)."""
    prod = int(gray_products(group, np.asarray(labels)[None, :])[0])
    if modulo is None:
        return prod == group.identity
    if isinstance(modulo, (int, np.integer)):
        return bool(group.in_level(int(modulo), prod))
    return prod in set(int(x) for x in modulo)


def filtered_cube_mask(group, labels):
    """Gray code test on every face of dimension d (1 <= d <= min(n, k)) modulo F_d."""
    labels = np.atleast_2d(np.asarray(labels, dtype=np.int64))
    n = int(round(math.log2(labels.shape[1])))
    ok = np.ones(labels.shape[0], dtype=bool)
    for d in range(1, min(n, group.k) + 1):
        if group.levels[min(d, group.k)].all():
            continue
        for face in faces(n, d):
            prod = gray_products(group, labels[:, face])
            ok &= group.in_level(d, prod)
    return ok


def is_filtered_cube(labels, group):
    return bool(filtered_cube_mask(group, np.asarray(labels)[None, :])[0])


# ---------------------------------------------------------------------------
# Host-Kra generative cubes


def _upper_face(n, v):
    return [w for w in range(2**n) if w & v == v]


def hk_generators(group, n):
    """Labellings x on a face of codimension i (x a generator of F_i), 1 elsewhere."""
    gens = []
    for i in range(0, min(n, group.k - 1) + 1):
        for face in (faces(n, n - i) if i <= n else []):
            for x in group.generators(i):
                lab = np.full(2**n, group.identity, dtype=np.int64)
                lab[face] = x
                gens.append(lab)
    return gens


def _encode(labels, base):
    out = np.zeros(labels.shape[0], dtype=np.int64)
    for j in range(labels.shape[1]):
        out = out * base + labels[:, j]
    return out


def hk_count(group, n):
    """Size of the cube group: prod over vertices v of |F_{|v|}|."""
    return math.prod(int(group.levels[min(bin(v).count("1"), group.k)].sum()) for v in range(2**n))


def hk_enumerate(group, n, budget=None):
    """All generated cubes, by closure of hk_generators under pointwise products."""
    if n == 0:
        return np.arange(group.order)[:, None]
    check_budget(hk_count(group, n) * 2**n, budget, "Host-Kra cube enumeration")
    if group.order ** (2**n) >= 2**62:
        raise BudgetExceeded("label encoding overflows; use hk_sample / hk_contains")
    gens = hk_generators(group, n)
    cur = np.full((1, 2**n), group.identity, dtype=np.int64)
    seen = set(_encode(cur, group.order).tolist())
    frontier, found = cur, [cur]
    while frontier.shape[0]:
        cand = np.concatenate([group.mul(frontier, g[None, :]) for g in gens])
        codes = _encode(cand, group.order)
        codes, first = np.unique(codes, return_index=True)
        fresh = np.array([c not in seen for c in codes.tolist()], dtype=bool)
        frontier = cand[first[fresh]]
        seen.update(codes[fresh].tolist())
        found.append(frontier)
        check_budget(len(seen) * 2**n, budget, "Host-Kra cube enumeration")
    out = np.concatenate(found)
    return out[np.argsort(_encode(out, group.order), kind="stable")]


def _hk_vertex_order(n):
    return sorted(range(2**n), key=lambda v: (bin(v).count("1"), v))


def hk_rooted_cubes(group, n, budget=None):
    """All cubes with c(0) = 1, as ordered products of x_v on upper faces, x_v in F_{|v|}."""
    total = hk_count(group, n) // group.order
    check_budget(total * 2**n, budget, "rooted Host-Kra cubes")
    rows = np.full((1, 2**n), group.identity, dtype=np.int64)
    for v in _hk_vertex_order(n)[1:]:
        choices = group.level(bin(v).count("1"))
        up = _upper_face(n, v)
        rows = np.repeat(rows, choices.size, axis=0)
        xs = np.tile(choices, rows.shape[0] // choices.size)
        rows[:, up] = group.mul(rows[:, up], xs[:, None])
    return rows


def hk_sample(group, n, seed=0, size=None):
    """Uniform random generated cube(s): ordered upper-face products with random x_v."""
    rng = make_rng(seed)
    m = 1 if size is None else int(size)
    rows = np.full((m, 2**n), group.identity, dtype=np.int64)
    for v in _hk_vertex_order(n):
        choices = group.level(bin(v).count("1"))
        xs = choices[rng.integers(choices.size, size=m)]
        up = _upper_face(n, v)
        rows[:, up] = group.mul(rows[:, up], xs[:, None])
    return rows[0] if size is None else rows


def hk_contains(group, labels):
    """Membership in the generated cube group by sifting through upper faces (vectorized)."""
    cur = np.atleast_2d(np.asarray(labels, dtype=np.int64)).copy()
    n = int(round(math.log2(cur.shape[1])))
    ok = np.ones(cur.shape[0], dtype=bool)
    for v in _hk_vertex_order(n):
        x = cur[:, v]
        ok &= group.in_level(bin(v).count("1"), x)
        up = _upper_face(n, v)
        cur[:, up] = group.mul(group.inv(x)[:, None], cur[:, up])
    return ok & np.all(cur == group.identity, axis=1)


# ---------------------------------------------------------------------------
# cubespace oracles


@dataclass
class CubespaceOracle:
    """Points 0..num_points-1 with a vectorized cube membership test.

    ``membership(n, labels)`` takes an (M, 2^n) array and returns M booleans.
    ``rooted_cubes(n)``, when supplied, lists every n-cube with c(0) equal to
    ``base_point``; together with ``translate(x, labels)`` (a cube-preserving
    bijection sending ``base_point`` to ``x``) it lets the checker work with
    rooted cubes and corners only.
    """

    num_points: int
    membership: object
    max_dim: int = 4
    name: str = "cubespace"
    rooted_cubes: object = None
    base_point: int = 0
    translate: object = None
    point_names: list = field(default=None, repr=False)

    def is_cube(self, labels):
        labels = np.atleast_2d(np.asarray(labels, dtype=np.int64))
        n = int(round(math.log2(labels.shape[1])))
        if n > self.max_dim:
            raise BudgetExceeded(f"dimension {n} above the oracle's max_dim {self.max_dim}")
        if n == 0:
            return np.ones(labels.shape[0], dtype=bool)
        return np.asarray(self.membership(n, labels), dtype=bool)

    def cubes(self, n, budget=None):
        """Rooted cubes when the oracle is homogeneous, else every cube by brute force."""
        if self.rooted_cubes is not None:
            return self.rooted_cubes(n)
        check_budget(self.num_points ** (2**n), budget, f"brute-force {n}-cubes")
        grid = np.array(list(product(range(self.num_points), repeat=2**n)), dtype=np.int64)
        return grid[self.is_cube(grid)]


def degree_cube_space(spec, k, max_dim=5):
    """D_k(A): cubes are the maps whose (k+1)-face alternating sums vanish."""
    def membership(n, labels):
        return degree_cube_mask(spec, labels, k)

    def rooted(n):
        return degree_cubes(spec, n, k, base=0).label_array()

    def translate(x, labels):
        return spec.add_indices(x, labels)

    return CubespaceOracle(spec.order, membership, max_dim, f"D_{k}({spec})", rooted, 0, translate)


def filtered_group_space(group, max_dim=4):
    def membership(n, labels):
        return filtered_cube_mask(group, labels)

    def rooted(n):
        return hk_rooted_cubes(group, n)

    def translate(x, labels):
        return group.mul(x, labels)

    return CubespaceOracle(group.order, membership, max_dim, "filtered group", rooted,
                           group.identity, translate, group.names)


def _join_corners(space, n, budget=None):
    """Labellings of {0,1}^n minus 1^n whose faces {v_i = 0} are (n-1)-cubes.

    Returned as (rows, vertex list).  Rooted when the oracle is homogeneous.
    """
    if n == 1:
        if space.rooted_cubes is not None:
            return np.array([[space.base_point]], dtype=np.int64), [0]
        return np.arange(space.num_points)[:, None], [0]
    sub = space.cubes(n - 1, budget)
    cols = {}
    rows = None
    for i in range(n, 0, -1):
        bit = 1 << (i - 1)
        local = [v for v in range(2**n) if not v & bit]  # face v_i = 0 in local order
        if rows is None:
            rows = sub.copy()
            cols = {v: j for j, v in enumerate(local)}
            continue
        shared = [j for j, v in enumerate(local) if v in cols]
        new = [j for j, v in enumerate(local) if v not in cols]
        base = space.num_points
        key_sub = _encode(sub[:, shared], base)
        order = np.argsort(key_sub, kind="stable")
        key_sorted = key_sub[order]
        key_rows = _encode(rows[:, [cols[local[j]] for j in shared]], base)
        lo = np.searchsorted(key_sorted, key_rows, side="left")
        hi = np.searchsorted(key_sorted, key_rows, side="right")
        counts = hi - lo
        check_budget(int(counts.sum()) * 2**n, budget, f"corner enumeration n={n}")
        rep = np.repeat(np.arange(rows.shape[0]), counts)
        offs = np.arange(rep.size) - np.repeat(np.cumsum(counts) - counts, counts)
        match = order[np.repeat(lo, counts) + offs]
        rows = np.concatenate([rows[rep], sub[match][:, new]], axis=1)
        for j in new:
            cols[local[j]] = len(cols)
    verts = sorted(cols, key=cols.get)
    return rows, verts


def _completion_counts(space, n, corners, verts, chunk=1 << 20):
    """Number of z making each corner a full n-cube (tries every point)."""
    P = space.num_points
    full = np.zeros((corners.shape[0], 2**n), dtype=np.int64)
    full[:, verts] = corners
    top = 2**n - 1
    counts = np.zeros(corners.shape[0], dtype=np.int64)
    step = max(1, chunk // P)
    for s in range(0, corners.shape[0], step):
        block = np.repeat(full[s:s + step], P, axis=0)
        block[:, top] = np.tile(np.arange(P), block.shape[0] // P)
        counts[s:s + step] = space.is_cube(block).reshape(-1, P).sum(axis=1)
    return counts


def corner_complete(space, corner):
    """All z such that ``corner`` (labels on {0,1}^n minus 1^n, vertex order) plus z is a cube."""
    corner = [int(x) for x in (corner.values() if isinstance(corner, dict) else corner)]
    n = int(round(math.log2(len(corner) + 1)))
    if 2**n - 1 != len(corner):
        raise StructuralError("a corner has 2^n - 1 labels")
    full = np.array(corner + [0], dtype=np.int64)
    for i in range(1, n + 1):
        bit = 1 << (i - 1)
        face = [v for v in range(2**n) if not v & bit]
        if n > 1 and not space.is_cube(full[face][None, :])[0]:
            raise StructuralError(f"corner face v_{i} = 0 is not a cube")
    block = np.repeat(full[None, :], space.num_points, axis=0)
    block[:, -1] = np.arange(space.num_points)
    return [int(z) for z in np.flatnonzero(space.is_cube(block))]


@dataclass
class NilspaceReport:
    k: int
    n_max: int
    composition: bool = True
    ergodicity: bool = True
    gluing: bool = True
    uniqueness: bool = True
    witnesses: dict = field(default_factory=dict)
    completion_counts: dict = field(default_factory=dict)  # n -> sorted distinct counts
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.composition and self.ergodicity and self.gluing and self.uniqueness

    def to_dict(self):
        return {"k": self.k, "n_max": self.n_max, "passed": self.passed,
                "composition": self.composition, "ergodicity": self.ergodicity,
                "gluing": self.gluing, "uniqueness": self.uniqueness,
                "witnesses": self.witnesses,
                "completion_counts": {str(n): c for n, c in sorted(self.completion_counts.items())},
                "notes": self.notes}


def check_nilspace_axioms(space, k, n_max, budget=None):
    """Composition, ergodicity, gluing and k-step uniqueness on dimensions <= n_max.

    Composition is tested against the generating morphisms of
    :func:`hofa.cubespace.morphism_generators`; gluing and uniqueness use every
    corner (rooted corners when the oracle is homogeneous).
    """
    report = NilspaceReport(k, n_max)
    if space.rooted_cubes is not None:
        report.notes.append("rooted cubes and corners; translations assumed cube-preserving")
    report.notes.append("composition checked on generating morphisms")
    P = space.num_points
    check_budget(P * P, budget, "ergodicity pairs")
    pairs = np.stack(np.meshgrid(np.arange(P), np.arange(P), indexing="ij"), -1).reshape(-1, 2)
    bad = ~space.is_cube(pairs)
    if bad.any():
        report.ergodicity = False
        report.witnesses["ergodicity"] = pairs[np.argmax(bad)].tolist()
    for n in range(1, n_max + 1):
        cubes = space.cubes(n, budget)
        bad = ~space.is_cube(cubes)
        if bad.any():
            report.composition = False
            report.witnesses.setdefault("composition", {"n": n, "cube": cubes[np.argmax(bad)].tolist(),
                                                        "morphism": "enumerated cube rejected"})
        for phi in morphism_generators(n, max_source=n_max):
            if phi.source_dim == 0:
                continue
            comp = cubes[:, phi.vertex_map()]
            bad = ~space.is_cube(comp)
            if bad.any():
                report.composition = False
                report.witnesses.setdefault("composition", {
                    "n": n, "cube": cubes[np.argmax(bad)].tolist(), "morphism": phi.to_strings()})
    for n in range(1, max(n_max, k + 1) + 1):
        corners, verts = _join_corners(space, n, budget)
        counts = _completion_counts(space, n, corners, verts)
        report.completion_counts[n] = sorted(set(counts.tolist()))
        if (counts == 0).any():
            report.gluing = False
            report.witnesses.setdefault("gluing", {"n": n, "vertices": verts,
                                                   "corner": corners[np.argmax(counts == 0)].tolist()})
        if n == k + 1 and (counts != 1).any():
            report.uniqueness = False
            j = int(np.argmax(counts != 1))
            report.witnesses["uniqueness"] = {"n": n, "vertices": verts, "corner": corners[j].tolist(),
                                              "completions": int(counts[j])}
    return report


# ---------------------------------------------------------------------------
# morphisms from abelian groups


@dataclass
class MorphismCheck:
    ok: bool
    witness: dict = None

    def __bool__(self):
        return self.ok


def is_morphism(phi, spec, space, n_max, budget=None):
    """phi (array of point indices indexed by elements of A) maps every cube of A to a cube."""
    phi = np.asarray(phi, dtype=np.int64)
    if phi.shape != (spec.order,):
        raise StructuralError("phi needs one point per group element")
    for n in range(1, n_max + 1):
        labels = all_cubes(spec, n, budget)
        img = phi[labels]
        bad = ~space.is_cube(img)
        if bad.any():
            j = int(np.argmax(bad))
            return MorphismCheck(False, {"n": n, "cube": labels[j].tolist(), "image": img[j].tolist()})
    return MorphismCheck(True)


# ---------------------------------------------------------------------------
# polynomial maps


@dataclass(eq=False)
class PolynomialMap:
    """A map from a finite abelian group, or from a box [0, B)^n of Z^n, into a group.

    ``table`` holds target element indices: indexed by source element index
    for a GroupSpec source, or an array of shape (B,)*n for a box source.
    ``target`` is a GroupSpec (written additively) or a FilteredGroup.
    """

    source: object  # GroupSpec or int n (box of Z^n)
    target: object
    table: np.ndarray
    box: int = None
    label: str = ""

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=np.int64)
        if isinstance(self.source, GroupSpec):
            if self.table.shape != (self.source.order,):
                raise StructuralError("table needs one value per source element")
        else:
            if self.box is None:
                raise StructuralError("Z^n sources need an evaluation box")
            if self.table.shape != (self.box,) * int(self.source):
                raise StructuralError("table shape does not match the box")

    @classmethod
    def from_callable(cls, source, target, fn, box=None, label=""):
        """``fn`` receives a residue tuple (GroupSpec source) or integer tuple (box) and returns
        a target element index (FilteredGroup) or residues (GroupSpec target)."""
        def to_index(y):
            if isinstance(target, GroupSpec):
                return int(target.index(np.atleast_1d(y)))
            return int(y)

        if isinstance(source, GroupSpec):
            vals = [to_index(fn(tuple(map(int, r)))) for r in source.all_residues]
            return cls(source, target, vals, label=label)
        n = int(source)
        vals = np.empty((box,) * n, dtype=np.int64)
        for x in product(range(box), repeat=n):
            vals[x] = to_index(fn(x))
        return cls(n, target, vals, box, label)

    def _ops(self):
        if isinstance(self.target, GroupSpec):
            spec = self.target
            return spec.add_indices, spec.neg_indices, 0
        return self.target.mul, self.target.inv, self.target.identity

    def __add__(self, other):
        """Pointwise group product (sum for abelian targets)."""
        mul, _, _ = self._ops()
        return PolynomialMap(self.source, self.target, mul(self.table, other.table), self.box,
                             f"({self.label})+({other.label})")

    def times(self, other):
        """Pointwise ring product of residues (abelian targets only)."""
        if not isinstance(self.target, GroupSpec):
            raise StructuralError("ring products need an abelian target")
        spec = self.target
        res = spec.residues(self.table) * spec.residues(other.table)
        return PolynomialMap(self.source, self.target, spec.index(res), self.box,
                             f"({self.label})*({other.label})")


def _iterated_differences(phi, k):
    """Yield every (k+1)-fold difference table D_{h_1}...D_{h_{k+1}} phi."""
    mul, inv, _ = phi._ops()
    if isinstance(phi.source, GroupSpec):
        spec = phi.source
        N = spec.order
        add = spec.add_indices(np.arange(N)[:, None], np.arange(N)[None, :])  # add[g, h]
        cur = phi.table[None, :]
        for _ in range(k + 1):
            # cur (R, N) -> (R * N, N): D_h for every h
            nxt = mul(inv(cur)[:, None, :], cur[:, add.T])
            cur = nxt.reshape(-1, N)
        yield cur
        return
    n, B = int(phi.source), phi.box
    keep = B - (k + 1)
    for dirs in product(range(n), repeat=k + 1):
        cur = phi.table
        for axis in dirs:
            lo = [slice(None)] * n
            hi = [slice(None)] * n
            lo[axis] = slice(0, cur.shape[axis] - 1)
            hi[axis] = slice(1, None)
            cur = mul(inv(cur[tuple(lo)]), cur[tuple(hi)])
        yield cur[(slice(0, keep),) * n]


def is_polynomial_of_degree(phi, k, budget=None):
    """True iff every (k+1)-fold D_h application is identically trivial.

    Finite sources: all h.  Box sources: h over unit vectors on the shrunken box.
    """
    _, _, ident = phi._ops()
    if k < 0:
        return bool(np.all(phi.table == ident))
    if isinstance(phi.source, GroupSpec):
        check_budget(phi.source.order ** (k + 2), budget, "difference operator tables")
    elif phi.box < k + 2:
        raise StructuralError(f"box of size {phi.box} too small for degree {k} (needs {k + 2})")
    return all(bool(np.all(d == ident)) for d in _iterated_differences(phi, k))


def polynomial_basis(n, k, A, box=None):
    """Maps x -> a * prod_i binom(x_i, e_i) from Z^n to A, sum e_i <= k, a a generator of A."""
    box = k + 2 if box is None else box
    if box < k + 2:
        raise StructuralError("box must be at least k + 2")
    grid = np.indices((box,) * n)
    out = []
    for total in range(k + 1):
        for combo in combinations_with_replacement(range(n), total):
            exps = [combo.count(i) for i in range(n)]
            mono = np.ones((box,) * n, dtype=object)
            for i, ei in enumerate(exps):
                mono = mono * np.vectorize(lambda x, e=ei: math.comb(int(x), e), otypes=[object])(grid[i])
            for gi, g in enumerate(A.generators()):
                res = np.zeros(mono.shape + (A.rank,), dtype=np.int64)
                res[..., gi] = (mono % A.moduli[gi]).astype(np.int64)
                label = f"e{gi + 1}*" + "*".join(f"C(x{i + 1},{e})" for i, e in enumerate(exps))
                out.append(PolynomialMap(n, A, A.index(res), box, label))
    return out


# ---------------------------------------------------------------------------
# Fourier components along the top structure group


def _check_free(act):
    P, R = act.shape
    if not np.array_equal(act[:, 0], np.arange(P)):
        raise StructuralError("the identity must act trivially")
    if R > 1 and np.any(act[:, 1:] == np.arange(P)[:, None]):
        raise StructuralError("action is not free")


def character_component(f, chi, act):
    """f_chi(x) = E_b f(x + b) conj(chi(b)) for a free action act[x, b] of the structure group."""
    act = np.asarray(act, dtype=np.int64)
    _check_free(act)
    f = np.asarray(f, dtype=complex)
    if act.shape[1] != chi.spec.order:
        raise StructuralError("action and character use different groups")
    return (f[act] * np.conj(chi.values())[None, :]).mean(axis=1)


def fourier_components(f, spec, act):
    return {chi.frequencies: character_component(f, chi, act) for chi in spec.characters()}


# ---------------------------------------------------------------------------
# dual cubes


@dataclass
class DualCubeResult:
    value: complex
    violations: list

    @property
    def valid(self):
        return not self.violations


def _exact_phase(spec, freqs, elems, signs):
    """sum_v sign_v <freq_v, elem_v> as an exact fraction of the lcm of the moduli."""
    den = math.lcm(*spec.moduli)
    scale = np.array([den // m for m in spec.moduli], dtype=object)
    fr = spec.residues(freqs).astype(object)
    el = spec.residues(elems).astype(object)
    num = int(np.sum(np.asarray(signs, dtype=object)[:, None] * fr * el * scale[None, :]))
    return num % den, den


def dual_cube_orthogonality(spec, n, k, dual, cube, punctured=False):
    """prod_v chi_v^*(c(v)); equals 1 for a degree-(n-k-1) dual cube and degree-k cube.

    ``dual`` lists character frequency indices (or Characters) per vertex; in the
    punctured variant the entry at vertex 0 is ignored and ``cube`` must have c(0) = 0.
    """
    dual = np.array([d.index if isinstance(d, Character) else int(d) for d in dual], dtype=np.int64)
    labels = cube.labels if hasattr(cube, "labels") else np.asarray(cube, dtype=np.int64)
    if dual.size != 2**n or labels.size != 2**n:
        raise StructuralError("dual cube and cube need 2^n labels")
    violations = []
    if not degree_cube_mask(spec, labels[None, :], k)[0]:
        violations.append(f"cube is not a degree-{k} cube")
    j = n - k - 1
    if punctured:
        if labels[0] != 0:
            violations.append("cube is not rooted at 0")
        if j <= -1:
            if np.any(dual[1:] != 0):
                violations.append("dual map must vanish on K_n")
        elif j + 1 <= n:
            fs = [f for f in faces(n, j + 1) if 0 not in f]
            if fs:
                res = spec.residues(dual)[np.array(fs)]
                sums = np.einsum("j,fjr->fr", face_signs(j + 1), res)
                if np.any(sums % spec._mod):
                    violations.append(f"dual map is not in hom(K_n, D_{j})")
        verts = np.arange(1, 2**n)
    else:
        if not degree_cube_mask(spec, dual[None, :], j)[0]:
            violations.append(f"dual labelling is not a degree-{j} cube")
        verts = np.arange(2**n)
    signs = 1 - 2 * parity_array(n)[verts]
    num, den = _exact_phase(spec, dual[verts], labels[verts], signs)
    return DualCubeResult(complex(np.exp(2j * np.pi * num / den)), violations)
