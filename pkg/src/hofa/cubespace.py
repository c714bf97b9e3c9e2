"""Discrete cubes {0,1}^n, cube morphisms, cubes C^n(A) and degree-k cubes D_k(A).

Vertices are bitmasks: coordinate i (1-based) is bit i-1.  A labelling of
{0,1}^n is therefore a length-2^n array whose position ``v`` holds the label
of vertex ``v``.  Labels are stored as element indices of a GroupSpec.
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
import json
import math

import numpy as np

from ._config import StructuralError, check_budget, make_rng
from .abelian import GroupElement, GroupSpec


def popcount(v):
    return bin(int(v)).count("1")


@lru_cache(maxsize=None)
def parity_array(n):
    v = np.arange(2**n)
    return np.array([popcount(x) & 1 for x in v], dtype=np.int64)


def vertex_tuple(v, n):
    return tuple((int(v) >> i) & 1 for i in range(n))


def vertex_mask(bits):
    return sum(int(b) << i for i, b in enumerate(bits))


@lru_cache(maxsize=None)
def faces(n, d):
    """All d-dimensional faces of {0,1}^n as an int array of shape (count, 2^d).

    Row entries are listed in the face's own bitmask order (local bit j is the
    j-th smallest free coordinate), so ``(-1)^popcount(j)`` is the local sign.
    """
    if d < 0 or d > n:
        return np.zeros((0, 2**max(d, 0)), dtype=np.int64)
    rows = []
    for free in combinations(range(n), d):
        fixed = [i for i in range(n) if i not in free]
        for fvals in range(2 ** len(fixed)):
            base = sum(((fvals >> j) & 1) << c for j, c in enumerate(fixed))
            row = []
            for local in range(2**d):
                row.append(base + sum(((local >> j) & 1) << c for j, c in enumerate(free)))
            rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(-1, 2**d)


def face_signs(d):
    return 1 - 2 * parity_array(d)


# ---------------------------------------------------------------------------
# morphisms


_KINDS = ("const0", "const1", "var", "negvar")


def _parse_descriptor(desc):
    if isinstance(desc, tuple):
        kind, i = desc
    elif desc in (0, "0"):
        kind, i = "const0", 0
    elif desc in (1, "1"):
        kind, i = "const1", 0
    elif isinstance(desc, str) and desc.startswith("1-x"):
        kind, i = "negvar", int(desc[3:])
    elif isinstance(desc, str) and desc.startswith("x"):
        kind, i = "var", int(desc[1:])
    else:
        raise StructuralError(f"bad coordinate descriptor {desc!r}")
    if kind not in _KINDS:
        raise StructuralError(f"bad coordinate descriptor {desc!r}")
    return (kind, int(i))


@dataclass(frozen=True)
class CubeMorphism:
    """A morphism {0,1}^a -> {0,1}^b.

    Each target coordinate is one of ``"0"``, ``"1"``, ``"x<i>"`` or
    ``"1-x<i>"`` with ``1 <= i <= a``.
    """

    source_dim: int
    target_dim: int
    descriptors: tuple

    def __post_init__(self):
        descs = tuple(_parse_descriptor(d) for d in self.descriptors)
        if len(descs) != self.target_dim:
            raise StructuralError("need one descriptor per target coordinate")
        for kind, i in descs:
            if kind in ("var", "negvar") and not 1 <= i <= self.source_dim:
                raise StructuralError(f"variable index {i} out of range 1..{self.source_dim}")
        object.__setattr__(self, "descriptors", descs)

    @classmethod
    def identity(cls, n):
        return cls(n, n, tuple(("var", i + 1) for i in range(n)))

    def __call__(self, v):
        """Image of a vertex given as a bitmask (returns a bitmask) or a bit tuple (returns a tuple)."""
        if isinstance(v, tuple):
            return vertex_tuple(self(vertex_mask(v)), self.target_dim)
        bits = vertex_tuple(v, self.source_dim)
        out = 0
        for j, (kind, i) in enumerate(self.descriptors):
            if kind == "const1":
                b = 1
            elif kind == "var":
                b = bits[i - 1]
            elif kind == "negvar":
                b = 1 - bits[i - 1]
            else:
                b = 0
            out |= b << j
        return out

    def vertex_map(self):
        return np.array([self(v) for v in range(2**self.source_dim)], dtype=np.int64)

    def compose(self, inner):
        """self o inner: first apply ``inner``, then ``self``."""
        if inner.target_dim != self.source_dim:
            raise StructuralError("dimension mismatch in composition")
        flip = {"const0": "const1", "const1": "const0", "var": "negvar", "negvar": "var"}
        out = []
        for kind, i in self.descriptors:
            if kind in ("const0", "const1"):
                out.append((kind, 0))
            elif kind == "var":
                out.append(inner.descriptors[i - 1])
            else:
                k2, i2 = inner.descriptors[i - 1]
                out.append((flip[k2], i2))
        return CubeMorphism(inner.source_dim, self.target_dim, tuple(out))

    def is_injective(self):
        return len(set(self.vertex_map().tolist())) == 2**self.source_dim

    def to_strings(self):
        names = {"const0": lambda i: "0", "const1": lambda i: "1",
                 "var": lambda i: f"x{i}", "negvar": lambda i: f"1-x{i}"}
        return [names[k](i) for k, i in self.descriptors]


def face_inclusion(n, coord, value):
    """{0,1}^(n-1) -> {0,1}^n placing ``value`` at 1-based coordinate ``coord``."""
    descs, src = [], 1
    for j in range(1, n + 1):
        if j == coord:
            descs.append(f"{int(value)}")
        else:
            descs.append(f"x{src}")
            src += 1
    return CubeMorphism(n - 1, n, tuple(descs))


def morphism_generators(n, max_source=None):
    """Morphisms into {0,1}^n that generate all cube morphisms under composition.

    Face inclusions, coordinate projections (from dimension n+1), adjacent
    transpositions, reflections and diagonal duplications.
    """
    max_source = n + 1 if max_source is None else max_source
    gens = []
    for c in range(1, n + 1):
        for val in (0, 1):
            gens.append(face_inclusion(n, c, val))
    if n + 1 <= max_source:
        for drop in range(1, n + 2):
            descs = [f"x{j}" for j in range(1, n + 2) if j != drop]
            gens.append(CubeMorphism(n + 1, n, tuple(descs)))
    for c in range(1, n):
        descs = [f"x{j}" for j in range(1, n + 1)]
        descs[c - 1], descs[c] = descs[c], descs[c - 1]
        gens.append(CubeMorphism(n, n, tuple(descs)))
    for c in range(1, n + 1):
        descs = [f"x{j}" for j in range(1, n + 1)]
        descs[c - 1] = f"1-x{c}"
        gens.append(CubeMorphism(n, n, tuple(descs)))
    if n >= 2:
        # coordinates 1 and 2 both follow x1
        descs = ["x1", "x1"] + [f"x{j}" for j in range(2, n)]
        gens.append(CubeMorphism(n - 1, n, tuple(descs)))
    return [g for g in gens if g.source_dim >= 0]


# ---------------------------------------------------------------------------
# labellings


@dataclass(eq=False)
class CubeMap:
    """Labelling of {0,1}^n by elements of a finite abelian group."""

    spec: GroupSpec
    dim: int
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.labels.size != 2**self.dim:
            raise StructuralError(f"need 2^{self.dim} labels, got {self.labels.size}")
        if np.any(self.labels < 0) or np.any(self.labels >= self.spec.order):
            raise StructuralError("label index out of range")

    @classmethod
    def from_elements(cls, elements, spec=None):
        elements = list(elements)
        if spec is None:
            spec = elements[0].spec
        n = int(round(math.log2(len(elements))))
        return cls(spec, n, [spec.element(x).index for x in elements])

    def __getitem__(self, v):
        return self.spec.element_at(self.labels[int(v)])

    def elements(self):
        return [self[v] for v in range(2**self.dim)]

    def __eq__(self, other):
        return (isinstance(other, CubeMap) and other.spec == self.spec
                and other.dim == self.dim and np.array_equal(other.labels, self.labels))

    def residues(self):
        return self.spec.residues(self.labels)

    def to_dict(self):
        return {"moduli": list(self.spec.moduli), "dim": self.dim,
                "labels": [list(map(int, r)) for r in self.residues()]}

    @classmethod
    def from_dict(cls, data):
        spec = GroupSpec(tuple(data["moduli"]))
        return cls(spec, int(data["dim"]), [int(spec.index(r)) for r in data["labels"]])

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(eq=False)
class PartialCubeMap:
    """Labels on a nonempty subset S of {0,1}^n, as a dict vertex -> element index."""

    spec: GroupSpec
    dim: int
    labels: dict

    def __post_init__(self):
        if not self.labels:
            raise StructuralError("partial cube map needs a nonempty domain")
        clean = {}
        for v, x in self.labels.items():
            v = int(v)
            if not 0 <= v < 2**self.dim:
                raise StructuralError(f"vertex {v} outside {{0,1}}^{self.dim}")
            clean[v] = self.spec.element(x).index if isinstance(x, (GroupElement, tuple, list)) else int(x)
        self.labels = clean

    @property
    def domain(self):
        return sorted(self.labels)


# ---------------------------------------------------------------------------
# cube predicates


def degree_cube_mask(spec, labels, k):
    """Vectorized degree-k test for an (M, 2^n) array of label indices."""
    labels = np.atleast_2d(np.asarray(labels, dtype=np.int64))
    n = int(round(math.log2(labels.shape[1])))
    if k <= -1:
        return np.all(labels == 0, axis=1)
    fs = faces(n, k + 1)
    if fs.shape[0] == 0:
        return np.ones(labels.shape[0], dtype=bool)
    res = spec.residues(labels)  # (M, 2^n, r)
    sums = np.einsum("j,mfjr->mfr", face_signs(k + 1), res[:, fs, :])
    return np.all(sums % spec._mod == 0, axis=(1, 2))


def is_degree_cube(c, k):
    return bool(degree_cube_mask(c.spec, c.labels[None, :], k)[0])


def is_cube(c):
    """Every 2-face has vanishing alternating sum c(00) - c(10) - c(01) + c(11)."""
    return is_degree_cube(c, 1)


def cube_from_params(x, t):
    """The cube e -> x + sum_i t_i e_i."""
    if not isinstance(x, GroupElement):
        raise StructuralError("base point must be a GroupElement")
    spec = x.spec
    t = [spec.element(ti) for ti in t]
    n = len(t)
    labels = []
    for v in range(2**n):
        y = x
        for i in range(n):
            if (v >> i) & 1:
                y = y + t[i]
        labels.append(y.index)
    return CubeMap(spec, n, labels)


def cube_params(c):
    """Inverse of cube_from_params for a cube: (c(0), [c(e_i) - c(0)])."""
    x = c[0]
    return x, [c[1 << i] - x for i in range(c.dim)]


def param_cube_labels(spec, n, params):
    """Label array (M, 2^n) for parameter rows (M, n+1) of element indices (x, t_1..t_n)."""
    params = np.atleast_2d(np.asarray(params, dtype=np.int64))
    out = np.empty((params.shape[0], 2**n), dtype=np.int64)
    out[:, 0] = params[:, 0]
    for v in range(1, 2**n):
        low = v & (v - 1)
        bit = (v & -v).bit_length() - 1
        out[:, v] = spec.add_indices(out[:, low], params[:, bit + 1])
    return out


def all_cubes(spec, n, budget=None):
    """Every cube in C^n(A): |A|^(n+1) rows in parameter order."""
    count = spec.order ** (n + 1)
    check_budget(count * 2**n, budget, f"C^{n}(A)")
    grid = np.indices((spec.order,) * (n + 1)).reshape(n + 1, -1).T
    return param_cube_labels(spec, n, grid)


def apply_morphism(c, phi):
    if phi.target_dim != c.dim:
        raise StructuralError(f"morphism target dim {phi.target_dim} != cube dim {c.dim}")
    return CubeMap(c.spec, phi.source_dim, c.labels[phi.vertex_map()])


# ---------------------------------------------------------------------------
# linear algebra over Z / m


def diagonalize(matrix):
    """Integer row/column elimination: returns (U, D, V) with U @ A @ V = D diagonal.

    U and V are unimodular integer matrices (Python ints, no overflow).
    """
    A = [list(map(int, row)) for row in matrix]
    r = len(A)
    c = len(A[0]) if r else 0
    U = [[int(i == j) for j in range(r)] for i in range(r)]
    V = [[int(i == j) for j in range(c)] for i in range(c)]

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for M in (A, V):
            for row in M:
                row[i], row[j] = row[j], row[i]

    for t in range(min(r, c)):
        while True:
            entries = [(abs(A[i][j]), i, j) for i in range(t, r) for j in range(t, c) if A[i][j]]
            if not entries:
                return U, A, V
            _, pi, pj = min(entries)
            if pi != t:
                swap_rows(t, pi)
            if pj != t:
                swap_cols(t, pj)
            p = A[t][t]
            clean = True
            for i in range(t + 1, r):
                q = A[i][t] // p
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[t])]
                    U[i] = [a - q * b for a, b in zip(U[i], U[t])]
                clean &= A[i][t] == 0
            for j in range(t + 1, c):
                q = A[t][j] // p
                if q:
                    for M in (A, V):
                        for row in M:
                            row[j] -= q * row[t]
                clean &= A[t][j] == 0
            if clean:
                break
    return U, A, V


def solve_mod(A, b, m):
    """All solutions of A u = b (mod m).

    Returns None when infeasible, else (particular, generators, orders) where
    every solution is particular + sum s_j generators[j], 0 <= s_j < orders[j],
    uniquely.
    """
    A = np.asarray(A, dtype=object)
    b = [int(x) for x in b]
    rows, cols = A.shape
    if cols == 0:
        return (np.zeros(0, dtype=np.int64), [], []) if all(x % m == 0 for x in b) else None
    if rows == 0:
        gens = [np.eye(cols, dtype=np.int64)[j] for j in range(cols)]
        return np.zeros(cols, dtype=np.int64), gens, [m] * cols
    U, D, V = diagonalize(A.tolist())
    Ub = [sum(U[i][j] * b[j] for j in range(rows)) % m for i in range(rows)]
    y0 = [0] * cols
    gens, orders = [], []
    for i in range(rows):
        d = D[i][i] if i < cols else 0
        if i >= cols:
            if Ub[i] % m:
                return None
            continue
        g = math.gcd(d % m, m)
        if Ub[i] % g:
            return None
        if d % m:
            mg = m // g
            y0[i] = (Ub[i] // g) * pow((d // g) % mg, -1, mg) % mg if mg > 1 else 0
        if g > 1:
            y = [0] * cols
            y[i] = m // g
            gens.append(y)
            orders.append(g)
    for i in range(rows, cols):
        y = [0] * cols
        y[i] = 1
        gens.append(y)
        orders.append(m)

    def back(y):
        return np.array([sum(V[a][j] * y[j] for j in range(cols)) % m for a in range(cols)],
                        dtype=np.int64)

    return back(y0), [back(y) for y in gens], orders


@dataclass
class HomSolution:
    """Affine coset of degree-k completions: particular + span of homogeneous generators."""

    spec: GroupSpec
    dim: int
    particular: CubeMap
    generators: list  # CubeMaps vanishing on the fixed set
    orders: list

    @property
    def count(self):
        if self.particular is None:
            return 0
        return math.prod(self.orders)

    @property
    def empty(self):
        return self.particular is None

    def label_array(self, budget=None):
        """All completions as an (count, 2^n) array of label indices."""
        if self.particular is None:
            return np.zeros((0, 2**self.dim), dtype=np.int64)
        check_budget(self.count * 2**self.dim, budget, "hom-set enumeration")
        res = self.particular.residues()[None, :, :].astype(np.int64)
        for gen, order in zip(self.generators, self.orders):
            steps = np.arange(order)[:, None, None] * gen.residues()[None, :, :]
            res = (res[:, None, :, :] + steps[None, :, :, :]).reshape(-1, *res.shape[1:])
            res %= self.spec._mod
        return self.spec.index(res)

    def enumerate(self, budget=None):
        for row in self.label_array(budget):
            yield CubeMap(self.spec, self.dim, row)

    def random(self, rng=None):
        rng = make_rng(rng)
        res = self.particular.residues().copy()
        for gen, order in zip(self.generators, self.orders):
            res = res + int(rng.integers(order)) * gen.residues()
        return CubeMap(self.spec, self.dim, self.spec.index(res))


def _solve_degree_system(spec, n, k, fixed, domain):
    """Per-factor solve of the degree-k face equations restricted to ``domain``.

    ``fixed`` maps vertex -> element index.  Returns (particular residues over
    all 2^n vertices, homogeneous generator residue arrays, orders) or None.
    Vertices outside ``domain`` carry label 0 and are not constrained.
    """
    domain = sorted(set(domain))
    dset = set(domain)
    unknown = [v for v in domain if v not in fixed]
    col = {v: j for j, v in enumerate(unknown)}
    if k <= -1:
        eqs = [([v], [1]) for v in domain]
    else:
        fs = faces(n, k + 1)
        signs = face_signs(k + 1)
        eqs = [(list(f), list(signs)) for f in fs if all(int(v) in dset for v in f)]
    fixed_res = {v: spec.residues(x) for v, x in fixed.items()}
    size = 2**n
    part = np.zeros((size, spec.rank), dtype=np.int64)
    for v, r in fixed_res.items():
        part[v] = r
    gens, orders = [], []
    for axis, m in enumerate(spec.moduli):
        A = [[0] * len(unknown) for _ in eqs]
        b = []
        for row, (verts, sg) in enumerate(eqs):
            rhs = 0
            for v, s in zip(verts, sg):
                v = int(v)
                if v in col:
                    A[row][col[v]] += int(s)
                else:
                    rhs -= int(s) * int(fixed_res[v][axis])
            b.append(rhs)
        sol = solve_mod(np.array(A, dtype=object).reshape(len(eqs), len(unknown)), b, m)
        if sol is None:
            return None
        u0, ugens, uorders = sol
        for v, j in col.items():
            part[v, axis] = u0[j]
        for g, o in zip(ugens, uorders):
            arr = np.zeros((size, spec.rank), dtype=np.int64)
            for v, j in col.items():
                arr[v, axis] = g[j]
            gens.append(arr)
            orders.append(o)
    return part, gens, orders


def solve_hom(partial, k):
    """All degree-k cubes extending ``partial``, as a coset (HomSolution)."""
    spec, n = partial.spec, partial.dim
    sol = _solve_degree_system(spec, n, k, partial.labels, range(2**n))
    if sol is None:
        return HomSolution(spec, n, None, [], [])
    part, gens, orders = sol
    return HomSolution(
        spec, n, CubeMap(spec, n, spec.index(part)),
        [CubeMap(spec, n, spec.index(g)) for g in gens], orders,
    )


def degree_cubes(spec, n, k, base=None):
    """HomSolution for all degree-k n-cubes (rooted at ``base`` if given)."""
    if base is None:
        sol = _solve_degree_system(spec, n, k, {}, range(2**n))
        part, gens, orders = sol
        return HomSolution(spec, n, CubeMap(spec, n, spec.index(part)),
                           [CubeMap(spec, n, spec.index(g)) for g in gens], orders)
    base = spec.element(base).index if not isinstance(base, (int, np.integer)) else int(base)
    return solve_hom(PartialCubeMap(spec, n, {0: base}), k)


def random_degree_cube(spec, n, k, rng=None, base=None):
    return degree_cubes(spec, n, k, base).random(rng)


def random_punctured_degree_map(spec, n, k, rng=None):
    """Uniform random map K_n -> A whose restriction to every face inside K_n is degree-k.

    Returned as a length-2^n label array whose entry at vertex 0 is 0 and meaningless.
    """
    rng = make_rng(rng)
    sol = _solve_degree_system(spec, n, k, {}, range(1, 2**n))
    part, gens, orders = sol
    res = part.copy()
    for g, o in zip(gens, orders):
        res = res + int(rng.integers(o)) * g
    return spec.index(res)
