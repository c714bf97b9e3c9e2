"""Finite abelian groups Z_{m_1} x ... x Z_{m_r}, characters and Fourier transforms.

Elements are enumerated in mixed-radix order with the first modulus most
significant, i.e. numpy C-order on an array of shape ``moduli``.  Every table
in the package (function values, Fourier coefficients) uses this order.
"""

from dataclasses import dataclass, field
from functools import cached_property
import json

import numpy as np

from ._config import StructuralError, make_rng


def e(y):
    """exp(2 pi i y), elementwise."""
    return np.exp(2j * np.pi * np.asarray(y, dtype=float))


@dataclass(frozen=True)
class GroupSpec:
    moduli: tuple

    def __post_init__(self):
        moduli = tuple(int(m) for m in np.atleast_1d(self.moduli))
        if not moduli or any(m < 2 for m in moduli):
            raise StructuralError(f"every modulus must be >= 2, got {moduli}")
        object.__setattr__(self, "moduli", moduli)

    @property
    def order(self):
        return int(np.prod(self.moduli))

    @property
    def rank(self):
        return len(self.moduli)

    @cached_property
    def _mod(self):
        return np.array(self.moduli, dtype=np.int64)

    def __len__(self):
        return self.order

    def __repr__(self):
        return "GroupSpec(" + " x ".join(f"Z_{m}" for m in self.moduli) + ")"

    # index <-> residues -------------------------------------------------
    def residues(self, index):
        """Residue vectors for element indices, shape ``index.shape + (rank,)``."""
        index = np.asarray(index, dtype=np.int64)
        return np.stack(np.unravel_index(index, self.moduli), axis=-1)

    def index(self, residues):
        residues = np.asarray(residues, dtype=np.int64) % self._mod
        return np.ravel_multi_index(np.moveaxis(residues, -1, 0), self.moduli)

    @cached_property
    def all_residues(self):
        return self.residues(np.arange(self.order))

    @cached_property
    def add_table(self):
        if self.order > 4096:
            return None
        r = self.all_residues
        return self.index(r[:, None, :] + r[None, :, :])

    def add_indices(self, i, j):
        """Elementwise sum of element indices (broadcasting)."""
        table = self.add_table
        if table is not None:
            return table[i, j]
        return self.index(self.residues(i) + self.residues(j))

    def neg_indices(self, i):
        return self.index(-self.residues(i))

    def sub_indices(self, i, j):
        return self.add_indices(i, self.neg_indices(j))

    def scale_indices(self, i, c):
        return self.index(self.residues(i) * int(c))

    # element objects ----------------------------------------------------
    def element(self, residues):
        if isinstance(residues, GroupElement):
            if residues.spec != self:
                raise StructuralError("element belongs to a different group")
            return residues
        return GroupElement(self, tuple(int(r) for r in np.atleast_1d(residues)))

    def element_at(self, index):
        return GroupElement(self, tuple(int(r) for r in self.residues(int(index))))

    @property
    def identity(self):
        return GroupElement(self, (0,) * self.rank)

    def elements(self):
        for i in range(self.order):
            yield self.element_at(i)

    def characters(self):
        for i in range(self.order):
            yield Character(self, tuple(int(r) for r in self.residues(i)))

    def random_element(self, rng=None):
        rng = make_rng(rng)
        return self.element_at(rng.integers(self.order))

    def generators(self):
        """Unit vectors, one per cyclic factor."""
        out = []
        for i in range(self.rank):
            r = [0] * self.rank
            r[i] = 1
            out.append(self.element(r))
        return out


@dataclass(frozen=True)
class GroupElement:
    spec: GroupSpec
    residues: tuple

    def __post_init__(self):
        if len(self.residues) != self.spec.rank:
            raise StructuralError("residue count does not match the number of moduli")
        reduced = tuple(int(r) % m for r, m in zip(self.residues, self.spec.moduli))
        object.__setattr__(self, "residues", reduced)

    @property
    def index(self):
        return int(self.spec.index(self.residues))

    def _check(self, other):
        if not isinstance(other, GroupElement) or other.spec != self.spec:
            raise StructuralError("elements belong to different groups")

    def __add__(self, other):
        self._check(other)
        return GroupElement(self.spec, tuple(a + b for a, b in zip(self.residues, other.residues)))

    def __neg__(self):
        return GroupElement(self.spec, tuple(-a for a in self.residues))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        return GroupElement(self.spec, tuple(int(c) * a for a in self.residues))

    __rmul__ = __mul__

    def __repr__(self):
        return f"{self.residues}"


def add(a, b):
    return a + b


def neg(a):
    return -a


@dataclass(frozen=True)
class Character:
    """x -> e(sum_i freq_i * x_i / m_i)."""

    spec: GroupSpec
    frequencies: tuple

    def __post_init__(self):
        if len(self.frequencies) != self.spec.rank:
            raise StructuralError("frequency count does not match the number of moduli")
        reduced = tuple(int(r) % m for r, m in zip(self.frequencies, self.spec.moduli))
        object.__setattr__(self, "frequencies", reduced)

    @property
    def index(self):
        return int(self.spec.index(self.frequencies))

    def phase(self, index):
        """Phase in [0, 1) at element indices (vectorized)."""
        r = self.spec.residues(index)
        num = r * np.array(self.frequencies)
        return np.sum((num % self.spec._mod) / self.spec._mod, axis=-1) % 1.0

    def __call__(self, x):
        return char_eval(self, x)

    def values(self):
        return e(self.phase(np.arange(self.spec.order)))

    def as_function(self):
        return GroupFunction(self.spec, self.values())

    def conj(self):
        return Character(self.spec, tuple(-f for f in self.frequencies))

    def __mul__(self, other):
        if other.spec != self.spec:
            raise StructuralError("characters of different groups")
        return Character(self.spec, tuple(a + b for a, b in zip(self.frequencies, other.frequencies)))


def char_eval(chi, x):
    if not isinstance(x, GroupElement) or x.spec != chi.spec:
        raise StructuralError("character and element belong to different groups")
    # exact rational phase: sum f_i x_i / m_i reduced mod 1 via a common denominator
    den = 1
    for m in chi.spec.moduli:
        den = den * m // np.gcd(den, m)
    num = sum(f * r * (den // m) for f, r, m in zip(chi.frequencies, x.residues, chi.spec.moduli))
    return complex(np.exp(2j * np.pi * ((num % den) / den)))


@dataclass(eq=False)
class GroupFunction:
    """Complex table on a finite abelian group, indexed in mixed-radix order."""

    group: GroupSpec
    values: np.ndarray
    bound: float = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).ravel()
        if self.values.shape != (self.group.order,):
            raise StructuralError(
                f"table has {self.values.size} entries, group order is {self.group.order}"
            )
        if self.bound is not None and self.sup_norm() > self.bound + 1e-12:
            raise StructuralError(f"values exceed the declared bound {self.bound}")

    # construction ---------------------------------------------------------
    @classmethod
    def constant(cls, group, c=1.0):
        return cls(group, np.full(group.order, c, dtype=complex))

    @classmethod
    def from_callable(cls, group, fn):
        return cls(group, [fn(x) for x in group.elements()])

    @classmethod
    def random_unimodular(cls, group, rng=None):
        rng = make_rng(rng)
        return cls(group, e(rng.random(group.order)), bound=1.0)

    @classmethod
    def random_bounded(cls, group, rng=None):
        """Uniform in the closed unit disc at every point."""
        rng = make_rng(rng)
        radius = np.sqrt(rng.random(group.order))
        return cls(group, radius * e(rng.random(group.order)), bound=1.0)

    @classmethod
    def indicator(cls, group, elements):
        vals = np.zeros(group.order, dtype=complex)
        for x in elements:
            vals[group.element(x).index] = 1.0
        return cls(group, vals)

    # evaluation -----------------------------------------------------------
    def __call__(self, x):
        return self.values[self.group.element(x).index]

    def shift(self, t):
        """x -> f(x + t)."""
        t = self.group.element(t)
        idx = self.group.add_indices(np.arange(self.group.order), t.index)
        return GroupFunction(self.group, self.values[idx])

    def conj(self):
        return GroupFunction(self.group, self.values.conj())

    def _other(self, other):
        if isinstance(other, GroupFunction):
            if other.group != self.group:
                raise StructuralError("functions live on different groups")
            return other.values
        return other

    def __mul__(self, other):
        return GroupFunction(self.group, self.values * self._other(other))

    __rmul__ = __mul__

    def __add__(self, other):
        return GroupFunction(self.group, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GroupFunction(self.group, self.values - self._other(other))

    def __neg__(self):
        return GroupFunction(self.group, -self.values)

    def mean(self):
        return complex(np.mean(self.values))

    def inner(self, other):
        """(f, g) = E f conj(g)."""
        return complex(np.mean(self.values * np.conj(self._other(other))))

    def lp_norm(self, p):
        return float(np.mean(np.abs(self.values) ** p) ** (1.0 / p))

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def allclose(self, other, atol=1e-9):
        return bool(np.max(np.abs(self.values - self._other(other))) <= atol)

    # serialization ---------------------------------------------------------
    def to_dict(self):
        return {
            "moduli": list(self.group.moduli),
            "values": [[float(v.real), float(v.imag)] for v in self.values],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            group = GroupSpec(tuple(data["moduli"]))
            vals = np.array([complex(re, im) for re, im in data["values"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"malformed GroupFunction JSON: {exc}") from exc
        return cls(group, vals)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Fourier transform.  Per cyclic factor: direct O(m^2) summation for m <= 64
# or non power-of-two m, radix-2 recursion for larger powers of two.

DIRECT_LIMIT = 64


def _dft_matrix(m, sign):
    k = np.arange(m)
    return np.exp(sign * 2j * np.pi * np.outer(k, k) / m)


def _radix2(a, sign):
    """Unnormalized transform sum_x a[..., x] e(sign * xi x / m) along the last axis."""
    m = a.shape[-1]
    if m <= 2:
        return a @ _dft_matrix(m, sign).T
    even = _radix2(a[..., 0::2], sign)
    odd = _radix2(a[..., 1::2], sign)
    tw = np.exp(sign * 2j * np.pi * np.arange(m // 2) / m) * odd
    return np.concatenate([even + tw, even - tw], axis=-1)


def _transform_axis(a, axis, sign):
    m = a.shape[axis]
    a = np.moveaxis(a, axis, -1)
    if m > DIRECT_LIMIT and m & (m - 1) == 0:
        out = _radix2(a, sign)
    else:
        out = a @ _dft_matrix(m, sign).T
    return np.moveaxis(out, -1, axis)


def dft(f):
    """Fourier coefficients lambda_chi = E_x f(x) conj(chi(x)), in mixed-radix order of chi."""
    a = f.values.reshape(f.group.moduli)
    for axis in range(a.ndim):
        a = _transform_axis(a, axis, -1)
    return a.ravel() / f.group.order


def inverse_dft(coefficients, group):
    """f(x) = sum_chi lambda_chi chi(x)."""
    a = np.asarray(coefficients, dtype=complex).reshape(group.moduli)
    for axis in range(a.ndim):
        a = _transform_axis(a, axis, +1)
    return GroupFunction(group, a.ravel())


def fourier_support(f, tol=1e-12):
    """(frequency indices, coefficients) of the characters with |lambda| > tol."""
    lam = dft(f)
    idx = np.flatnonzero(np.abs(lam) > tol)
    return idx, lam[idx]
