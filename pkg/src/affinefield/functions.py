"""Sets and real functions on F^m with the diagonal affine action.

Measures are exact (``fractions.Fraction``); function values are float64.
The inner product is normalised, <f, g> = |F|^-m * sum f(x) g(x), so that
``norm2sq(indicator(B)) == measure(B)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import FieldMismatch, GridTooLarge, ShapeMismatch, ZeroScale
from .field import Field

MAX_DIM = 3
GRID_CAP = 2**24


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class FieldSubset:
    """Subset of F stored as a boolean membership mask over element indices."""

    __slots__ = ("field", "mask")

    def __init__(self, field: Field, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (field.order,):
            raise ShapeMismatch(f"mask of shape {mask.shape} for field of order {field.order}")
        if mask.flags.writeable:
            mask = _frozen(mask.copy())
        self.field = field
        self.mask = mask

    @classmethod
    def from_indices(cls, field: Field, indices: Iterable[int]) -> "FieldSubset":
        mask = np.zeros(field.order, dtype=bool)
        idx = np.fromiter((int(i) for i in indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= field.order):
            raise FieldMismatch(f"element index out of range for {field}")
        mask[idx] = True
        return cls(field, mask)

    @classmethod
    def full(cls, field: Field) -> "FieldSubset":
        return cls(field, np.ones(field.order, dtype=bool))

    @classmethod
    def empty(cls, field: Field) -> "FieldSubset":
        return cls(field, np.zeros(field.order, dtype=bool))

    @classmethod
    def star(cls, field: Field) -> "FieldSubset":
        mask = np.ones(field.order, dtype=bool)
        mask[0] = False
        return cls(field, mask)

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.mask))

    def __len__(self) -> int:
        return self.size

    def members(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __contains__(self, a) -> bool:
        return bool(self.mask[int(a)])

    def __iter__(self):
        return iter(int(i) for i in self.members())

    def __eq__(self, other):
        if not isinstance(other, FieldSubset):
            return NotImplemented
        return self.field == other.field and bool(np.array_equal(self.mask, other.mask))

    def __hash__(self):
        return hash((self.field, self.mask.tobytes()))

    def __repr__(self):
        return f"FieldSubset({self.field}, {self.members().tolist()})"

    def _check(self, other: "FieldSubset") -> None:
        self.field.check_same(other.field)

    def __and__(self, other: "FieldSubset") -> "FieldSubset":
        self._check(other)
        return FieldSubset(self.field, self.mask & other.mask)

    def __or__(self, other: "FieldSubset") -> "FieldSubset":
        self._check(other)
        return FieldSubset(self.field, self.mask | other.mask)

    def __sub__(self, other: "FieldSubset") -> "FieldSubset":
        self._check(other)
        return FieldSubset(self.field, self.mask & ~other.mask)

    def complement(self) -> "FieldSubset":
        return FieldSubset(self.field, ~self.mask)

    def translate(self, w: int) -> "FieldSubset":
        return translate_set(self, w)

    def scale(self, w: int) -> "FieldSubset":
        return scale_set(self, w)

    def without_zero(self) -> "FieldSubset":
        m = self.mask.copy()
        m[0] = False
        return FieldSubset(self.field, m)


@dataclass(frozen=True)
class ProductSet:
    """B_1 x ... x B_m inside F^m, 1 <= m <= 3."""

    factors: tuple[FieldSubset, ...]

    def __post_init__(self):
        factors = tuple(self.factors)
        if not 1 <= len(factors) <= MAX_DIM:
            raise ShapeMismatch(f"product sets have 1..{MAX_DIM} factors, got {len(factors)}")
        for f in factors[1:]:
            factors[0].field.check_same(f.field)
        object.__setattr__(self, "factors", factors)

    @property
    def field(self) -> Field:
        return self.factors[0].field

    @property
    def m(self) -> int:
        return len(self.factors)

    @property
    def size(self) -> int:
        out = 1
        for f in self.factors:
            out *= f.size
        return out

    def grid_mask(self) -> np.ndarray:
        _check_grid(self.field, self.m)
        out = self.factors[0].mask
        for f in self.factors[1:]:
            out = np.logical_and.outer(out, f.mask)
        return out


SetLike = Union[FieldSubset, ProductSet]


def _as_product(S: SetLike) -> ProductSet:
    return S if isinstance(S, ProductSet) else ProductSet((S,))


def measure(S: SetLike) -> Fraction:
    """|S| / |F|^m, exactly."""
    P = _as_product(S)
    return Fraction(P.size, P.field.order**P.m)


def translate_set(S: FieldSubset, w: int) -> FieldSubset:
    """A_w S = S + w."""
    F = S.field
    return FieldSubset(F, S.mask[F.sub(F.elements(), int(w))])


def scale_set(S: FieldSubset, w: int) -> FieldSubset:
    """M_w S = w S."""
    if int(w) == 0:
        raise ZeroScale("M_0 is not an element of the affine group")
    F = S.field
    return FieldSubset(F, S.mask[F.div(F.elements(), int(w))])


def _check_grid(field: Field, m: int) -> None:
    if not 1 <= m <= MAX_DIM:
        raise GridTooLarge(f"dimension {m} outside 1..{MAX_DIM}")
    if field.order**m > GRID_CAP:
        raise GridTooLarge(f"|F|^m = {field.order}^{m} exceeds {GRID_CAP}")


class GridFn:
    """Real function on F^m as a dense float64 array of shape (|F|,)*m."""

    __slots__ = ("field", "values")

    def __init__(self, field: Field, values):
        values = np.asarray(values, dtype=np.float64)
        m = values.ndim
        _check_grid(field, m)
        if values.shape != (field.order,) * m:
            raise ShapeMismatch(f"values of shape {values.shape} for field of order {field.order}")
        if not np.all(np.isfinite(values)):
            raise ValueError("GridFn values must be finite")
        if values.flags.writeable:
            values = _frozen(values.copy())
        self.field = field
        self.values = values

    @property
    def m(self) -> int:
        return self.values.ndim

    @classmethod
    def constant(cls, field: Field, m: int, c: float) -> "GridFn":
        _check_grid(field, m)
        return cls(field, np.full((field.order,) * m, float(c)))

    @classmethod
    def indicator(cls, S: SetLike) -> "GridFn":
        P = _as_product(S)
        return cls(P.field, P.grid_mask().astype(np.float64))

    def _coerce(self, other):
        if isinstance(other, GridFn):
            _check_same_shape(self, other)
            return other.values
        return float(other)

    def __add__(self, other):
        return GridFn(self.field, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFn(self.field, self.values - self._coerce(other))

    def __rsub__(self, other):
        return GridFn(self.field, self._coerce(other) - self.values)

    def __mul__(self, other):
        return GridFn(self.field, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, c: float):
        return GridFn(self.field, self.values / float(c))

    def __neg__(self):
        return GridFn(self.field, -self.values)

    def __repr__(self):
        return f"GridFn({self.field}, m={self.m})"

    def allclose(self, other: "GridFn", atol: float = 1e-12) -> bool:
        _check_same_shape(self, other)
        return bool(np.allclose(self.values, other.values, rtol=0.0, atol=atol))


def _check_same_shape(f: GridFn, g: GridFn) -> None:
    if f.field != g.field or f.m != g.m:
        raise ShapeMismatch(f"{f!r} vs {g!r}")


def _gather(f: GridFn, perm: np.ndarray) -> np.ndarray:
    """values[perm[x_1], ..., perm[x_m]], i.e. the same coordinate map on every axis."""
    if f.m == 1:
        return f.values[perm]
    return f.values[np.ix_(*([perm] * f.m))]


def koopman_add(f: GridFn, u: int) -> GridFn:
    """(A_u f)(x) = f(x - u*1)."""
    F = f.field
    return GridFn(F, _gather(f, F.sub(F.elements(), int(u))))


def koopman_mul(f: GridFn, u: int) -> GridFn:
    """(M_u f)(x) = f(x / u)."""
    if int(u) == 0:
        raise ZeroScale("M_0 is not an element of the affine group")
    F = f.field
    return GridFn(F, _gather(f, F.div(F.elements(), int(u))))


def koopman_affine(f: GridFn, u: int, w: int) -> GridFn:
    """(M_u A_w f)(x) = f(x/u - w); one gather instead of two."""
    if int(u) == 0:
        raise ZeroScale("M_0 is not an element of the affine group")
    F = f.field
    return GridFn(F, _gather(f, F.sub(F.div(F.elements(), int(u)), int(w))))


def _axis_view(F: Field, m: int, axis: int) -> np.ndarray:
    shape = [1] * m
    shape[axis] = F.order
    return F.elements().reshape(shape)


@functools.lru_cache(maxsize=8)
def additive_orbit_keys(F: Field, m: int) -> np.ndarray:
    """Orbit label of each grid point under x -> x + u*1: the differences x_i - x_0."""
    _check_grid(F, m)
    if m == 1:
        return _frozen(np.zeros(F.order, dtype=np.int64))
    x0 = _axis_view(F, m, 0)
    key = np.zeros((1,) * m, dtype=np.int64)
    for i in range(1, m):
        key = key * F.order + F.sub(_axis_view(F, m, i), x0)
    return _frozen(np.broadcast_to(key, (F.order,) * m).copy())


@functools.lru_cache(maxsize=8)
def multiplicative_orbit_keys(F: Field, m: int) -> np.ndarray:
    """Orbit label under x -> u*x: index of x scaled so its first nonzero coordinate is 1.

    The zero vector gets label 0, which no nonzero vector can receive.
    """
    _check_grid(F, m)
    q = F.order
    coords = [np.broadcast_to(_axis_view(F, m, i), (q,) * m) for i in range(m)]
    lead = np.zeros((q,) * m, dtype=np.int64)
    for c in reversed(coords):
        lead = np.where(c != 0, c, lead)
    inv_lead = np.where(lead != 0, F.inv_table[lead], 0)
    key = np.zeros((q,) * m, dtype=np.int64)
    for c in coords:
        key = key * q + F.mul(c, inv_lead)
    return _frozen(key)


def _orbit_average(f: GridFn, keys: np.ndarray, nlabels: int, sizes: np.ndarray) -> GridFn:
    k = keys.ravel()
    sums = np.bincount(k, weights=f.values.ravel(), minlength=nlabels)
    return GridFn(f.field, (sums / sizes)[k].reshape(f.values.shape))


def proj_additive(f: GridFn) -> GridFn:
    """P_A f: average of f over the |F| diagonal translates."""
    F, m = f.field, f.m
    if m == 1:
        return GridFn.constant(F, 1, np.sum(f.values) / F.order)
    keys = additive_orbit_keys(F, m)
    n = F.order ** (m - 1)
    return _orbit_average(f, keys, n, np.full(n, float(F.order)))


def proj_multiplicative(f: GridFn) -> GridFn:
    """P_M f: average of f over the |F*| diagonal scalings."""
    F, m = f.field, f.m
    keys = multiplicative_orbit_keys(F, m)
    n = F.order**m
    sizes = np.full(n, float(F.order - 1))
    sizes[0] = 1.0
    return _orbit_average(f, keys, n, sizes)


def inner(f: GridFn, g: GridFn) -> float:
    _check_same_shape(f, g)
    return float(np.sum(f.values * g.values) / f.values.size)


def norm2sq(f: GridFn) -> float:
    return inner(f, f)


def balanced_indicator(S: SetLike) -> GridFn:
    """1_S - P_A 1_S."""
    g = GridFn.indicator(S)
    return g - proj_additive(g)


def product_set(*factors: FieldSubset) -> ProductSet:
    return ProductSet(tuple(factors))


def stack_masks(sets: Sequence[FieldSubset]) -> np.ndarray:
    return np.stack([s.mask for s in sets])
