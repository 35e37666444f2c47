"""Finite averaging identities and the deviation bounds built on them.

Notation used in names: ``deg`` is the polynomial degree, ``fstar`` is
|F*| = |F| - 1.  For u in F* the recurrence set transform is
M_u A_{-p(u)} C = u * (C - p(u)).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    DeltaTooLarge,
    ErgodicBoundAtProductSpace,
    FieldTooLarge,
    FieldTooSmall,
    IncompleteFamily,
    InadmissiblePolynomial,
    ShapeMismatch,
    ZeroInSet,
)
from .field import Field, Poly, is_admissible
from .functions import (
    FieldSubset,
    GridFn,
    SetLike,
    _as_product,
    balanced_indicator,
    inner,
    koopman_add,
    koopman_affine,
    measure,
    norm2sq,
    proj_additive,
    proj_multiplicative,
)
from .report import lower_holds, upper_holds

DIAG_CAP = 512


def _require_admissible(F: Field, p: Poly) -> int:
    F.check_same(p.field)
    if not is_admissible(p, F):
        raise InadmissiblePolynomial(f"{p} is not admissible over {F} (char {F.char})")
    return p.degree


def _root(x: float, e: int) -> float:
    """x ** (1 / 2**e) for e >= 0."""
    return float(x) ** (1.0 / 2**e)


# -- van der Corput -------------------------------------------------------------

@dataclass
class VdcResult:
    lhs: float
    rhs: float
    residual: float

    @property
    def relative(self) -> float:
        return self.residual / max(abs(self.lhs), abs(self.rhs), 1.0)


def _family_matrix(family) -> tuple[np.ndarray, int]:
    if isinstance(family, np.ndarray):
        mat = np.asarray(family, dtype=np.float64)
        return mat.reshape(mat.shape[0], -1), mat[0].size
    vals = [f.values for f in family]
    for f in family[1:]:
        if f.field != family[0].field or f.m != family[0].m:
            raise ShapeMismatch("family members live on different spaces")
    mat = np.stack([v.ravel() for v in vals])
    return mat, mat.shape[1]


def vdc_identity_residual(F: Field, group: str, family) -> VdcResult:
    """Check ||sum_g f(g)||^2 == sum_g sum_h <f(g.h), f(g)> on a finite group.

    ``group`` is ``"additive"`` (F, indexed 0..|F|-1) or ``"multiplicative"``
    (F*, member i is the function for element i + 1).  Both sides are
    computed separately: the left from the summed vector, the right from
    the Gram matrix.
    """
    if group == "additive":
        elems = F.elements()
        op = F.add
        offset = 0
    elif group == "multiplicative":
        elems = F.nonzero()
        op = F.mul
        offset = 1
    else:
        raise ValueError(f"unknown group {group!r}")
    mat, n = _family_matrix(family)
    if mat.shape[0] != elems.size:
        raise IncompleteFamily(f"need {elems.size} functions, got {mat.shape[0]}")
    total = mat.sum(axis=0)
    lhs = float(np.sum(total * total) / n)
    gram = (mat @ mat.T) / n
    gh = op(elems[:, None], elems[None, :]) - offset
    rows = np.broadcast_to((elems - offset)[:, None], gh.shape)
    rhs = float(np.sum(gram[gh, rows]))
    return VdcResult(lhs, rhs, abs(lhs - rhs))


# -- polynomial averages ----------------------------------------------------------

def _value_counts(p: Poly) -> np.ndarray:
    return np.bincount(p.value_table, minlength=p.field.order)


@functools.lru_cache(maxsize=16)
def _sub_table(F: Field) -> np.ndarray:
    e = F.elements()
    t = F.sub(e[:, None], e[None, :])
    t.setflags(write=False)
    return t


def polynomial_average(F: Field, p: Poly, f: GridFn) -> GridFn:
    """(1/|F|) sum_{u in F} A_{p(u)} f."""
    counts = _value_counts(p)
    if f.m == 1:
        kernel = counts[_sub_table(F)] / F.order
        return GridFn(F, kernel @ f.values)
    out = np.zeros_like(f.values)
    for w in np.flatnonzero(counts):
        out += counts[w] * koopman_add(f, int(w)).values
    return GridFn(F, out / F.order)


def pet_lhs_batch(F: Field, p: Poly, fvals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squared deviations and ||f - P_A f||^2 for a batch of functions on F (m = 1)."""
    counts = _value_counts(p)
    kernel = counts[_sub_table(F)] / F.order
    means = fvals.mean(axis=1, keepdims=True)
    dev = fvals @ kernel.T - means
    tilde = fvals - means
    return np.sum(dev * dev, axis=1) / F.order, np.sum(tilde * tilde, axis=1) / F.order


def pet_bounds(order: int, deg: int, tilde_sq: float) -> tuple[float, float]:
    """(statement bound, proof bound) for the polynomial mean deviation.

    statement: (deg-1)/|F|^(1/2^(deg-2)) * ||f~||^2
    proof:     deg/|F|^(1/2^(deg-1)) * ||f~||^2
    At deg = 1 the statement bound is 0 whatever the root.
    """
    if deg == 1:
        statement = 0.0
    else:
        statement = (deg - 1) / _root(order, deg - 2) * tilde_sq
    proof = deg / _root(order, deg - 1) * tilde_sq
    return statement, proof


@dataclass
class PetResult:
    lhs: float
    tilde_sq: float
    statement_bound: float
    proof_bound: float
    deg: int
    f_sq: float = 1.0

    # roundoff in lhs scales with ||f||^2, which stays positive when f~ = 0
    @property
    def holds_proof(self) -> bool:
        return upper_holds(self.lhs, self.proof_bound, self.f_sq)

    @property
    def holds_statement(self) -> bool:
        return upper_holds(self.lhs, self.statement_bound, self.f_sq)


def pet_deviation(F: Field, p: Poly, f: GridFn) -> PetResult:
    """||(1/|F|) sum_u A_{p(u)} f - P_A f||^2 with both published bounds."""
    deg = _require_admissible(F, p)
    pa = proj_additive(f)
    lhs = norm2sq(polynomial_average(F, p, f) - pa)
    tilde_sq = norm2sq(f - pa)
    st, pr = pet_bounds(F.order, deg, tilde_sq)
    return PetResult(lhs, tilde_sq, st, pr, deg, norm2sq(f))


@functools.lru_cache(maxsize=64)
def affine_index(F: Field, p: Poly) -> np.ndarray:
    """Table T[u-1, x] = x/u + p(u): pulling back through M_u A_{-p(u)}."""
    u = F.nonzero()
    xs = F.elements()
    q = F.div(xs[None, :], u[:, None])
    t = F.add(q, p.value_table[u][:, None])
    t.setflags(write=False)
    return t


def mult_average(F: Field, p: Poly, f: GridFn) -> GridFn:
    """(1/|F*|) sum_{u in F*} M_u A_{-p(u)} f."""
    if f.m == 1:
        return GridFn(F, f.values[affine_index(F, p)].mean(axis=0))
    out = np.zeros_like(f.values)
    for u in range(1, F.order):
        out += koopman_affine(f, u, F.neg(int(p.value_table[u]))).values
    return GridFn(F, out / (F.order - 1))


@dataclass
class MultAvgResult:
    normsq: float
    bound: float
    proof_bound: float
    deg: int

    @property
    def holds(self) -> bool:
        return upper_holds(self.normsq, self.bound, self.bound or 1.0)


def mult_avg_norm(F: Field, p: Poly, C: SetLike) -> MultAvgResult:
    """||(1/|F*|) sum_{u in F*} M_u A_{-p(u)} f||^2 for f = 1_C - P_A 1_C.

    ``bound`` is 2(deg+2) mu(C) / |F*|^(1/2^(deg-1)); ``proof_bound`` is the
    sharper (deg+2)||f||^2 / |F*|^(1/2^(deg-1)) that precedes it.
    """
    deg = _require_admissible(F, p)
    f = balanced_indicator(C)
    normsq = norm2sq(mult_average(F, p, f))
    root = _root(F.order - 1, deg - 1)
    bound = 2 * (deg + 2) * float(measure(C)) / root
    proof_bound = (deg + 2) * norm2sq(f) / root
    return MultAvgResult(normsq, bound, proof_bound, deg)


# -- recurrence -------------------------------------------------------------------

def recurrence_counts(F: Field, p: Poly, B: SetLike, C: SetLike) -> np.ndarray:
    """|B ∩ u(C - p(u))| for u = 1..|F|-1, as exact integers (factorised over products)."""
    PB, PC = _as_product(B), _as_product(C)
    if PB.m != PC.m:
        raise ShapeMismatch("B and C live in different dimensions")
    idx = affine_index(F, p)
    out = np.ones(F.order - 1, dtype=np.int64)
    for b, c in zip(PB.factors, PC.factors):
        out *= np.count_nonzero(b.mask[None, :] & c.mask[idx], axis=1)
    return out


def recurrence_counts_batch(F: Field, p: Poly, bmasks: np.ndarray, cmasks: np.ndarray) -> np.ndarray:
    """Row-wise version of :func:`recurrence_counts` for m = 1: shape (n, |F|-1)."""
    idx = affine_index(F, p)
    return np.count_nonzero(bmasks[:, None, :] & cmasks[:, idx], axis=2)


def hypothesis_threshold(order: int, deg: int) -> float:
    """2(deg+2) / |F*|^(1/2^(deg-1)), the density-product threshold."""
    return 2 * (deg + 2) / _root(order - 1, deg - 1)


def bound_same_set(mu_b: float, fstar: int, deg: int) -> float:
    """(mu(B))^2 - sqrt(2(deg+2)) mu(B) / |F*|^(1/2^deg)."""
    return mu_b * mu_b - math.sqrt(2 * (deg + 2)) * mu_b / _root(fstar, deg)


def bound_two_sets(mu_b: float, mu_c: float, fstar: int, deg: int) -> float:
    """mu(B)mu(C) - sqrt(2(deg+2) mu(B) mu(C)) / |F*|^(1/2^deg)."""
    prod = mu_b * mu_c
    return prod - np.sqrt(2 * (deg + 2) * prod) / _root(fstar, deg)


def projection_pairing(B: SetLike, C: SetLike) -> float:
    """<1_B, P_M P_A 1_C> on the materialised grid."""
    g = GridFn.indicator(C)
    return inner(GridFn.indicator(B), proj_multiplicative(proj_additive(g)))


@dataclass
class RecurrenceResult:
    avg: Fraction
    bound: float
    bound_id: str
    hypothesis_met: bool
    vacuous: bool
    counts: np.ndarray

    @property
    def avg_float(self) -> float:
        return float(self.avg)

    @property
    def holds(self) -> bool:
        return lower_holds(self.avg, self.bound)


def recurrence_average(F: Field, p: Poly, B: SetLike, C: SetLike | None = None,
                       same_set: bool | None = None, bound: str = "auto") -> RecurrenceResult:
    """(1/|F*|) sum_{u in F*} mu(B ∩ M_u A_{-p(u)} C) with its lower bound.

    ``bound`` picks the inequality: ``"eq24"`` (B = C, any dimension),
    ``"eq28"`` (two sets, transitive additive action so m = 1 only) or
    ``"eq22"`` (two sets, any m, with <1_B, P_M P_A 1_C> on the grid).
    ``"auto"`` picks eq24 for a single set, eq28 at m = 1 and eq22 above.
    """
    deg = _require_admissible(F, p)
    if C is None:
        C = B
        same_set = True if same_set is None else same_set
    if same_set is None:
        same_set = _as_product(B) == _as_product(C)
    if same_set and _as_product(B) != _as_product(C):
        raise ValueError("same_set requested but B != C")
    m = _as_product(B).m
    if bound == "auto":
        bound = "eq24" if same_set else ("eq28" if m == 1 else "eq22")
    if bound == "eq28" and m > 1:
        raise ErgodicBoundAtProductSpace("the two-set bound needs m = 1")
    counts = recurrence_counts(F, p, B, C)
    fstar = F.order - 1
    avg = Fraction(int(counts.sum()), fstar * F.order**m)
    mu_b, mu_c = float(measure(B)), float(measure(C))
    thresh = hypothesis_threshold(F.order, deg)
    if bound == "eq24":
        value = bound_same_set(mu_b, fstar, deg)
        met = mu_b * mu_b > thresh
    elif bound == "eq28":
        value = bound_two_sets(mu_b, mu_c, fstar, deg)
        met = mu_b * mu_c > thresh
    elif bound == "eq22":
        pairing = projection_pairing(B, C)
        value = pairing - math.sqrt(2 * (deg + 2) * mu_b * mu_c) / _root(fstar, deg)
        met = value > 0
    else:
        raise ValueError(f"unknown bound {bound!r}")
    return RecurrenceResult(avg, value, bound, met, vacuous=not (1.0 > thresh), counts=counts)


@dataclass
class ReturnTimeResult:
    D: FieldSubset
    lower_bound: float
    bound_id: str
    vacuous: bool

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.D.size, self.D.field.order - 1)

    @property
    def holds(self) -> bool:
        return lower_holds(self.fraction, self.lower_bound)


def return_time_bound(mu_b: float, mu_c: float | None, fstar: int, deg: int, delta: float) -> float:
    if mu_c is None:
        if mu_b == 0:
            return -math.inf
        return (bound_same_set(mu_b, fstar, deg) - delta) / mu_b
    lo = min(mu_b, mu_c)
    if lo == 0:
        return -math.inf
    return (bound_two_sets(mu_b, mu_c, fstar, deg) - delta) / lo


def return_time_set(F: Field, p: Poly, B: SetLike, C: SetLike | None = None,
                    delta: Fraction | float = 0) -> ReturnTimeResult:
    """D = {u in F*: mu(B ∩ M_u A_{-p(u)} C) > delta} and its density lower bound.

    With C omitted the single-set bound applies in any dimension; a
    distinct C needs m = 1.
    """
    deg = _require_admissible(F, p)
    delta = Fraction(delta)
    same = C is None or _as_product(C) == _as_product(B)
    m = _as_product(B).m
    mu_b = measure(B)
    if same:
        C = B
        if delta >= mu_b and mu_b > 0:
            raise DeltaTooLarge(f"delta = {delta} must be below mu(B) = {mu_b}")
    else:
        if m > 1:
            raise ErgodicBoundAtProductSpace("the two-set return-time bound needs m = 1")
        if delta >= min(mu_b, measure(C)) and min(mu_b, measure(C)) > 0:
            raise DeltaTooLarge(f"delta = {delta} must be below min(mu(B), mu(C))")
    counts = recurrence_counts(F, p, B, C)
    # count / |F|^m > delta  <=>  count > floor(delta |F|^m) for integer counts
    cut = math.floor(delta * F.order**m)
    hit = counts > cut
    mask = np.zeros(F.order, dtype=bool)
    mask[1:] = hit
    fstar = F.order - 1
    mu_c = None if same else float(measure(C))
    lb = return_time_bound(float(mu_b), mu_c, fstar, deg, float(delta))
    vacuous = not (1.0 > hypothesis_threshold(F.order, deg))
    return ReturnTimeResult(FieldSubset(F, mask), lb, "eq26" if same else "eq27", vacuous)


# -- Shkredov-type double averages ---------------------------------------------------

@dataclass
class ShkredovNormResult:
    normsq: float
    stated_bound: float
    proof_bound: float
    inner_diag: float | None
    diag_bound: float
    f_normsq: float

    @property
    def holds_proof(self) -> bool:
        return upper_holds(self.normsq, self.proof_bound, self.proof_bound or 1.0)

    @property
    def holds_stated(self) -> bool:
        return upper_holds(self.normsq, self.stated_bound, self.proof_bound or 1.0)

    @property
    def holds_diag(self) -> bool:
        if self.inner_diag is None:
            return True
        return upper_holds(self.inner_diag, self.diag_bound, self.diag_bound or 1.0)


@functools.lru_cache(maxsize=16)
def _shkredov_index(F: Field) -> tuple[np.ndarray, np.ndarray]:
    """(x/u + u, x/u) for u in F*, x in F."""
    u = F.nonzero()
    xs = F.elements()
    xu = F.div(xs[None, :], u[:, None])
    shifted = F.add(xu, u[:, None])
    xu.setflags(write=False)
    shifted.setflags(write=False)
    return shifted, xu


def shkredov_average(F: Field, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """(1/|F*|) sum_{u in F*} (M_u A_{-u} f) * (M_u g) on F."""
    shifted, xu = _shkredov_index(F)
    return (f[shifted] * g[xu]).mean(axis=0)


def diagonal_average(F: Field, f: np.ndarray) -> float:
    """(1/|F*|) sum_{v in F*} ||(1/|F*|) sum_{u in F} M_v A_{-uv} f * A_{-u} f||^2.

    With y = x + u the inner sum is R_v(x (1/v - v)) where
    R_v(t) = sum_z f(z + t) f(z / v), so every R_v comes out of a single
    |F| x |F| x |F*| matrix product.
    """
    q = F.order
    fstar = q - 1
    e = F.elements()
    v = F.nonzero()
    shift = f[F.add(e[:, None], e[None, :])]              # shift[t, z] = f(z + t)
    scaled = f[F.div(e[:, None], v[None, :])]              # scaled[z, v] = f(z / v)
    R = shift @ scaled                                     # R[t, v]
    c = F.sub(F.inv(v), v)
    sq = np.where(c == 0, R[0, :] ** 2, np.sum(R * R, axis=0) / q)
    return float(np.sum(sq) / fstar**3)


def shkredov_norm(F: Field, B: FieldSubset, C: FieldSubset, with_diag: bool = True) -> ShkredovNormResult:
    """Norm of the Shkredov double average for f = 1_B - mu(B), g = 1_C.

    ``stated_bound`` = 7 mu(B) mu(C) / sqrt|F|, ``proof_bound`` uses 8.
    ``inner_diag`` is the diagonal average bounded by 6 ||f||^4 / |F|.
    """
    if B.mask[0] or C.mask[0]:
        raise ZeroInSet("B and C must avoid 0")
    if F.order < 8:
        raise FieldTooSmall("the constant absorption steps need |F| >= 8")
    F.check_same(B.field)
    F.check_same(C.field)
    mu_b, mu_c = float(measure(B)), float(measure(C))
    f = B.mask.astype(np.float64) - mu_b
    g = C.mask.astype(np.float64)
    h = shkredov_average(F, f, g)
    normsq = float(np.sum(h * h) / F.order)
    f_sq = float(np.sum(f * f) / F.order)
    diag = None
    if with_diag:
        if F.order > DIAG_CAP:
            raise FieldTooLarge(f"diagonal average capped at |F| <= {DIAG_CAP}")
        diag = diagonal_average(F, f)
    root = math.sqrt(F.order)
    return ShkredovNormResult(
        normsq=normsq,
        stated_bound=7 * mu_b * mu_c / root,
        proof_bound=8 * mu_b * mu_c / root,
        inner_diag=diag,
        diag_bound=6 * f_sq * f_sq / F.order,
        f_normsq=f_sq,
    )
