"""The finitistic colouring trick and the conditional quadruple machinery.

Colour classes are sorted by size, a prefix of r' classes is selected by a
double-exponential size schedule, and the product C_1 x ... x C_r' is
acted on diagonally.  Intersection measures of product sets under the
diagonal action are products of per-coordinate measures, so nothing here
materialises F^r'; grids appear only in the test oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

from .averages import _require_admissible, _root, recurrence_counts
from .errors import GridTooLarge, SThresholdTooLarge, ZeroScale
from .field import Field, Poly
from .functions import (
    GRID_CAP,
    FieldSubset,
    GridFn,
    ProductSet,
    _gather,
    balanced_indicator,
    norm2sq,
)
from .patterns import WITNESS_CAP, quadruple_hits

SCHEDULES = {"2^j": 2, "4^j": 4}
# exponent gap between the nu(C) floor and the tail cap, per schedule
GAP_EXPONENT = {"2^j": 2, "4^j": 12}

Factors = Union[ProductSet, Sequence[FieldSubset]]


def _factors(C: Factors) -> tuple[FieldSubset, ...]:
    return C.factors if isinstance(C, ProductSet) else tuple(C)


class Colouring:
    """An r-colouring of F: ``assignment[x]`` is the colour of element x."""

    def __init__(self, field: Field, assignment, r: int | None = None):
        a = np.asarray(assignment, dtype=np.int64)
        if a.shape != (field.order,):
            raise ValueError(f"assignment must have length {field.order}")
        r = int(a.max()) + 1 if r is None else r
        if a.min() < 0 or a.max() >= r:
            raise ValueError(f"colours must lie in [0, {r})")
        a = a.copy()
        a.setflags(write=False)
        self.field = field
        self.assignment = a
        self.r = r
        sizes = np.bincount(a, minlength=r)
        # stable sort keeps ties in original colour order
        self.order = [int(j) for j in np.argsort(-sizes, kind="stable")]
        self.classes = [FieldSubset(field, a == j) for j in self.order]

    @property
    def sizes(self) -> list[int]:
        return [c.size for c in self.classes]

    def class_of(self, x: int) -> int:
        return int(self.assignment[int(x)])

    def __repr__(self):
        return f"Colouring({self.field}, r={self.r}, sizes={self.sizes})"


@dataclass
class ScheduleParams:
    schedule: str
    r: int
    r_prime: int
    sizes: list[int]
    nu_C: Fraction
    delta: Fraction | None = None

    @property
    def base(self) -> int:
        return SCHEDULES[self.schedule]

    def exponent(self, j: int) -> int:
        """Size exponent of the j-th class (1-based): 1, then base^j."""
        return 1 if j == 1 else self.base**j

    @property
    def floor_exponent(self) -> int:
        """S with nu(C) >= 1/r^S (2^j schedule) or the cube-root analogue (4^j)."""
        return sum(self.exponent(j) for j in range(1, self.r_prime + 1))

    @property
    def tail_exponent(self) -> int:
        return self.base ** (self.r_prime + 1) - 1

    @property
    def tail(self) -> int:
        return sum(self.sizes[self.r_prime:])

    def gap(self) -> Fraction:
        """(r^2 - 1)/r^(2^(r'+1)-1) or (r^12 - 1)/r^(4^(r'+1)-1)."""
        r = self.r
        return Fraction(r ** GAP_EXPONENT[self.schedule] - 1, r**self.tail_exponent)

    def gap_from_difference(self) -> Fraction:
        """The same gap computed as a difference of the two reciprocal powers."""
        r = self.r
        mult = 1 if self.schedule == "2^j" else 3
        return Fraction(1, r ** (mult * self.floor_exponent)) - Fraction(1, r**self.tail_exponent)


def select_r_prime(c: Colouring, schedule: str = "2^j") -> ScheduleParams:
    """Largest prefix length j with |C_i| * r^(e_i) >= |F| for every i <= j."""
    if schedule not in SCHEDULES:
        raise ValueError(f"unknown schedule {schedule!r}")
    n = c.field.order
    sizes = c.sizes
    probe = ScheduleParams(schedule, c.r, 1, sizes, Fraction(1))
    r_prime = 0
    for j in range(1, c.r + 1):
        if sizes[j - 1] * c.r ** probe.exponent(j) >= n:
            r_prime = j
        else:
            break
    r_prime = max(r_prime, 1)
    nu = Fraction(math.prod(sizes[:r_prime]), n**r_prime)
    return ScheduleParams(schedule, c.r, r_prime, sizes, nu)


# -- factorised product measures -------------------------------------------------------

def product_recurrence_counts(F: Field, p: Poly, C: Factors) -> list[int]:
    """|C ∩ M_u A_{-p(u)} C| for u = 1..|F|-1, as exact Python integers."""
    out = [1] * (F.order - 1)
    for c in _factors(C):
        per = recurrence_counts(F, p, c, c)
        out = [a * int(b) for a, b in zip(out, per)]
    return out


def product_recurrence_measure(F: Field, p: Poly, C: Factors, u: int) -> Fraction:
    """nu(C ∩ M_u A_{-p(u)} C) as a product of per-coordinate measures."""
    _require_admissible(F, p)
    if int(u) == 0:
        raise ZeroScale("u must be nonzero")
    fac = _factors(C)
    return Fraction(product_recurrence_counts(F, p, fac)[int(u) - 1], F.order ** len(fac))


def triple_counts(F: Field, c: FieldSubset) -> np.ndarray:
    """|c ∩ (c - u) ∩ c/u| for u = 1..|F|-1."""
    u = F.nonzero()[:, None]
    x = F.elements()[None, :]
    hit = c.mask[x] & c.mask[F.add(x, u)] & c.mask[F.mul(x, u)]
    return np.count_nonzero(hit, axis=1)


def product_triple_counts(F: Field, C: Factors) -> list[int]:
    out = [1] * (F.order - 1)
    for c in _factors(C):
        out = [a * int(b) for a, b in zip(out, triple_counts(F, c))]
    return out


def product_triple_measure(F: Field, C: Factors, u: int) -> Fraction:
    """nu(B ∩ A_{-u} B ∩ M_{1/u} B) = prod_j mu(B_j ∩ (B_j - u) ∩ B_j/u)."""
    if int(u) == 0:
        raise ZeroScale("u must be nonzero")
    fac = _factors(C)
    return Fraction(product_triple_counts(F, fac)[int(u) - 1], F.order ** len(fac))


def _return_set(counts: list[int], order: int, m: int, s: int) -> np.ndarray:
    """u with count/|F|^m > s/|F*|, compared in integers."""
    fstar = order - 1
    cut = s * order**m
    mask = np.zeros(order, dtype=bool)
    mask[1:] = [c * fstar > cut for c in counts]
    return mask


# -- monochromatic {u, p(u)+v, uv} -----------------------------------------------------

def triple_hits(c: Colouring, p: Poly) -> np.ndarray:
    """hits[u-1, v]: u, p(u)+v, uv share a colour (u in F*, v in F)."""
    F = c.field
    a = c.assignment
    u = F.nonzero()[:, None]
    v = F.elements()[None, :]
    cu = a[u]
    return (a[F.add(p.value_table[u], v)] == cu) & (a[F.mul(u, v)] == cu)


@dataclass
class TripleSearch:
    colour: int | None
    witnesses: list[tuple[int, int, int]]
    via: str
    direct_count: int = 0
    direct_count_strict: int = 0
    params: ScheduleParams | None = None
    proof: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return bool(self.witnesses)


def _cap(w):
    return w[:WITNESS_CAP]


def monochromatic_triple_search(c: Colouring, p: Poly, s: int = 0, via: str = "both") -> TripleSearch:
    """Find {u, p(u)+v, uv} inside one colour class.

    The direct path scans every (u, v).  The proof path selects r', builds
    the return set D in the product of the r' largest classes and reads off
    witnesses for u in D inside those classes; it also records whether the
    gap test |D| > |C_{r'+1}| + ... + |C_r| fired and whether every proof
    witness is among the direct ones.
    """
    F = c.field
    deg = _require_admissible(F, p)
    hits = triple_hits(c, p)
    direct_idx = np.argwhere(hits)
    direct = [(c.class_of(u + 1), int(u) + 1, int(v)) for u, v in direct_idx[:WITNESS_CAP]]
    strict = int(np.count_nonzero(hits[:, 1:]))
    out = TripleSearch(
        colour=direct[0][0] if direct else None,
        witnesses=direct,
        via="direct",
        direct_count=int(direct_idx.shape[0]),
        direct_count_strict=strict,
    )
    if via == "direct":
        return out

    params = select_r_prime(c, "2^j")
    fstar = F.order - 1
    if not s < params.nu_C * fstar:
        raise SThresholdTooLarge(f"s = {s} must be below nu(C)|F*| = {float(params.nu_C * fstar)}")
    params.delta = Fraction(s, fstar)
    top = c.classes[: params.r_prime]
    counts = product_recurrence_counts(F, p, top)
    D = _return_set(counts, F.order, params.r_prime, s)
    prefix = np.zeros(F.order, dtype=bool)
    for cls in top:
        prefix |= cls.mask
    good = np.flatnonzero(D & prefix)
    proof_w = []
    inconsistent = 0
    eq65_ok = True
    a = c.assignment
    for u in good:
        col = int(a[u])
        row = (a[F.add(int(p.value_table[u]), F.elements())] == col) & (a[F.mul(int(u), F.elements())] == col)
        vs = np.flatnonzero(row)
        # coordinate measure must exceed s/|F*|, i.e. more than s|F|/|F*| elements v
        eq65_ok &= vs.size * fstar > s * F.order
        for v in vs:
            proof_w.append((col, int(u), int(v)))
            if not hits[u - 1, v]:
                inconsistent += 1
    nu = float(params.nu_C)
    sq = math.sqrt(2 * (deg + 2))
    eq55 = (nu * nu * fstar - nu * sq * fstar ** (1 - 1 / 2**deg) - s) / nu
    tail_frac = 1 / params.r ** params.tail_exponent
    eq64_rhs = sq / _root(fstar, deg) + s / (fstar * nu) + tail_frac / fstar
    gap = float(params.gap())
    size_d = int(np.count_nonzero(D))
    proof = {
        "r_prime": params.r_prime,
        "schedule": params.schedule,
        "nu_C": params.nu_C,
        "delta": params.delta,
        "D_size": size_d,
        "tail": params.tail,
        "gap_fires": size_d > params.tail,
        "D_in_prefix": int(good.size),
        "eq55_bound": eq55,
        "eq55_holds": size_d >= eq55 - abs(eq55) * 1e-12,
        "eq64_lhs": gap,
        "eq64_rhs": eq64_rhs,
        "gate_met": gap >= eq64_rhs,
        "remark_bound": fstar * (gap - sq / _root(fstar, deg) - s / (fstar * nu) - tail_frac / fstar),
        "eq65_ok": bool(eq65_ok),
        "proof_witness_count": len(proof_w),
        "inconsistencies": inconsistent,
    }
    out.params = params
    out.proof = proof
    if via == "proof":
        out.witnesses = _cap(proof_w)
        out.colour = proof_w[0][0] if proof_w else None
        out.via = "proof"
    else:
        out.via = "both"
    return out


# -- quadruples {u, v, u+v, uv} -----------------------------------------------------------

@dataclass
class QuadrupleSearch:
    colour: int | None
    witnesses: list[tuple[int, int, int]]
    count: int
    per_colour: dict[int, int]
    conditional_report: dict = field(default_factory=dict)


def c_r_constant(r: int, r_prime: int, delta: Fraction, b: float, c: float, fstar: int) -> float:
    """(r^12-1)/r^(4^(r'+1)-1) - delta r^S - c/|F*|^b - 1/(|F*| r^(4^(r'+1)-1))."""
    tail_exp = 4 ** (r_prime + 1) - 1
    floor_exp = 1 + sum(4**j for j in range(2, r_prime + 1))
    head = Fraction(r**12 - 1, r**tail_exp) - delta * r**floor_exp
    return float(head) - c / float(fstar) ** b - float(Fraction(1, fstar * r**tail_exp))


def gs_quadruple_search(col: Colouring, s: int = 0, conj: tuple[float, float] | None = None) -> QuadrupleSearch:
    """Monochromatic {u, v, u+v, uv}; the conditional proof path runs when (b, c) is given."""
    F = col.field
    per_colour = {}
    witnesses = []
    hits_by_colour = {}
    for j in range(col.r):
        cls = FieldSubset(F, col.assignment == j)
        hits = quadruple_hits(F, cls)
        hits_by_colour[j] = hits
        per_colour[j] = int(np.count_nonzero(hits))
        if len(witnesses) < WITNESS_CAP:
            for u, v in np.argwhere(hits)[: WITNESS_CAP - len(witnesses)]:
                witnesses.append((j, int(u) + 1, int(v) + 1))
    out = QuadrupleSearch(
        colour=witnesses[0][0] if witnesses else None,
        witnesses=witnesses,
        count=sum(per_colour.values()),
        per_colour=per_colour,
    )
    if conj is None:
        return out

    b, c = conj
    params = select_r_prime(col, "4^j")
    fstar = F.order - 1
    params.delta = Fraction(s, fstar)
    top = col.classes[: params.r_prime]
    counts = product_triple_counts(F, top)
    D = _return_set(counts, F.order, params.r_prime, s)
    prefix = np.zeros(F.order, dtype=bool)
    for cls in top:
        prefix |= cls.mask
    kept = np.flatnonzero(D & prefix)
    proof_w = []
    inconsistent = 0
    for u in kept:
        j = col.class_of(u)
        cls = col.assignment == j
        vs = np.flatnonzero(cls & cls[F.mul(int(u), F.elements())] & cls[F.add(F.elements(), int(u))])
        for v in vs[vs != 0]:
            proof_w.append((j, int(u), int(v)))
            if not hits_by_colour[j][u - 1, v - 1]:
                inconsistent += 1
    nu = float(params.nu_C)
    cr = c_r_constant(params.r, params.r_prime, params.delta, b, c, fstar)
    eq59 = nu**3 * fstar - c * fstar ** (1 - b) - fstar * float(params.delta) / nu
    out.conditional_report = {
        "b": b,
        "c": c,
        "r_prime": params.r_prime,
        "nu_C": params.nu_C,
        "delta": params.delta,
        "D_size": int(np.count_nonzero(D)),
        "tail": params.tail,
        "D_minus_tail": int(kept.size),
        "c_r": cr,
        "c_r_times_fstar": cr * fstar,
        "c_r_bound_held": kept.size >= cr * fstar,
        "eq59_bound": eq59,
        "eq59_held": int(np.count_nonzero(D)) >= eq59,
        "proof_witness_count": len(proof_w),
        "proof_witnesses": _cap(proof_w),
        "inconsistencies": inconsistent,
    }
    return out


# -- the lower term of the conditional argument ------------------------------------------------

@dataclass
class LowerTerm:
    value: Fraction
    floor: Fraction

    @property
    def holds(self) -> bool:
        return self.value >= self.floor


def lower_term_counts(F: Field, b: FieldSubset) -> np.ndarray:
    """counts[t, v-1] = |b ∩ v(b + t) ∩ v b| for t in F, v in F*."""
    e = F.elements()
    xv = F.div(e[None, :], F.nonzero()[:, None])             # x / v
    in_vb = b.mask[xv]                                        # (|F*|, |F|)
    shifted = F.sub(xv[None, :, :], e[:, None, None])         # x/v - t
    hit = b.mask[None, None, :] & in_vb[None, :, :] & b.mask[shifted]
    return np.count_nonzero(hit, axis=2)


def gs_lower_term(B: Factors) -> LowerTerm:
    """<g, P_M(P_A g * g)> for g = 1_B, factorised, against the floor nu(B)^4."""
    fac = _factors(B)
    F = fac[0].field
    total = np.ones((F.order, F.order - 1), dtype=object)
    for b in fac:
        total = total * lower_term_counts(F, b).astype(object)
    m = len(fac)
    value = Fraction(int(total.sum()), F.order * (F.order - 1) * F.order**m)
    nu = Fraction(math.prod(b.size for b in fac), F.order**m)
    return LowerTerm(value, nu**4)


# -- conjecture harness --------------------------------------------------------------------

def shkredov_grid_norm(B: ProductSet) -> tuple[float, float, float]:
    """(||(1/|F*|) sum_u M_u A_{-u} f * M_u g||^2, ||f||^2, ||g||^2), f balanced, g = 1_B."""
    F = B.field
    f = balanced_indicator(B)
    g = GridFn.indicator(B)
    e = F.elements()
    acc = np.zeros_like(f.values)
    for u in range(1, F.order):
        xu = F.div(e, u)
        acc += _gather(f, F.add(xu, u)) * _gather(g, xu)
    h = acc / (F.order - 1)
    return float(np.sum(h * h) / h.size), norm2sq(f), norm2sq(g)


@dataclass
class ScanResult:
    rows: list[dict]
    slope: float | None
    intercept: float | None
    residuals: list[float]

    @property
    def b_hat(self) -> float | None:
        return None if self.slope is None else -self.slope / 2


def conjecture_norm_scan(fields: Sequence[Field], m: int,
                         set_rule: Callable[[Field], ProductSet]) -> ScanResult:
    """Tabulate the double-average norm ratio across fields and fit log-log slope."""
    rows = []
    for F in sorted(fields, key=lambda F: F.order):
        if m == 3 and F.order > 128:
            raise GridTooLarge("m = 3 is limited to |F| <= 128")
        if F.order**m > GRID_CAP:
            raise GridTooLarge(f"{F}^{m} exceeds the grid cap")
        B = set_rule(F)
        normsq, fsq, gsq = shkredov_grid_norm(B)
        ratio = normsq / (fsq * gsq) if fsq > 0 and gsq > 0 else None
        rows.append({"field": F.literal(), "order": F.order, "m": m, "normsq": normsq,
                     "f_normsq": fsq, "g_normsq": gsq, "ratio": ratio})
    pts = [(math.log(r["order"]), math.log(r["ratio"])) for r in rows if r["ratio"]]
    if len(pts) < 2:
        return ScanResult(rows, None, None, [])
    x, y = np.array(pts).T
    slope, intercept = np.polyfit(x, y, 1)
    resid = (y - (slope * x + intercept)).tolist()
    return ScanResult(rows, float(slope), float(intercept), resid)
