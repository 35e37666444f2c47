"""Exact counts of sum-product patterns and exact threshold comparisons.

Thresholds with fractional exponents of |F| are never compared in floating
point: both sides are raised to the smallest power that clears the
denominators and compared as Python integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .averages import _require_admissible
from .errors import SThresholdTooLarge
from .field import Field, Poly
from .functions import FieldSubset

WITNESS_CAP = 64


@dataclass
class Threshold:
    met: bool
    lhs: int
    rhs: int
    vacuous: bool = False
    variant: str = ""


@dataclass
class PatternCount:
    kind: str
    count: int
    count_relaxed: int | None = None
    witnesses: list[tuple[int, ...]] = field(default_factory=list)
    threshold: Threshold | None = None

    @property
    def threshold_met(self) -> bool:
        return bool(self.threshold and self.threshold.met)

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "count_strict": self.count,
            "count_relaxed": self.count_relaxed,
            "witnesses": [list(w) for w in self.witnesses],
        }
        if self.threshold is not None:
            t = self.threshold
            d["threshold"] = {"variant": t.variant, "met": t.met, "lhs": str(t.lhs), "rhs": str(t.rhs)}
            d["vacuous"] = t.vacuous
        return d


def _witnesses(hits: np.ndarray, *coords: np.ndarray) -> list[tuple[int, ...]]:
    rows = np.argwhere(hits)[:WITNESS_CAP]
    return [tuple(int(c[tuple(r)]) for c in coords) for r in rows]


def pairs_threshold(F: Field, deg: int, size_e: int, size_g: int) -> Threshold:
    """|E||G| > 2(deg+2) |F|^(2 - 1/2^(deg-1)), compared after raising to 2^(deg-1)."""
    e = 2 ** (deg - 1)
    lhs = (size_e * size_g) ** e
    rhs = (2 * (deg + 2)) ** e * F.order ** (2 * e - 1)
    vac = not ((F.order * F.order) ** e > rhs)
    return Threshold(lhs > rhs, lhs, rhs, vac, f"deg{deg}")


def count_product_sum_pairs(F: Field, p: Poly, E: FieldSubset, G: FieldSubset) -> PatternCount:
    """Pairs (u, v), u in F*, with uv in E and p(u) + v in G.

    ``count`` restricts to v in F*; ``count_relaxed`` allows v = 0.
    """
    deg = _require_admissible(F, p)
    u = F.nonzero()[:, None]
    v = F.elements()[None, :]
    hits = E.mask[F.mul(u, v)] & G.mask[F.add(p.value_table[u], v)]
    strict = hits[:, 1:]
    uu = np.broadcast_to(u, hits.shape)
    vv = np.broadcast_to(v, hits.shape)
    return PatternCount(
        kind="pairs",
        count=int(np.count_nonzero(strict)),
        count_relaxed=int(np.count_nonzero(hits)),
        witnesses=_witnesses(strict, uu[:, 1:], vv[:, 1:]),
        threshold=pairs_threshold(F, deg, E.size, G.size),
    )


def shkredov_threshold(F: Field, sizes, variant: str = "strict7") -> Threshold:
    """(s1 s2 s3)^2 against 49|F|^5 (strict >) or 64|F|^5 (>=)."""
    s1, s2, s3 = (int(s) for s in sizes)
    lhs = (s1 * s2 * s3) ** 2
    n = F.order
    if variant == "strict7":
        rhs = 49 * n**5
        return Threshold(lhs > rhs, lhs, rhs, not ((n - 1) ** 6 > rhs), variant)
    if variant == "weak8":
        rhs = 64 * n**5
        return Threshold(lhs >= rhs, lhs, rhs, not (n**6 >= rhs), variant)
    raise ValueError(f"unknown variant {variant!r}")


def _shkredov_hits(F: Field, B1: FieldSubset, B2: FieldSubset, B3: FieldSubset, v_range: np.ndarray):
    u = F.nonzero()[:, None]
    v = v_range[None, :]
    hits = B1.mask[v] & B2.mask[F.add(u, v)] & B3.mask[F.mul(u, v)]
    return hits, np.broadcast_to(u, hits.shape), np.broadcast_to(v, hits.shape)


def count_shkredov_triples(F: Field, B1: FieldSubset, B2: FieldSubset, B3: FieldSubset,
                           variant: str | None = None) -> PatternCount:
    """(u, v) in F* x F* with v in B1, u + v in B2, uv in B3."""
    hits, uu, vv = _shkredov_hits(F, B1, B2, B3, F.nonzero())
    th = None
    if variant is not None:
        th = shkredov_threshold(F, (B1.size, B2.size, B3.size), variant)
    return PatternCount("triples", int(np.count_nonzero(hits)), None, _witnesses(hits, uu, vv), th)


def triple_counts_per_u(F: Field, B1: FieldSubset, B2: FieldSubset, B3: FieldSubset) -> np.ndarray:
    """#{v in F: v in B1, u+v in B2, uv in B3} for u = 1..|F|-1."""
    hits, _, _ = _shkredov_hits(F, B1, B2, B3, F.elements())
    return np.count_nonzero(hits, axis=1)


def return_set_bound(order: int, sizes, s: int) -> float:
    """(P|F*|/|F|^2 - sqrt(7 P |F*|^2 / |F|^(3/2)) - s|F*|) / min size, P the size product."""
    s1, s2, s3 = sizes
    prod = s1 * s2 * s3
    ell = min(sizes)
    fstar = order - 1
    if ell == 0:
        return -math.inf
    return (prod * fstar / order**2 - math.sqrt(7 * prod * fstar**2 / order**1.5) - s * fstar) / ell


@dataclass
class ReturnSet:
    D: FieldSubset
    bound: float
    s: int

    @property
    def holds(self) -> bool:
        from .report import lower_holds

        return lower_holds(self.D.size, self.bound)

    @property
    def witness_count(self) -> int:
        """s * |D|: triples guaranteed by the return set."""
        return self.s * self.D.size


def shkredov_return_set(F: Field, B1: FieldSubset, B2: FieldSubset, B3: FieldSubset, s: int) -> ReturnSet:
    """D = {u in F*: more than s elements v with v in B1, u+v in B2, uv in B3}.

    An empty B_i gives D = {} and an unconstrained bound.
    """
    sizes = (B1.size, B2.size, B3.size)
    ell = min(sizes)
    if ell == 0:
        return ReturnSet(FieldSubset.empty(F), -math.inf, s)
    if not s < ell:
        raise SThresholdTooLarge(f"s = {s} must be below min |B_i| = {ell}")
    per_u = triple_counts_per_u(F, B1, B2, B3)
    mask = np.zeros(F.order, dtype=bool)
    mask[1:] = per_u > s
    return ReturnSet(FieldSubset(F, mask), return_set_bound(F.order, sizes, s), s)


def quadruple_hits(F: Field, A: FieldSubset) -> np.ndarray:
    """Boolean (|F|-1) x (|F|-1) table: u, v, u+v, uv all in A, for u, v in F*."""
    u = F.nonzero()[:, None]
    v = F.nonzero()[None, :]
    return A.mask[u] & A.mask[v] & A.mask[F.add(u, v)] & A.mask[F.mul(u, v)]


def count_quadruples(F: Field, A: FieldSubset) -> PatternCount:
    """(u, v) in F* x F* with {u, v, u+v, uv} inside A."""
    hits = quadruple_hits(F, A)
    u = np.broadcast_to(F.nonzero()[:, None], hits.shape)
    v = np.broadcast_to(F.nonzero()[None, :], hits.shape)
    return PatternCount("quadruples", int(np.count_nonzero(hits)), None, _witnesses(hits, u, v))
