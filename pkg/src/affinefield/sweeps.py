"""Seeded verification suites.

Each suite returns a list of :class:`VerdictReport`.  The polynomial sweep
runs every monic admissible polynomial up to a degree against a shared
batch of random indicators and is vectorised per polynomial; everything
else goes through the public module operations one instance at a time.

``scale`` multiplies every asserted upper bound.  It exists so a test can
shrink a bound below its computed left side and watch the run fail.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .averages import (
    bound_same_set,
    bound_two_sets,
    mult_avg_norm,
    pet_bounds,
    recurrence_average,
    return_time_set,
    shkredov_norm,
    vdc_identity_residual,
)
from .colouring import gs_lower_term
from .field import Field, Poly
from .functions import FieldSubset, measure, product_set
from .literals import rng_for
from .patterns import pairs_threshold, shkredov_threshold
from .report import REAL_SLACK, VerdictReport, identity_report, lower_report, upper_report

SUITES = ("vdc", "pet", "mult-avg", "recurrence", "return-set", "shkredov-norm", "gs-term")


def random_mask(rng: np.random.Generator, n: int, density: float | None = None) -> np.ndarray:
    """Bernoulli mask; the density itself is drawn from [0.1, 0.9] when not given."""
    d = rng.uniform(0.1, 0.9) if density is None else density
    return rng.random(n) < d


def random_subset(F: Field, rng, density=None, avoid_zero=False, nonempty=False) -> FieldSubset:
    while True:
        mask = random_mask(rng, F.order, density)
        if avoid_zero:
            mask[0] = False
        if mask.any() or not nonempty:
            return FieldSubset(F, mask)


def subset_of_size(F: Field, rng, size: int, avoid_zero=False) -> FieldSubset:
    pool = F.nonzero() if avoid_zero else F.elements()
    return FieldSubset.from_indices(F, rng.choice(pool, size=size, replace=False))


# -- polynomial enumeration ---------------------------------------------------------------

def monic_value_tables(F: Field, deg: int) -> tuple[np.ndarray, np.ndarray]:
    """All monic polynomials of degree ``deg``: (coefficients (N, deg+1), values (N, |F|))."""
    q = F.order
    x = F.elements()
    powers = [np.zeros(q, dtype=np.int64) + 1]
    for _ in range(deg):
        powers.append(F.mul(powers[-1], x))
    lower = np.array(list(itertools.product(range(q), repeat=deg)), dtype=np.int64)
    lower = lower[:, ::-1] if deg else lower.reshape(1, 0)   # c0 varies fastest
    vals = np.broadcast_to(powers[deg], (lower.shape[0], q)).copy()
    for i in range(deg):
        vals = F.add(vals, F.mul(lower[:, i:i + 1], powers[i][None, :]))
    coeffs = np.hstack([lower, np.ones((lower.shape[0], 1), dtype=np.int64)])
    return coeffs, vals


def admissible_degrees(F: Field, deg_max: int) -> range:
    return range(1, min(deg_max, F.char - 1) + 1)


def _poly_literal(coeffs) -> str:
    return ",".join(str(int(c)) for c in coeffs)


# -- polynomial sweep ---------------------------------------------------------------------

def _worst(lhs, rhs, sense):
    """Index of the instance with the smallest signed margin."""
    margin = rhs - lhs if sense == "<=" else lhs - rhs
    margin = np.where(np.isfinite(margin), margin, np.inf)
    return int(np.argmin(margin))


def _lower_ok(value, bound):
    with np.errstate(invalid="ignore"):
        return np.isneginf(bound) | (value >= bound + np.abs(bound) * REAL_SLACK)


def _upper_ok(value, bound, scale):
    return value <= bound + REAL_SLACK * np.abs(scale)


def pet_sweep(F: Field, deg_max: int = 3, trials: int = 50, seed: int = 0,
              recurrence: bool = True, scale: float = 1.0) -> list[VerdictReport]:
    """Every monic admissible p with deg <= deg_max against ``trials`` random indicators.

    Per polynomial one record per statement, holding the instance with the
    smallest margin and, in ``inputs``, how many instances were checked and
    how many failed.  With ``recurrence`` the same indicators (B = C, and B
    against a second random batch C) feed the recurrence and return-time
    lower bounds.
    """
    rng = rng_for(seed, F.order, 1)
    q, fstar = F.order, F.order - 1
    B = np.stack([random_mask(rng, q) for _ in range(trials)])
    C = np.stack([random_mask(rng, q) for _ in range(trials)])
    fvals = B.astype(np.float64)
    means = fvals.mean(axis=1, keepdims=True)
    tilde = fvals - means
    tilde_sq = np.sum(tilde * tilde, axis=1) / q
    sub = F.sub(F.elements()[:, None], F.elements()[None, :])
    xdiv = F.div(F.elements()[None, :], F.nonzero()[:, None])
    size_b, size_c = B.sum(axis=1), C.sum(axis=1)
    mu_b, mu_c = size_b / q, size_c / q
    field = F.literal()
    out = []

    def emit(sid, lhs, rhs, sense, ok, poly, deg, logged=None, logged_ok=None, extra=None):
        i = _worst(lhs, rhs, sense)
        inputs = {"poly": poly, "deg": deg, "trials": int(lhs.size), "failures": int(np.count_nonzero(~ok)),
                  "lhs_max": float(np.max(lhs))}
        if extra:
            inputs.update(extra)
        out.append(VerdictReport(
            statement_id=sid, field=field, lhs=float(lhs[i]), rhs_asserted=float(rhs[i]), sense=sense,
            holds=bool(ok.all()), rhs_logged=None if logged is None else float(logged[i]),
            logged_holds=None if logged_ok is None else bool(logged_ok.all()), inputs=inputs, seed=seed))

    for deg in admissible_degrees(F, deg_max):
        coeffs, tables = monic_value_tables(F, deg)
        for co, vt in zip(coeffs, tables):
            poly = _poly_literal(co)
            counts = np.bincount(vt, minlength=q)
            kernel = counts[sub] / q
            dev = fvals @ kernel.T - means
            lhs = np.sum(dev * dev, axis=1) / q
            st, pr = pet_bounds(q, deg, 1.0)
            proof, stated = pr * tilde_sq * scale, st * tilde_sq
            # indicator values are in [0, 1], so roundoff is relative to 1
            ok = _upper_ok(lhs, proof, 1.0)
            st_ok = _upper_ok(lhs, stated, 1.0)
            emit("pet", lhs, proof, "<=", ok, poly, deg, stated, st_ok,
                 {"statement_violations": int(np.count_nonzero(~st_ok))})
            if not recurrence:
                continue
            idx = F.add(xdiv, vt[1:, None])                     # x/u + p(u)
            same = np.count_nonzero(B[:, None, :] & B[:, idx], axis=2)
            two = np.count_nonzero(B[:, None, :] & C[:, idx], axis=2)
            avg_same = same.sum(axis=1) / (fstar * q)
            avg_two = two.sum(axis=1) / (fstar * q)
            b24 = bound_same_set(mu_b, fstar, deg)
            b28 = bound_two_sets(mu_b, mu_c, fstar, deg)
            emit("recurrence-eq24", avg_same, b24, ">=", _lower_ok(avg_same, b24), poly, deg)
            emit("recurrence-eq28", avg_two, b28, ">=", _lower_ok(avg_two, b28), poly, deg)
            for half in (False, True):
                # delta |F| is an integer or half-integer; count > delta|F| <=> count > floor
                cut_b = size_b // 2 if half else np.zeros_like(size_b)
                delta_b = mu_b / 2 if half else np.zeros(trials)
                frac = np.count_nonzero(same > cut_b[:, None], axis=1) / fstar
                with np.errstate(divide="ignore", invalid="ignore"):
                    lb = np.where(size_b > 0, (b24 - delta_b) / mu_b, -np.inf)
                emit("return-time-eq26", frac, lb, ">=", _lower_ok(frac, lb), poly, deg,
                     extra={"delta": "mu/2" if half else "0"})
                lo = np.minimum(size_b, size_c)
                cut = lo // 2 if half else np.zeros_like(lo)
                delta = lo / (2 * q) if half else np.zeros(trials)
                frac = np.count_nonzero(two > cut[:, None], axis=1) / fstar
                with np.errstate(divide="ignore", invalid="ignore"):
                    lb = np.where(lo > 0, (b28 - delta) / (lo / q), -np.inf)
                emit("return-time-eq27", frac, lb, ">=", _lower_ok(frac, lb), poly, deg,
                     extra={"delta": "min/2" if half else "0"})
    return out


# -- single-polynomial suites ---------------------------------------------------------------

def vdc_suite(F: Field, trials: int = 100, seed: int = 0, m: int = 1) -> list[VerdictReport]:
    """Alternates additive and multiplicative group structures."""
    out = []
    for t in range(trials):
        rng = rng_for(seed, F.order, 2, t)
        group = "additive" if t % 2 == 0 else "multiplicative"
        n = F.order if group == "additive" else F.order - 1
        family = rng.standard_normal((n,) + (F.order,) * m)
        r = vdc_identity_residual(F, group, family)
        out.append(identity_report(f"vdc-{group}", F.literal(), r.lhs, r.rhs,
                                   inputs={"trial": t, "m": m, "relative_residual": r.relative}, seed=seed))
    return out


def mult_avg_suite(F: Field, p: Poly, trials: int = 50, seed: int = 0, scale: float = 1.0):
    out = []
    for t in range(trials):
        rng = rng_for(seed, F.order, 3, t)
        C = random_subset(F, rng)
        r = mult_avg_norm(F, p, C)
        out.append(upper_report("mult-avg", F.literal(), r.normsq, r.bound * scale, scale=max(r.bound, 1.0),
                                rhs_logged=r.proof_bound,
                                inputs={"poly": p.literal(), "C": C.size, "trial": t}, seed=seed))
    return out


def _random_product(F, rng, m, nonempty=True):
    return product_set(*(random_subset(F, rng, nonempty=nonempty) for _ in range(m)))


def recurrence_suite(F: Field, p: Poly, trials: int = 50, seed: int = 0, m: int = 1):
    out = []
    for t in range(trials):
        rng = rng_for(seed, F.order, 4, t)
        B = _random_product(F, rng, m)
        C = _random_product(F, rng, m)
        for r, C_used in ((recurrence_average(F, p, B), B), (recurrence_average(F, p, B, C, same_set=False), C)):
            out.append(lower_report(f"recurrence-{r.bound_id}", F.literal(), r.avg, r.bound,
                                    vacuous=r.vacuous,
                                    inputs={"poly": p.literal(), "m": m, "mu_B": measure(B), "mu_C": measure(C_used),
                                            "hypothesis_met": r.hypothesis_met, "trial": t}, seed=seed))
    return out


def return_set_suite(F: Field, p: Poly, trials: int = 50, seed: int = 0):
    out = []
    for t in range(trials):
        rng = rng_for(seed, F.order, 5, t)
        B = random_subset(F, rng, nonempty=True)
        C = random_subset(F, rng, nonempty=True)
        mu_b, mu_c = measure(B), measure(C)
        cases = [(None, 0), (None, mu_b / 2), (C, 0), (C, min(mu_b, mu_c) / 2)]
        for Cx, delta in cases:
            r = return_time_set(F, p, B, Cx, delta)
            out.append(lower_report(f"return-time-{r.bound_id}", F.literal(), r.fraction, r.lower_bound,
                                    vacuous=r.vacuous,
                                    inputs={"poly": p.literal(), "delta": Fraction(delta), "D": r.D.size,
                                            "trial": t}, seed=seed))
    return out


def shkredov_norm_suite(F: Field, trials: int = 50, seed: int = 0, scale: float = 1.0):
    out = []
    for t in range(trials):
        rng = rng_for(seed, F.order, 6, t)
        B = random_subset(F, rng, avoid_zero=True, nonempty=True)
        C = random_subset(F, rng, avoid_zero=True, nonempty=True)
        r = shkredov_norm(F, B, C)
        inputs = {"B": B.size, "C": C.size, "trial": t}
        out.append(upper_report("shkredov-l2", F.literal(), r.normsq, r.proof_bound * scale,
                                scale=max(r.proof_bound, 1.0), rhs_logged=r.stated_bound, inputs=inputs, seed=seed))
        out.append(upper_report("shkredov-diag", F.literal(), r.inner_diag, r.diag_bound * scale,
                                scale=max(r.diag_bound, 1.0), inputs=inputs, seed=seed))
    return out


def gs_term_suite(F: Field, trials: int = 50, seed: int = 0):
    out = []
    for t in range(trials):
        rng = rng_for(seed, F.order, 7, t)
        m = 1 + t % 2
        B = _random_product(F, rng, m, nonempty=False)
        r = gs_lower_term(B)
        out.append(lower_report("gs-lower-term", F.literal(), r.value, r.floor,
                                inputs={"m": m, "sizes": [b.size for b in B.factors], "trial": t}, seed=seed))
    return out


def run_suite(name: str, F: Field, p: Poly, trials: int, seed: int, scale: float = 1.0,
              m: int = 1, deg_max: int = 3) -> list[VerdictReport]:
    if name == "vdc":
        return vdc_suite(F, trials, seed, m)
    if name == "pet":
        return pet_sweep(F, deg_max, trials, seed, recurrence=False, scale=scale)
    if name == "mult-avg":
        return mult_avg_suite(F, p, trials, seed, scale)
    if name == "recurrence":
        return recurrence_suite(F, p, trials, seed, m)
    if name == "return-set":
        return return_set_suite(F, p, trials, seed)
    if name == "shkredov-norm":
        return shkredov_norm_suite(F, trials, seed, scale)
    if name == "gs-term":
        return gs_term_suite(F, trials, seed)
    raise ValueError(f"unknown suite {name!r}")


# -- threshold-meeting random sets ------------------------------------------------------------

def random_pair_meeting(F: Field, deg: int, rng, max_tries: int = 10_000):
    """(E, G) with the exact pairs threshold met, sizes sampled above the minimum."""
    q = F.order
    e = 2 ** (deg - 1)
    rhs = (2 * (deg + 2)) ** e * q ** (2 * e - 1)
    lo = 1
    while (lo * q) ** e <= rhs and lo <= q:
        lo += 1
    if lo > q:
        return None
    for _ in range(max_tries):
        a, b = (int(x) for x in rng.integers(lo, q + 1, size=2))
        if pairs_threshold(F, deg, a, b).met:
            return subset_of_size(F, rng, a), subset_of_size(F, rng, b)
    return None


def random_triple_meeting(F: Field, rng, variant: str = "strict7", max_tries: int = 10_000):
    """(B1, B2, B3) inside F* meeting the Shkredov threshold."""
    n = F.order - 1
    lo = 1
    while not shkredov_threshold(F, (lo, n, n), variant).met and lo <= n:
        lo += 1
    if lo > n:
        return None
    for _ in range(max_tries):
        sizes = [int(x) for x in rng.integers(lo, n + 1, size=3)]
        if shkredov_threshold(F, sizes, variant).met:
            return tuple(subset_of_size(F, rng, s, avoid_zero=True) for s in sizes)
    return None


def random_admissible_poly(F: Field, deg: int, rng) -> Poly:
    coeffs = [int(c) for c in rng.integers(0, F.order, size=deg)]
    coeffs.append(int(rng.integers(1, F.order)))
    return Poly(F, tuple(coeffs))


def summarize(records) -> dict:
    fails = [r for r in records if not r.holds]
    return {"records": len(records), "failed": len(fails),
            "failed_ids": sorted({r.statement_id for r in fails})}

