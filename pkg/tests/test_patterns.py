import math

import numpy as np
import pytest

from affinefield.errors import InadmissiblePolynomial, SThresholdTooLarge
from affinefield.field import Poly, build_field
from affinefield.functions import FieldSubset
from affinefield.patterns import (
    count_product_sum_pairs,
    count_quadruples,
    count_shkredov_triples,
    pairs_threshold,
    return_set_bound,
    shkredov_return_set,
    shkredov_threshold,
)

ORACLE_FIELDS = [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (11, 1), (13, 1)]


def S(F, *idx):
    return FieldSubset.from_indices(F, idx)


def test_pairs_examples():
    F = build_field(5)
    x = Poly(F, (0, 1))
    full = FieldSubset.full(F)
    pc = count_product_sum_pairs(F, x, full, full)
    assert pc.count_relaxed == 20 and pc.count == 16
    pc = count_product_sum_pairs(F, x, S(F, 1), S(F, 0))
    assert pc.count == 2 and sorted(pc.witnesses) == [(2, 3), (3, 2)]
    pc = count_product_sum_pairs(F, x, FieldSubset.empty(F), full)
    assert pc.count == 0 and pc.count_relaxed == 0 and pc.witnesses == []
    with pytest.raises(InadmissiblePolynomial):
        count_product_sum_pairs(F, Poly(F, (1,)), full, full)


def test_pairs_threshold_examples():
    F = build_field(101)
    t = pairs_threshold(F, 1, 7, 87)       # 609 > 606
    assert t.met and t.lhs == 609 and t.rhs == 606
    assert not pairs_threshold(F, 1, 6, 101).met
    t = pairs_threshold(F, 2, 101, 101)
    assert t.met and t.lhs == 101**4 and t.rhs == 64 * 101**3
    assert not pairs_threshold(F, 2, 0, 101).met
    # Z_5 at degree 1 can never satisfy |E||G| > 30
    assert pairs_threshold(build_field(5), 1, 5, 5).vacuous


def test_pairs_threshold_against_fraction_arithmetic():
    F = build_field(31)
    for deg in (1, 2, 3):
        for a in range(0, 32, 3):
            for b in range(0, 32, 5):
                # |E||G| > 2(q+2)|F|^(2 - 1/2^(q-1)) evaluated with high-precision reals
                rhs = 2 * (deg + 2) * math.exp((2 - 1 / 2 ** (deg - 1)) * math.log(31))
                if abs(a * b - rhs) > 1e-6 * rhs:
                    assert pairs_threshold(F, deg, a, b).met == (a * b > rhs)


def test_shkredov_examples():
    F = build_field(5)
    star = FieldSubset.star(F)
    assert count_shkredov_triples(F, star, star, star).count == 12
    assert count_shkredov_triples(F, S(F, 0), star, star).count == 0
    assert count_shkredov_triples(F, star, FieldSubset.full(F), star).count == 16


def test_shkredov_threshold_examples():
    F49 = build_field(7, 2)
    assert shkredov_threshold(F49, (48, 48, 48)).vacuous
    assert not shkredov_threshold(F49, (48, 48, 48)).met
    F121 = build_field(11, 2)
    t = shkredov_threshold(F121, (120, 120, 120))
    assert t.met and t.lhs == 120**6 and t.rhs == 49 * 121**5
    assert not shkredov_threshold(F121, (0, 120, 120)).met
    F = build_field(101)
    assert shkredov_threshold(F, (100, 100, 100)).met
    w = shkredov_threshold(F, (101, 101, 101), "weak8")
    assert w.rhs == 64 * 101**5 and w.met == (101**6 >= 64 * 101**5)


def test_shkredov_return_set_examples():
    F = build_field(5)
    star = FieldSubset.star(F)
    rs = shkredov_return_set(F, star, star, star, 0)
    assert rs.D == star
    assert rs.holds
    tiny = S(F, 1, 2)
    rs = shkredov_return_set(F, tiny, tiny, tiny, 1)
    assert rs.D.size == 0 and rs.bound <= 0 and rs.holds
    rs = shkredov_return_set(F, FieldSubset.empty(F), star, star, 0)
    assert rs.D.size == 0 and rs.bound <= 0
    with pytest.raises(SThresholdTooLarge):
        shkredov_return_set(F, tiny, star, star, 2)


def test_return_set_bound_formula():
    n, sizes, s = 101, (90, 80, 70), 3
    P = 90 * 80 * 70
    expected = (P * 100 / 101**2 - math.sqrt(7 * P * 100**2 / 101**1.5) - s * 100) / 70
    assert return_set_bound(n, sizes, s) == pytest.approx(expected, rel=1e-14)


def test_quadruple_examples():
    for pk in [(5, 1), (7, 1), (2, 3), (3, 2)]:
        F = build_field(*pk)
        assert count_quadruples(F, FieldSubset.full(F)).count == (F.order - 1) ** 2
    for p in (5, 7, 2):
        F = build_field(p)
        assert count_quadruples(F, S(F, 1)).count == 0
        assert count_quadruples(F, FieldSubset.empty(F)).count == 0


# -- literal triple-loop recounts ------------------------------------------------------------

def loop_pairs(F, p, E, G, relaxed):
    n = 0
    for u in range(1, F.order):
        for v in range(0 if relaxed else 1, F.order):
            if F.mul(u, v) in E and F.add(p(u), v) in G:
                n += 1
    return n


def loop_triples(F, B1, B2, B3):
    n = 0
    for u in range(1, F.order):
        for v in range(1, F.order):
            for w in range(F.order):          # w = u + v, located by scanning
                if w == F.add(u, v) and v in B1 and w in B2 and F.mul(u, v) in B3:
                    n += 1
    return n


def loop_quadruples(F, A):
    n = 0
    for u in range(1, F.order):
        for v in range(1, F.order):
            if all(z in A for z in (u, v, F.add(u, v), F.mul(u, v))):
                n += 1
    return n


@pytest.mark.parametrize("pk", ORACLE_FIELDS)
def test_counts_match_loops(pk, rng):
    F = build_field(*pk)
    for _ in range(8):
        sets = [FieldSubset(F, rng.random(F.order) < rng.uniform(0.2, 0.9)) for _ in range(3)]
        E, G, H = sets
        if F.char > 2:
            deg = int(rng.integers(1, min(3, F.char - 1) + 1))
        else:
            deg = 1
        p = Poly(F, tuple(int(c) for c in rng.integers(0, F.order, deg)) + (int(rng.integers(1, F.order)),))
        pc = count_product_sum_pairs(F, p, E, G)
        assert pc.count == loop_pairs(F, p, E, G, relaxed=False)
        assert pc.count_relaxed == loop_pairs(F, p, E, G, relaxed=True)
        for u, v in pc.witnesses:
            assert v != 0 and F.mul(u, v) in E and F.add(p(u), v) in G
        tc = count_shkredov_triples(F, E, G, H)
        assert tc.count == loop_triples(F, E, G, H)
        for u, v in tc.witnesses:
            assert v in E and F.add(u, v) in G and F.mul(u, v) in H
        qc = count_quadruples(F, E)
        assert qc.count == loop_quadruples(F, E)
        assert (qc.count == 0) == (qc.witnesses == [])


def test_witnesses_capped():
    F = build_field(31)
    pc = count_product_sum_pairs(F, Poly(F, (0, 1)), FieldSubset.full(F), FieldSubset.full(F))
    assert pc.count == 900 and len(pc.witnesses) == 64


@pytest.mark.parametrize("pk", [(11, 1), (13, 1), (17, 1)])
def test_return_set_matches_loops(pk, rng):
    F = build_field(*pk)
    for _ in range(10):
        Bs = [FieldSubset(F, rng.random(F.order) < 0.7).without_zero() for _ in range(3)]
        ell = min(b.size for b in Bs)
        if ell == 0:
            continue
        s = int(rng.integers(0, ell))
        rs = shkredov_return_set(F, *Bs, s)
        D = {u for u in range(1, F.order)
             if sum(1 for v in range(F.order) if v in Bs[0] and F.add(u, v) in Bs[1] and F.mul(u, v) in Bs[2]) > s}
        assert set(int(u) for u in rs.D.members()) == D
        assert rs.holds


def test_weak8_reduction_on_subsets_of_f():
    rng = np.random.default_rng(8)
    F = build_field(101)
    for _ in range(50):
        Bs = [FieldSubset(F, rng.random(101) < 0.97) for _ in range(3)]
        if shkredov_threshold(F, [b.size for b in Bs], "weak8").met:
            assert count_shkredov_triples(F, *Bs).count >= 1
