import itertools

import numpy as np
import pytest

from affinefield.field import build_field

# every field of order <= 32
SMALL_ORDERS = [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (11, 1), (13, 1), (2, 4),
                (17, 1), (19, 1), (23, 1), (5, 2), (3, 3), (29, 1), (31, 1), (2, 5)]


@pytest.fixture(scope="session")
def small_fields():
    return [build_field(p, k) for p, k in SMALL_ORDERS]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- naive polynomial arithmetic over Z_p, used as an oracle ------------------------

def poly_mulmod(a, b, modulus, p):
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] = (prod[i + j] + x * y) % p
    k = len(modulus) - 1
    for d in range(len(prod) - 1, k - 1, -1):
        c = prod[d]
        if c:
            for i in range(k + 1):
                prod[d - k + i] = (prod[d - k + i] - c * modulus[i]) % p
    return (prod + [0] * k)[:k]


def index_of(coeffs, p):
    return sum(int(c) * p**i for i, c in enumerate(coeffs))


def coeffs_of(i, p, k):
    return [(i // p**j) % p for j in range(k)]


def oracle_mul(F, a, b):
    k = F.k
    if k == 1:
        return a * b % F.p
    return index_of(poly_mulmod(coeffs_of(a, F.p, k), coeffs_of(b, F.p, k), list(F.modulus), F.p), F.p)


def oracle_add(F, a, b):
    ca, cb = coeffs_of(a, F.p, F.k), coeffs_of(b, F.p, F.k)
    return index_of([(x + y) % F.p for x, y in zip(ca, cb)], F.p)


def all_pairs(n):
    return itertools.product(range(n), repeat=2)


# acceptance criteria append one line each; shown at the end of every run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
