"""Arithmetic in GF(p^k) on canonical element indices.

An element is a plain ``int`` in ``[0, p**k)``.  The base-p digits of the
index, little-endian, are the coefficients of the element viewed as a
polynomial modulo the field's monic irreducible modulus.  Index 0 is the
additive identity and index 1 the multiplicative identity.

Every arithmetic method accepts either Python ints or integer numpy arrays
and returns the same kind, so the hot loops elsewhere can work on whole
index ranges at once.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field as dc_field
from itertools import product

import numpy as np

from .errors import (
    DegreeMismatch,
    FieldMismatch,
    FieldTooLarge,
    NotPrime,
    ReducibleModulus,
    ZeroInverse,
)

MAX_ORDER = 2**20
# full q x q operation tables are materialised up to this order
TABLE_ORDER = 2048


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# -- polynomials over Z_p as little-endian int lists ---------------------------

def _trim(a: list[int]) -> list[int]:
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def _polymod(a: list[int], m: list[int], p: int) -> list[int]:
    """Remainder of a modulo the monic polynomial m over Z_p."""
    a = [c % p for c in a]
    dm = len(m) - 1
    for i in range(len(a) - 1, dm - 1, -1):
        c = a[i]
        if c:
            for j in range(dm + 1):
                a[i - dm + j] = (a[i - dm + j] - c * m[j]) % p
    return _trim(a[:dm] if dm > 0 else [0])


def _polymulmod(a: list[int], b: list[int], m: list[int], p: int) -> list[int]:
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] += x * y
    return _polymod(prod, m, p)


def is_irreducible(modulus: list[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree <= deg/2."""
    k = len(modulus) - 1
    if k <= 1:
        return k == 1
    if modulus[0] % p == 0:
        return False
    for d in range(1, k // 2 + 1):
        for low in product(range(p), repeat=d):
            if _polymod(list(modulus), list(low) + [1], p) == [0]:
                return False
    return True


def _search_modulus(p: int, k: int) -> tuple[int, ...]:
    # candidates ordered by the index of their low coefficient vector
    for idx in range(p**k):
        low = [(idx // p**i) % p for i in range(k)]
        cand = low + [1]
        if is_irreducible(cand, p):
            return tuple(cand)
    raise ReducibleModulus(f"no irreducible polynomial of degree {k} over Z_{p}")  # pragma: no cover


@dataclass(frozen=True, eq=False)
class Field:
    """A concrete finite field GF(p^k) with log/antilog tables.

    Build instances with :func:`build_field`; the constructor trusts its
    arguments.
    """

    p: int
    k: int
    modulus: tuple[int, ...] | None
    generator: int
    exp: np.ndarray = dc_field(repr=False)
    log: np.ndarray = dc_field(repr=False)

    @property
    def order(self) -> int:
        return self.p**self.k

    @property
    def char(self) -> int:
        return self.p

    def __len__(self) -> int:
        return self.order

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return (self.p, self.k, self.modulus) == (other.p, other.k, other.modulus)

    def __hash__(self):
        return hash((self.p, self.k, self.modulus))

    def __str__(self):
        return self.literal()

    def literal(self) -> str:
        s = f"{self.p}^{self.k}"
        if self.modulus is not None:
            s += "/" + ",".join(str(c) for c in self.modulus)
        return s

    def check_same(self, other: "Field") -> None:
        if other != self:
            raise FieldMismatch(f"{other} is not {self}")

    # -- element representation -------------------------------------------
    @functools.cached_property
    def _powers(self) -> np.ndarray:
        return self.p ** np.arange(self.k, dtype=np.int64)

    @functools.cached_property
    def digits(self) -> np.ndarray:
        idx = np.arange(self.order, dtype=np.int64)
        return (idx[:, None] // self._powers[None, :]) % self.p

    def from_coeffs(self, coeffs) -> int:
        """Index of the element sum(c_i x^i), coefficients reduced mod p."""
        coeffs = [int(c) for c in coeffs]
        if len(coeffs) > self.k:
            if self.modulus is None:
                raise DegreeMismatch(f"prime field element needs 1 coefficient, got {coeffs}")
            coeffs = _polymod(coeffs, list(self.modulus), self.p)
        return sum((c % self.p) * self.p**i for i, c in enumerate(coeffs))

    def to_coeffs(self, a: int) -> list[int]:
        return [(a // self.p**i) % self.p for i in range(self.k)]

    def elements(self) -> np.ndarray:
        return np.arange(self.order, dtype=np.int64)

    def nonzero(self) -> np.ndarray:
        return np.arange(1, self.order, dtype=np.int64)

    # -- tables ---------------------------------------------------------------
    @functools.cached_property
    def add_table(self) -> np.ndarray:
        if self.order > TABLE_ORDER:
            raise FieldTooLarge(f"add table not materialised above order {TABLE_ORDER}")
        e = self.elements()
        return self._add_digits(e[:, None], e[None, :]).astype(np.int32)

    @functools.cached_property
    def mul_table(self) -> np.ndarray:
        if self.order > TABLE_ORDER:
            raise FieldTooLarge(f"mul table not materialised above order {TABLE_ORDER}")
        e = self.elements()
        return self._mul_logs(e[:, None], e[None, :]).astype(np.int32)

    @functools.cached_property
    def neg_table(self) -> np.ndarray:
        d = (-self.digits) % self.p
        return (d @ self._powers).astype(np.int64)

    @functools.cached_property
    def inv_table(self) -> np.ndarray:
        """inv_table[0] is 0 by convention; use :meth:`inv` for checked inversion."""
        q1 = self.order - 1
        out = np.zeros(self.order, dtype=np.int64)
        out[1:] = self.exp[(-self.log[1:]) % q1]
        return out

    # -- arithmetic -------------------------------------------------------------
    def _add_digits(self, a, b):
        if self.k == 1:
            return (a + b) % self.p
        s = (self.digits[a] + self.digits[b]) % self.p
        return s @ self._powers

    def _mul_logs(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        q1 = self.order - 1
        out = self.exp[(self.log[a] + self.log[b]) % q1]
        return np.where((a == 0) | (b == 0), 0, out)

    def add(self, a, b):
        if np.ndim(a) == 0 and np.ndim(b) == 0:
            if self.k == 1:
                return (int(a) + int(b)) % self.p
            return int(self._add_digits(int(a), int(b)))
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        if self.order <= TABLE_ORDER and self.k > 1:
            return self.add_table[a, b].astype(np.int64)
        return self._add_digits(a, b)

    def neg(self, a):
        if np.ndim(a) == 0:
            return int(self.neg_table[int(a)])
        return self.neg_table[np.asarray(a, dtype=np.int64)]

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if np.ndim(a) == 0 and np.ndim(b) == 0:
            a, b = int(a), int(b)
            if a == 0 or b == 0:
                return 0
            if self.k == 1:
                return a * b % self.p
            return int(self.exp[(int(self.log[a]) + int(self.log[b])) % (self.order - 1)])
        if self.order <= TABLE_ORDER:
            return self.mul_table[np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)].astype(np.int64)
        return self._mul_logs(a, b)

    def inv(self, a):
        if np.ndim(a) == 0:
            if int(a) == 0:
                raise ZeroInverse("0 has no multiplicative inverse")
            return int(self.inv_table[int(a)])
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroInverse("0 has no multiplicative inverse")
        return self.inv_table[a]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, n: int):
        if n < 0:
            raise ValueError("negative exponent; use inv")
        if np.ndim(a) == 0:
            a = int(a)
            if a == 0:
                return 1 if n == 0 else 0
            return int(self.exp[(int(self.log[a]) * n) % (self.order - 1)])
        a = np.asarray(a, dtype=np.int64)
        out = self.exp[(self.log[a] * n) % (self.order - 1)]
        return np.where(a == 0, 1 if n == 0 else 0, out)

    def discrete_log(self, a: int) -> int:
        if a == 0:
            raise ZeroInverse("log of 0 is undefined")
        return int(self.log[a])

    def antilog(self, n: int) -> int:
        return int(self.exp[n % (self.order - 1)])

    def multiplicative_order(self, a: int) -> int:
        q1 = self.order - 1
        return q1 // np.gcd(int(self.log[a]), q1) if a else 0


def _mul_matrix(h: list[int], modulus: list[int], p: int, k: int) -> np.ndarray:
    """k x k matrix over Z_p of the linear map y -> h*y."""
    cols = []
    for i in range(k):
        basis = [0] * i + [1]
        col = _polymulmod(h, basis, modulus, p)
        cols.append(col + [0] * (k - len(col)))
    return np.array(cols, dtype=np.int64).T


def _pow_poly(a: list[int], n: int, modulus: list[int], p: int) -> list[int]:
    result = [1]
    base = list(a)
    while n:
        if n & 1:
            result = _polymulmod(result, base, modulus, p)
        base = _polymulmod(base, base, modulus, p)
        n >>= 1
    return result


@functools.lru_cache(maxsize=None)
def _build(p: int, k: int, modulus: tuple[int, ...] | None) -> Field:
    q = p**k
    q1 = q - 1
    # k = 1 works through the same code with the degree-1 modulus x
    red = list(modulus) if modulus is not None else [0, 1]
    powers = p ** np.arange(k, dtype=np.int64)

    def digits(i: int) -> list[int]:
        return _trim([(i // p**j) % p for j in range(k)])

    one = [1]
    gen = 1
    if q1 > 1:
        factors = prime_factors(q1)
        for cand in range(2, q):
            d = digits(cand)
            if all(_pow_poly(d, q1 // ell, red, p) != one for ell in factors):
                gen = cand
                break
    g = digits(gen)

    # antilog table by doubling: block [n, 2n) = block [0, n) times g^n
    exp_digits = np.zeros((1, k), dtype=np.int64)
    exp_digits[0, 0] = 1
    while exp_digits.shape[0] < q1:
        n = exp_digits.shape[0]
        mat = _mul_matrix(_pow_poly(g, n, red, p), red, p, k)
        exp_digits = np.vstack([exp_digits, (exp_digits @ mat.T) % p])
    exp = (exp_digits[:q1] @ powers).astype(np.int64)
    exp.setflags(write=False)
    log = np.zeros(q, dtype=np.int64)
    log[exp] = np.arange(q1, dtype=np.int64)
    log.setflags(write=False)
    return Field(p=p, k=k, modulus=modulus, generator=gen, exp=exp, log=log)


def build_field(p: int, k: int = 1, modulus=None) -> Field:
    """Construct GF(p^k).

    Without an explicit modulus the smallest monic irreducible polynomial
    of degree k is used, ordering candidates by the index of their
    coefficient vector.  The generator is the lowest-index primitive
    element.
    """
    if not is_prime(p):
        raise NotPrime(p)
    if k < 1:
        raise DegreeMismatch(f"extension degree must be >= 1, got {k}")
    if p**k > MAX_ORDER:
        raise FieldTooLarge(f"order {p}^{k} exceeds {MAX_ORDER}")
    if modulus is not None:
        modulus = tuple(int(c) % p for c in modulus)
        if len(modulus) != k + 1 or modulus[-1] != 1:
            raise DegreeMismatch(f"modulus must be monic of degree {k}: {modulus}")
        if not is_irreducible(list(modulus), p):
            raise ReducibleModulus(modulus)
        if k == 1:
            modulus = None
    elif k > 1:
        modulus = _search_modulus(p, k)
    return _build(p, k, modulus)


def parse_field(text: str) -> Field:
    """Parse ``p^k`` or ``p^k/c0,...,ck`` (plain ``p`` means k = 1)."""
    from .errors import ConfigParse

    text = text.strip()
    mod = None
    if "/" in text:
        text, tail = text.split("/", 1)
        try:
            mod = [int(c) for c in tail.split(",")]
        except ValueError as exc:
            raise ConfigParse(f"bad modulus in field literal {tail!r}") from exc
    try:
        if "^" in text:
            p_s, k_s = text.split("^", 1)
            p, k = int(p_s), int(k_s)
        else:
            p, k = int(text), 1
    except ValueError as exc:
        raise ConfigParse(f"bad field literal {text!r}") from exc
    return build_field(p, k, mod)


@dataclass(frozen=True)
class Poly:
    """Polynomial with coefficients in a field, little-endian.

    Trailing zero coefficients are stripped; the zero polynomial is ``(0,)``
    and has degree 0.
    """

    field: Field
    coeffs: tuple[int, ...]

    def __post_init__(self):
        c = [int(x) for x in self.coeffs] or [0]
        if any(not 0 <= x < self.field.order for x in c):
            raise FieldMismatch(f"coefficient out of range for {self.field}: {c}")
        object.__setattr__(self, "coeffs", tuple(_trim(c)))

    @classmethod
    def monomial(cls, field: Field, n: int, coef: int = 1) -> "Poly":
        return cls(field, (0,) * n + (coef,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return eval_poly(self, x)

    @functools.cached_property
    def value_table(self) -> np.ndarray:
        """p(u) for every u in the canonical enumeration."""
        v = eval_poly(self, self.field.elements())
        v = np.asarray(v, dtype=np.int64)
        v.setflags(write=False)
        return v

    def literal(self) -> str:
        return ",".join(str(c) for c in self.coeffs)

    def __str__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            if not mono:
                terms.append(str(c))
            else:
                terms.append(mono if c == 1 else f"{c}*{mono}")
        return " + ".join(reversed(terms)) or "0"


def eval_poly(poly: Poly, x, field: Field | None = None):
    """Horner evaluation of ``poly`` at x (int or index array)."""
    F = poly.field
    if field is not None:
        F.check_same(field)
    scalar = np.ndim(x) == 0
    acc = 0 if scalar else np.zeros(np.shape(x), dtype=np.int64)
    for c in reversed(poly.coeffs):
        acc = F.add(F.mul(acc, x), c)
    return acc


def is_admissible(poly: Poly, field: Field | None = None) -> bool:
    """Non-constant with degree at most char(F) - 1."""
    F = field or poly.field
    F.check_same(poly.field)
    return 1 <= poly.degree <= F.char - 1


def parse_poly(field: Field, text: str) -> Poly:
    from .errors import ConfigParse

    try:
        coeffs = [int(c) for c in text.split(",")]
    except ValueError as exc:
        raise ConfigParse(f"bad polynomial literal {text!r}") from exc
    return Poly(field, tuple(coeffs))
