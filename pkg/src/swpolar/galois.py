"""Table-driven arithmetic over GF(q), q = p**r <= 256.

Elements are integers in ``[0, q)``.  For ``r > 1`` an element's base-``p``
digits are the coefficients of a polynomial in ``x`` (lowest degree first)
reduced modulo a fixed monic irreducible polynomial.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

Symbol = int

MAX_Q = 256


class FieldError(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _poly_mod(num: list[int], den: list[int], p: int) -> list[int]:
    """Remainder of ``num`` by monic ``den`` over GF(p), coefficients low->high."""
    num = list(num)
    d = len(den) - 1
    for k in range(len(num) - 1, d - 1, -1):
        c = num[k] % p
        if c:
            for j in range(d + 1):
                num[k - d + j] = (num[k - d + j] - c * den[j]) % p
    return [c % p for c in num[:d]]


def is_irreducible(coeffs, p: int) -> bool:
    """Exhaustive divisor search; fine for the small degrees used here."""
    coeffs = [int(c) % p for c in coeffs]
    r = len(coeffs) - 1
    if r < 1 or coeffs[-1] != 1:
        return False
    if r == 1:
        return True
    for d in range(1, r // 2 + 1):
        for low in product(range(p), repeat=d):
            if not any(_poly_mod(coeffs, list(low) + [1], p)):
                return False
    return True


def default_modulus(p: int, r: int) -> tuple[int, ...]:
    """Smallest monic irreducible of degree ``r``, ordered by its coefficient
    string read from the highest non-leading degree down."""
    if r == 1:
        return (0, 1)
    for code in range(p**r):
        # digit k of ``code`` (base p, most significant first) is coefficient of x^(r-1-k)
        digits = [(code // p**k) % p for k in range(r)]  # coefficient of x^k
        coeffs = digits + [1]
        if coeffs[0] == 0:
            continue
        if is_irreducible(coeffs, p):
            return tuple(coeffs)
    raise FieldError(f"no irreducible polynomial of degree {r} over GF({p})")


@dataclass(frozen=True)
class FieldSpec:
    """GF(p**r) with a fixed modulus and a verified primitive element."""

    p: int
    r: int = 1
    modulus: tuple[int, ...] = ()
    add_table: np.ndarray = field(init=False, repr=False, compare=False)
    sub_table: np.ndarray = field(init=False, repr=False, compare=False)
    mul_table: np.ndarray = field(init=False, repr=False, compare=False)
    inv_table: np.ndarray = field(init=False, repr=False, compare=False)
    neg_table: np.ndarray = field(init=False, repr=False, compare=False)
    alpha: Symbol = field(init=False, compare=False)

    def __post_init__(self):
        if not is_prime(self.p):
            raise FieldError(f"characteristic {self.p} is not prime")
        if self.r < 1:
            raise FieldError("extension degree must be >= 1")
        if self.p**self.r > MAX_Q:
            raise FieldError(f"q = {self.p}**{self.r} exceeds {MAX_Q}")
        modulus = tuple(int(c) for c in self.modulus) or default_modulus(self.p, self.r)
        if self.r > 1 and not (len(modulus) == self.r + 1 and is_irreducible(modulus, self.p)):
            raise FieldError(f"modulus {modulus} is not a monic irreducible of degree {self.r}")
        object.__setattr__(self, "modulus", modulus)

        q, p, r = self.q, self.p, self.r
        vals = np.arange(q)
        digits = np.stack([(vals // p**k) % p for k in range(r)], axis=1)  # (q, r)
        weights = p ** np.arange(r)

        add = ((digits[:, None, :] + digits[None, :, :]) % p) @ weights
        sub = ((digits[:, None, :] - digits[None, :, :]) % p) @ weights
        # polynomial product for every pair, then reduce from the top degree down
        prod = np.zeros((q, q, 2 * r - 1), dtype=np.int64)
        for i in range(r):
            for j in range(r):
                prod[:, :, i + j] += np.outer(digits[:, i], digits[:, j])
        prod %= p
        mod = np.array(modulus, dtype=np.int64)
        for k in range(2 * r - 2, r - 1, -1):
            c = prod[:, :, k].copy()
            prod[:, :, k - r:k + 1] -= c[:, :, None] * mod[None, None, :]
            prod %= p
        mul = prod[:, :, :r] @ weights

        inv = np.zeros(q, dtype=np.int64)
        rows, cols = np.nonzero(mul == 1)
        inv[rows] = cols
        for name, arr in (("add_table", add), ("sub_table", sub), ("mul_table", mul),
                          ("inv_table", inv), ("neg_table", sub[0])):
            arr = np.ascontiguousarray(arr, dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "alpha", primitive_element(self))

    @property
    def q(self) -> int:
        return self.p**self.r

    @property
    def is_prime_field(self) -> bool:
        return self.r == 1

    def check(self, a) -> None:
        arr = np.asarray(a)
        if arr.size and (arr.min() < 0 or arr.max() >= self.q):
            raise FieldError(f"symbol out of range for GF({self.q})")

    def to_config(self) -> dict:
        return {"p": self.p, "r": self.r, "modulus": list(self.modulus)}


@lru_cache(maxsize=None)
def gf(p: int, r: int = 1, modulus: tuple[int, ...] | None = None) -> FieldSpec:
    """Cached field constructor."""
    return FieldSpec(p, r, tuple(modulus) if modulus else ())


def field_for_size(q: int) -> FieldSpec:
    for p in range(2, q + 1):
        if is_prime(p):
            r, v = 0, q
            while v % p == 0:
                v //= p
                r += 1
            if v == 1:
                return gf(p, r)
            if r:
                break
    raise FieldError(f"{q} is not a prime power")


def add(a, b, f: FieldSpec):
    f.check(a)
    f.check(b)
    return _out(f.add_table[a, b])


def sub(a, b, f: FieldSpec):
    f.check(a)
    f.check(b)
    return _out(f.sub_table[a, b])


def mul(a, b, f: FieldSpec):
    f.check(a)
    f.check(b)
    return _out(f.mul_table[a, b])


def inv(a, f: FieldSpec):
    f.check(a)
    if np.any(np.asarray(a) == 0):
        raise ZeroDivisionError("inverse of zero in a finite field")
    return _out(f.inv_table[a])


def power(a: Symbol, k: int, f: FieldSpec) -> Symbol:
    f.check(a)
    if k < 0:
        a, k = inv(a, f), -k
    result, base = 1, int(a)
    while k:
        if k & 1:
            result = int(f.mul_table[result, base])
        base = int(f.mul_table[base, base])
        k >>= 1
    return result


def order(a: Symbol, f: FieldSpec) -> int:
    """Multiplicative order of a nonzero element."""
    if a == 0:
        raise FieldError("zero has no multiplicative order")
    k, v = 1, int(a)
    while v != 1:
        v = int(f.mul_table[v, a])
        k += 1
    return k


def primitive_element(f: FieldSpec) -> Symbol:
    """Smallest element (by value) of multiplicative order q - 1."""
    for a in range(1, f.q):
        if order(a, f) == f.q - 1:
            return a
    raise FieldError("field has no primitive element")  # unreachable for a field


def _out(v):
    return int(v) if np.ndim(v) == 0 else v
