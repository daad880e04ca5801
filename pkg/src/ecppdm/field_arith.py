"""Exact arithmetic in the prime field GF(p), p < 2**31.

All values are canonical representatives in [0, p-1]. The cap keeps every
intermediate product inside 64 bits and makes exhaustive checks cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ModulusMismatch, NoInverse, NotPrime

MAX_PRIME = 2 ** 31


def is_prime(n: int) -> bool:
    """Deterministic trial division up to sqrt(n)."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True


@dataclass(frozen=True)
class Prime:
    """An odd prime modulus, 3 <= p < 2**31."""

    p: int

    def __post_init__(self):
        if not (3 <= self.p < MAX_PRIME):
            raise NotPrime(f"modulus {self.p} outside [3, 2**31)")
        if not is_prime(self.p):
            raise NotPrime(f"{self.p} is not prime")


@dataclass(frozen=True)
class FieldElement:
    """Canonical residue mod its prime."""

    value: int
    prime: Prime

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.prime.p)

    @property
    def p(self) -> int:
        return self.prime.p


def _same_modulus(a: FieldElement, b: FieldElement) -> int:
    if a.prime != b.prime:
        raise ModulusMismatch(f"moduli differ: {a.p} vs {b.p}")
    return a.p


def fe_add(a: FieldElement, b: FieldElement) -> FieldElement:
    p = _same_modulus(a, b)
    return FieldElement((a.value + b.value) % p, a.prime)


def fe_sub(a: FieldElement, b: FieldElement) -> FieldElement:
    p = _same_modulus(a, b)
    return FieldElement((a.value - b.value) % p, a.prime)


def fe_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    p = _same_modulus(a, b)
    return FieldElement((a.value * b.value) % p, a.prime)


def fe_neg(a: FieldElement) -> FieldElement:
    return FieldElement(-a.value % a.p, a.prime)


def fe_inv(a: FieldElement) -> FieldElement:
    """Multiplicative inverse by the extended Euclid algorithm.

    Remainders and Bezout coefficients stay below the modulus throughout,
    which the asserts pin down.
    """
    if a.value == 0:
        raise NoInverse("0 has no multiplicative inverse")
    p = a.p
    r_prev, r = p, a.value
    t_prev, t = 0, 1
    while r != 0:
        q = r_prev // r
        r_prev, r = r, r_prev - q * r
        t_prev, t = t, t_prev - q * t
        assert r_prev < p and abs(t_prev) <= p
    # r_prev is gcd(a, p) == 1 since p is prime and a != 0
    return FieldElement(t_prev % p, a.prime)


def fe_sqrt_scan(a: FieldElement) -> set[FieldElement]:
    """All square roots of a, found by scanning y = 0 .. p-1.

    Returns the empty set for non-residues, {0} for a = 0, and a pair of
    roots summing to p otherwise. Only sensible for small p.
    """
    p = a.p
    roots = {FieldElement(y, a.prime) for y in range(p) if y * y % p == a.value}
    return roots


def fe_is_residue(a: FieldElement) -> bool:
    """Euler criterion: a is a square mod p (0 counts as a square)."""
    if a.value == 0:
        return True
    return pow(a.value, (a.p - 1) // 2, a.p) == 1


def fe_sqrt(a: FieldElement) -> FieldElement | None:
    """Smaller square root of a, or None for a non-residue.

    Tonelli-Shanks; agrees with fe_sqrt_scan everywhere but runs in
    O(log^2 p), which the message encoder needs on larger moduli.
    """
    p = a.p
    n = a.value
    if n == 0:
        return FieldElement(0, a.prime)
    if not fe_is_residue(a):
        return None
    if p % 4 == 3:
        r = pow(n, (p + 1) // 4, p)
        return FieldElement(min(r, p - r), a.prime)
    # write p-1 = q * 2^s with q odd
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(n, q, p), pow(n, (q + 1) // 2, p)
    while t != 1:
        t2, i = t, 0
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return FieldElement(min(r, p - r), a.prime)
