"""The elliptic group E_p(a, b): y^2 = x^3 + ax + b over GF(p), p > 3.

Affine chord-and-tangent group law with the point at infinity as identity.
Scalar multiplication is left-to-right double-and-add.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidDomain, OffCurveInput, SingularCurve
from .field_arith import (
    FieldElement,
    Prime,
    fe_inv,
    fe_sqrt_scan,
)


@dataclass(frozen=True)
class CurveParams:
    """Coefficients of a nonsingular curve; a and b are canonical residues."""

    prime: Prime
    a: int
    b: int

    def __post_init__(self):
        p = self.prime.p
        object.__setattr__(self, "a", self.a % p)
        object.__setattr__(self, "b", self.b % p)
        if (4 * self.a ** 3 + 27 * self.b ** 2) % p == 0:
            raise SingularCurve(f"4a^3 + 27b^2 = 0 mod {p}")

    @property
    def p(self) -> int:
        return self.prime.p

    def fe(self, v: int) -> FieldElement:
        return FieldElement(v, self.prime)


def validate_curve(p: Prime | int, a: int, b: int) -> CurveParams:
    prime = p if isinstance(p, Prime) else Prime(p)
    return CurveParams(prime, a, b)


@dataclass(frozen=True)
class ECPoint:
    """Affine point, or the point at infinity when both coordinates are None."""

    x: int | None
    y: int | None

    @property
    def is_infinity(self) -> bool:
        return self.x is None


INFINITY = ECPoint(None, None)


def is_on_curve(P: ECPoint, c: CurveParams) -> bool:
    if P.is_infinity:
        return True
    p = c.p
    if not (0 <= P.x < p and 0 <= P.y < p):
        return False
    return P.y * P.y % p == (P.x ** 3 + c.a * P.x + c.b) % p


def _require_on_curve(P: ECPoint, c: CurveParams) -> None:
    if not is_on_curve(P, c):
        raise OffCurveInput(f"{P} not on E_{c.p}({c.a},{c.b})")


def negate(P: ECPoint, c: CurveParams) -> ECPoint:
    if P.is_infinity:
        return INFINITY
    return ECPoint(P.x, (-P.y) % c.p)


def point_add(P: ECPoint, Q: ECPoint, c: CurveParams) -> ECPoint:
    _require_on_curve(P, c)
    _require_on_curve(Q, c)
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    p = c.p
    if P.x == Q.x and (P.y + Q.y) % p == 0:
        return INFINITY
    if P == Q:
        lam = (3 * P.x * P.x + c.a) % p * fe_inv(c.fe(2 * P.y)).value % p
    else:
        lam = (Q.y - P.y) % p * fe_inv(c.fe(Q.x - P.x)).value % p
    x3 = (lam * lam - P.x - Q.x) % p
    y3 = (lam * (P.x - x3) - P.y) % p
    return ECPoint(x3, y3)


def point_double(P: ECPoint, c: CurveParams) -> ECPoint:
    return point_add(P, P, c)


def scalar_mult(k: int, P: ECPoint, c: CurveParams) -> ECPoint:
    if k < 0:
        raise ValueError("scalar must be nonnegative")
    _require_on_curve(P, c)
    result = INFINITY
    addend = P
    while k:
        if k & 1:
            result = point_add(result, addend, c)
        addend = point_add(addend, addend, c)
        k >>= 1
    return result


def enumerate_points(c: CurveParams) -> list[ECPoint]:
    """All points of the group, ascending (x, y), infinity last.

    For each x, the y values are exactly the square-root scan of
    x^3 + ax + b. Quadratic in p; desk-scale curves only.
    """
    points = []
    for x in range(c.p):
        rhs = c.fe(x ** 3 + c.a * x + c.b)
        for root in sorted(fe_sqrt_scan(rhs), key=lambda r: r.value):
            points.append(ECPoint(x, root.value))
    points.append(INFINITY)
    return points


@dataclass(frozen=True)
class DomainParams:
    """A curve with a base point G of known exact order."""

    curve: CurveParams
    G: ECPoint
    order_of_G: int

    @property
    def p(self) -> int:
        return self.curve.p


def _order_by_iteration(G: ECPoint, c: CurveParams) -> int:
    n = 1
    P = G
    while not P.is_infinity:
        P = point_add(P, G, c)
        n += 1
    return n


def _prime_factors(n: int) -> list[int]:
    factors = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            factors.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        factors.append(n)
    return factors


def make_domain(c: CurveParams, G: ECPoint, order_of_G: int | None = None) -> DomainParams:
    """Build domain parameters, verifying G's order.

    Without a claimed order, iterate G until infinity (small curves only).
    With one, confirm order*G = O and (order/q)*G != O for every prime
    factor q, which pins the order exactly.
    """
    if G.is_infinity or not is_on_curve(G, c):
        raise InvalidDomain("base point must be an affine point on the curve")
    if order_of_G is None:
        order_of_G = _order_by_iteration(G, c)
    else:
        if order_of_G < 2:
            raise InvalidDomain("order must be at least 2")
        if not scalar_mult(order_of_G, G, c).is_infinity:
            raise InvalidDomain(f"claimed order {order_of_G} does not annihilate G")
        for q in _prime_factors(order_of_G):
            if scalar_mult(order_of_G // q, G, c).is_infinity:
                raise InvalidDomain(f"order of G divides {order_of_G // q}; claimed order is not exact")
    return DomainParams(c, G, order_of_G)


def hasse_interval(p: int) -> tuple[float, float]:
    half = 2 * math.sqrt(p)
    return p + 1 - half, p + 1 + half
