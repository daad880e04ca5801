"""EC-ElGamal: keygen, Koblitz message encoding, encrypt, decrypt.

A message m becomes a curve point by scanning x = m*k_pad + j for
j = 0..k_pad-1 until x^3 + ax + b is a quadratic residue; decoding is
floor(x / k_pad). Ciphertexts are point pairs (k*G, Pm + k*PB).
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .curve import DomainParams, ECPoint, negate, point_add, scalar_mult
from .errors import (
    EncodingFailed,
    MessageOutOfRange,
    NotAMessagePoint,
    ScalarOutOfRange,
)
from .field_arith import fe_sqrt


@dataclass(frozen=True)
class KeyPair:
    private_scalar: int
    public_point: ECPoint


@dataclass(frozen=True)
class Ciphertext:
    c1: ECPoint
    c2: ECPoint


@dataclass(frozen=True)
class EncodingParams:
    """Koblitz padding factor; failure odds per message are ~2^-k_pad."""

    k_pad: int = 20

    def __post_init__(self):
        if self.k_pad < 2:
            raise ValueError("k_pad must be at least 2")

    def max_message(self, p: int) -> int:
        return (p - 1) // self.k_pad - 1


def _check_scalar(scalar: int, d: DomainParams) -> None:
    if not (1 <= scalar < d.order_of_G):
        raise ScalarOutOfRange(f"scalar {scalar} not in [1, {d.order_of_G - 1}]")


def keygen(d: DomainParams, private_scalar: int) -> KeyPair:
    _check_scalar(private_scalar, d)
    return KeyPair(private_scalar, scalar_mult(private_scalar, d.G, d.curve))


def random_keypair(d: DomainParams, rng: random.Random) -> KeyPair:
    return keygen(d, rng.randrange(1, d.order_of_G))


def encode_message(m: int, d: DomainParams, enc: EncodingParams) -> ECPoint:
    """Map m to an affine point with x in [m*k_pad, m*k_pad + k_pad - 1]."""
    p = d.p
    if not (0 <= m <= enc.max_message(p)):
        raise MessageOutOfRange(f"message {m} not in [0, {enc.max_message(p)}]")
    c = d.curve
    for j in range(enc.k_pad):
        x = m * enc.k_pad + j
        root = fe_sqrt(c.fe(x ** 3 + c.a * x + c.b))
        if root is not None:
            return ECPoint(x, root.value)
    raise EncodingFailed(f"no curve point in window for message {m}")


def decode_message(P: ECPoint, enc: EncodingParams) -> int:
    if P.is_infinity:
        raise NotAMessagePoint("the point at infinity encodes no message")
    return P.x // enc.k_pad


def encrypt(Pm: ECPoint, PB: ECPoint, ephemeral_k: int, d: DomainParams) -> Ciphertext:
    _check_scalar(ephemeral_k, d)
    c1 = scalar_mult(ephemeral_k, d.G, d.curve)
    mask = scalar_mult(ephemeral_k, PB, d.curve)
    c2 = point_add(Pm, mask, d.curve)
    return Ciphertext(c1, c2)


def decrypt(kp: KeyPair, c: Ciphertext, d: DomainParams) -> ECPoint:
    mask = scalar_mult(kp.private_scalar, c.c1, d.curve)
    return point_add(c.c2, negate(mask, d.curve), d.curve)
