"""Asymmetric BLS12-381 backend.

Group arithmetic and the optimal ate pairing come from arkworks (via
``py_arkworks_bls12381``); hashing to G1 is the RFC 9380
``BLS12381G1_XMD:SHA-256_SSWU_RO_`` construction from ``py_ecc``.
Encodings are the ZCash compressed format (48-byte G1, 96-byte G2), and
decoding checks curve and subgroup membership.
"""

from __future__ import annotations

import hashlib

from py_arkworks_bls12381 import GT, G1Point, G2Point, Scalar
from py_ecc.bls.hash_to_curve import hash_to_G1
from py_ecc.bls.point_compression import compress_G1

from ..errors import InvalidElement

Q = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001

G1_BYTES = 48
G2_BYTES = 96
SCALAR_BYTES = 32

G1_GENERATOR = G1Point()
G2_GENERATOR = G2Point()
G1_IDENTITY = G1Point.identity()
G2_IDENTITY = G2Point.identity()
GT_ONE = GT.one()


def scalar(k: int) -> Scalar:
    return Scalar(k % Q)


def _canonical(pt, data: bytes):
    # arkworks ignores the payload of infinity encodings
    if bytes(pt.to_compressed_bytes()) != bytes(data):
        raise InvalidElement("non-canonical point encoding")
    return pt


def g1_from_bytes(data: bytes) -> G1Point:
    if len(data) != G1_BYTES:
        raise InvalidElement(f"expected {G1_BYTES} bytes, got {len(data)}")
    try:
        pt = G1Point.from_compressed_bytes(bytes(data))
    except Exception as exc:  # arkworks raises a bare Exception
        raise InvalidElement(f"bad G1 encoding: {exc}") from None
    return _canonical(pt, data)


def g2_from_bytes(data: bytes) -> G2Point:
    if len(data) != G2_BYTES:
        raise InvalidElement(f"expected {G2_BYTES} bytes, got {len(data)}")
    try:
        pt = G2Point.from_compressed_bytes(bytes(data))
    except Exception as exc:
        raise InvalidElement(f"bad G2 encoding: {exc}") from None
    return _canonical(pt, data)


def hash_to_point(tag: bytes, msg: bytes) -> G1Point:
    pt = hash_to_G1(msg, tag, hashlib.sha256)
    return G1Point.from_compressed_bytes(compress_G1(pt).to_bytes(G1_BYTES, "big"))


def gt_pow(a: GT, e: int) -> GT:
    result = GT_ONE
    for bit in bin(e)[2:]:
        result = result * result
        if bit == "1":
            result = result * a
    return result
