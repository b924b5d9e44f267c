"""Bilinear group setting: G1 x G2 -> GT of prime order q.

Two parameter sets are available through :func:`get_suite`:

``128``
    BLS12-381, asymmetric (Type 3).  The default.
``80``
    Type A supersingular curve y^2 = x^3 + x with a 512-bit base field and a
    160-bit group order, symmetric (G1 = G2).  Same sizes as the PBC
    "type A" parameters.

Elements are immutable wrappers that support the usual operators
(``A + B``, ``-A``, ``k * A``, ``e1 * e2``, ``e ** k``).  Scalars are plain
Python ints taken mod q.  Every hash, scalar multiplication, addition and
pairing is reported to the active :class:`~clas_mhcs.opcount.OperationCounter`.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

from py_ecc.bls.hash_to_curve import expand_message_xmd

from ..errors import InvalidElement, UnsupportedParameter
from ..opcount import record

H1_TAG = b"CLAS-H1"
H2_TAG = b"CLAS-H2"

SUPPORTED_LEVELS = (80, 128)
DEFAULT_LEVEL = 128


@dataclass(frozen=True)
class _GroupOps:
    name: str
    size: int  # encoded length in bytes
    add: Callable[[Any, Any], Any]
    neg: Callable[[Any], Any]
    mul: Callable[[Any, int], Any]
    identity: Any
    to_bytes: Callable[[Any], bytes]
    from_bytes: Callable[[bytes], Any]
    eq: Callable[[Any, Any], bool] = lambda a, b: a == b


class _Point:
    __slots__ = ("_ops", "_raw")
    _kind = "?"

    def __init__(self, ops: _GroupOps, raw: Any):
        self._ops = ops
        self._raw = raw

    def _check(self, other) -> None:
        if type(other) is not type(self) or other._ops is not self._ops:
            raise TypeError(f"cannot combine {self!r} with {other!r}")

    def __add__(self, other):
        self._check(other)
        record("A")
        return type(self)(self._ops, self._ops.add(self._raw, other._raw))

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return type(self)(self._ops, self._ops.neg(self._raw))

    def __mul__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        record("S")
        return type(self)(self._ops, self._ops.mul(self._raw, k))

    __rmul__ = __mul__

    def __eq__(self, other):
        if type(other) is not type(self) or other._ops is not self._ops:
            return NotImplemented
        return self._ops.eq(self._raw, other._raw)

    def __hash__(self):
        return hash((self._kind, self.to_bytes()))

    def is_identity(self) -> bool:
        return self._ops.eq(self._raw, self._ops.identity)

    def to_bytes(self) -> bytes:
        return self._ops.to_bytes(self._raw)

    def hex(self) -> str:
        return self.to_bytes().hex()

    def __repr__(self):
        return f"{self._kind}({self.hex()[:16]}...)"


class G1Element(_Point):
    __slots__ = ()
    _kind = "G1"


class G2Element(_Point):
    __slots__ = ()
    _kind = "G2"


class GTElement:
    """Element of the multiplicative target group."""

    __slots__ = ("_suite", "_raw")

    def __init__(self, suite: "BilinearSuite", raw: Any):
        self._suite = suite
        self._raw = raw

    def __mul__(self, other: "GTElement") -> "GTElement":
        if not isinstance(other, GTElement):
            return NotImplemented
        return GTElement(self._suite, self._suite._backend.gt_mul(self._raw, other._raw))

    def __pow__(self, k: int) -> "GTElement":
        return GTElement(self._suite, self._suite._backend.gt_pow(self._raw, k % self._suite.order_q))

    def __eq__(self, other):
        if not isinstance(other, GTElement):
            return NotImplemented
        return self._raw == other._raw

    def __hash__(self):
        return hash(self.to_bytes())

    def is_one(self) -> bool:
        return self._raw == self._suite._backend.gt_one

    def to_bytes(self) -> bytes:
        return self._suite._backend.gt_to_bytes(self._raw)

    def __repr__(self):
        return f"GT<{self._suite.name}>"


@dataclass(frozen=True, eq=False)
class BilinearSuite:
    """Group context: generators, order, pairing and the two hash functions.

    ``gen_g1`` and ``gen_g2`` are the left and right pairing-slot generators;
    in symmetric mode they wrap the same curve point.
    """

    name: str
    security_level: int
    mode: str
    order_q: int
    scalar_bytes: int
    _backend: Any = field(repr=False)
    _g1: _GroupOps = field(repr=False)
    _g2: _GroupOps = field(repr=False)

    @property
    def gen_g1(self) -> G1Element:
        return G1Element(self._g1, self._backend.g1_gen)

    @property
    def gen_g2(self) -> G2Element:
        return G2Element(self._g2, self._backend.g2_gen)

    @property
    def g1_bytes(self) -> int:
        return self._g1.size

    @property
    def g2_bytes(self) -> int:
        return self._g2.size

    def g1_identity(self) -> G1Element:
        return G1Element(self._g1, self._g1.identity)

    def g2_identity(self) -> G2Element:
        return G2Element(self._g2, self._g2.identity)

    def gt_one(self) -> GTElement:
        return GTElement(self, self._backend.gt_one)

    # instrumented arithmetic, spelled out for callers that prefer functions
    def g1_add(self, a: G1Element, b: G1Element) -> G1Element:
        return a + b

    def g1_mul(self, k: int, a: G1Element) -> G1Element:
        return k * a

    def g2_mul(self, k: int, a: G2Element) -> G2Element:
        return k * a

    def pairing(self, a: G1Element, b: G2Element) -> GTElement:
        if not isinstance(a, G1Element) or a._ops is not self._g1:
            raise InvalidElement(f"left pairing argument must be a G1 element of {self.name}")
        if not isinstance(b, G2Element) or b._ops is not self._g2:
            raise InvalidElement(f"right pairing argument must be a G2 element of {self.name}")
        record("P")
        return GTElement(self, self._backend.pairing(a._raw, b._raw))

    def hash_to_g1(self, tag: bytes, msg: bytes) -> G1Element:
        record("H")
        return G1Element(self._g1, self._backend.hash_to_point(tag, msg))

    def hash_to_scalar(self, tag: bytes, msg: bytes) -> int:
        """Hash into [1, q); a zero result is re-hashed with a one-byte counter."""
        record("H")
        width = (self.order_q.bit_length() + 128 + 7) // 8
        data = msg
        for ctr in range(256):
            h = int.from_bytes(expand_message_xmd(data, tag, width, hashlib.sha256), "big") % self.order_q
            if h:
                return h
            data = msg + bytes([ctr])
        raise RuntimeError("hash_to_scalar exhausted its counter")

    def random_scalar(self, rng=None) -> int:
        rng = rng or secrets.SystemRandom()
        return rng.randrange(1, self.order_q)

    # encodings
    def g1_from_bytes(self, data: bytes) -> G1Element:
        return G1Element(self._g1, self._g1.from_bytes(bytes(data)))

    def g2_from_bytes(self, data: bytes) -> G2Element:
        return G2Element(self._g2, self._g2.from_bytes(bytes(data)))

    def gt_from_bytes(self, data: bytes) -> GTElement:
        return GTElement(self, self._backend.gt_from_bytes(bytes(data)))

    def scalar_to_bytes(self, k: int) -> bytes:
        if not 0 <= k < self.order_q:
            raise ValueError("scalar out of range")
        return k.to_bytes(self.scalar_bytes, "big")

    def scalar_from_bytes(self, data: bytes, nonzero: bool = False) -> int:
        if len(data) != self.scalar_bytes:
            raise InvalidElement(f"expected {self.scalar_bytes}-byte scalar, got {len(data)}")
        k = int.from_bytes(data, "big")
        if k >= self.order_q or (nonzero and k == 0):
            raise InvalidElement("scalar out of range")
        return k


class _Bls12381:
    def __init__(self):
        from . import bls12_381 as b

        self.order = b.Q
        self.g1_gen = b.G1_GENERATOR
        self.g2_gen = b.G2_GENERATOR
        self.gt_one = b.GT_ONE
        self.g1 = _GroupOps(
            "G1", b.G1_BYTES,
            add=lambda x, y: x + y, neg=lambda x: -x,
            mul=lambda x, k: x * b.scalar(k), identity=b.G1_IDENTITY,
            to_bytes=lambda x: bytes(x.to_compressed_bytes()), from_bytes=b.g1_from_bytes,
        )
        self.g2 = _GroupOps(
            "G2", b.G2_BYTES,
            add=lambda x, y: x + y, neg=lambda x: -x,
            mul=lambda x, k: x * b.scalar(k), identity=b.G2_IDENTITY,
            to_bytes=lambda x: bytes(x.to_compressed_bytes()), from_bytes=b.g2_from_bytes,
        )
        self.scalar_bytes = b.SCALAR_BYTES
        self.pairing = b.GT.pairing
        self.gt_mul = lambda x, y: x * y
        self.gt_pow = b.gt_pow
        self.hash_to_point = b.hash_to_point

    def gt_to_bytes(self, x):
        raise NotImplementedError("the BLS12-381 backend has no GT encoding")

    def gt_from_bytes(self, data):
        raise NotImplementedError("the BLS12-381 backend has no GT encoding")


class _TypeA:
    def __init__(self):
        from . import type_a as t

        self.order = t.Q
        self.g1_gen = self.g2_gen = t.GENERATOR
        self.gt_one = t.GT_ONE
        ops = _GroupOps(
            "G", t.POINT_BYTES,
            add=t.add, neg=t.neg, mul=lambda x, k: t.mul(x, k % t.Q), identity=None,
            to_bytes=t.point_to_bytes, from_bytes=t.point_from_bytes,
        )
        self.g1 = ops
        # G2 gets its own ops object so G1/G2 elements stay distinct types
        self.g2 = _GroupOps(**{**ops.__dict__, "name": "G2"})
        self.scalar_bytes = t.SCALAR_BYTES
        self.pairing = t.pairing
        self.gt_mul = t.fp2_mul
        self.gt_pow = t.fp2_pow
        self.hash_to_point = t.hash_to_point
        self.gt_to_bytes = t.gt_to_bytes
        self.gt_from_bytes = t.gt_from_bytes


def get_suite(security_level: int = DEFAULT_LEVEL) -> BilinearSuite:
    """Return the shared suite for ``security_level`` (80 or 128)."""
    return _build_suite(int(security_level))


@lru_cache(maxsize=None)
def _build_suite(security_level: int) -> BilinearSuite:
    if security_level == 128:
        be, name, mode = _Bls12381(), "bls12-381", "asymmetric"
    elif security_level == 80:
        be, name, mode = _TypeA(), "type-a-512", "symmetric"
    else:
        raise UnsupportedParameter(
            f"unsupported security level {security_level!r}; choose one of {SUPPORTED_LEVELS}"
        )
    return BilinearSuite(
        name=name, security_level=security_level, mode=mode, order_q=be.order,
        scalar_bytes=be.scalar_bytes, _backend=be, _g1=be.g1, _g2=be.g2,
    )


__all__ = [
    "BilinearSuite", "G1Element", "G2Element", "GTElement", "H1_TAG", "H2_TAG",
    "SUPPORTED_LEVELS", "DEFAULT_LEVEL", "get_suite",
]
