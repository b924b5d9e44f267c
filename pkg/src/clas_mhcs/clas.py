"""Certificateless aggregate signatures.

A signer holds two key halves: a self-chosen secret ``s1`` (public
``Q1 = s1*P``) and a partial key ``S2 = s*Q2`` issued by the key generation
centre for ``Q2 = H1(id, Q1)``.  Signing a message m with fresh k::

    V = k*Q1
    h = H2(m, V)
    U = S2 + (k*h*s1 mod q) * Q_kgc

and verification checks ``e(U, P) = e(Q2 + h*V, Q_kgc)``.  Signatures from
many signers aggregate as ``U = sum U_i``, ``V = sum h_i*V_i``,
``Q2 = sum Q2_i`` and the aggregate is checked with the same two-pairing
equation ``e(U, P) = e(Q2 + V, Q_kgc)`` regardless of the batch size.

In the asymmetric setting the authority public key is published in both
groups: the G1 copy is folded into U, the G2 copy sits in the right pairing
slot.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import DuplicateIdentity, EmptyInput, IncompleteKeys, InvalidElement
from .group import H1_TAG, H2_TAG, BilinearSuite, G1Element, G2Element, get_suite


@dataclass(frozen=True)
class AuthorityKeyPair:
    sk: int
    pk_g1: G1Element
    pk_g2: G2Element = field(repr=False)

    @classmethod
    def generate(cls, suite: BilinearSuite, rng=None) -> "AuthorityKeyPair":
        sk = suite.random_scalar(rng)
        return cls(sk, sk * suite.gen_g1, sk * suite.gen_g2)

    def public(self) -> tuple[G1Element, G2Element]:
        return self.pk_g1, self.pk_g2


def h1(suite: BilinearSuite, identity: bytes, q1: G1Element) -> G1Element:
    return suite.hash_to_g1(H1_TAG, identity + q1.to_bytes())


def h2(suite: BilinearSuite, message: bytes, v: G1Element) -> int:
    return suite.hash_to_scalar(H2_TAG, message + v.to_bytes())


class KeyGenerationCenter:
    """Authority issuing partial private keys; each identity is served once."""

    def __init__(self, suite: BilinearSuite, keys: AuthorityKeyPair, issued: Iterable[bytes] = ()):
        self.suite = suite
        self.keys = keys
        self._issued = set(issued)
        self._lock = threading.Lock()

    @property
    def issued(self) -> frozenset[bytes]:
        return frozenset(self._issued)

    def set_partial_key(self, identity: bytes, q1: G1Element) -> tuple[G1Element, G1Element]:
        """Return ``(Q2, S2)`` for ``identity``; raise DuplicateIdentity on reuse."""
        with self._lock:
            if identity in self._issued:
                raise DuplicateIdentity(f"identity {identity!r} already issued")
            self._issued.add(identity)
        q2 = h1(self.suite, identity, q1)
        return q2, self.keys.sk * q2


def setup(security_level: int = 128, rng=None) -> tuple[BilinearSuite, AuthorityKeyPair]:
    suite = get_suite(security_level)
    return suite, AuthorityKeyPair.generate(suite, rng)


@dataclass(frozen=True)
class ParticipantKeys:
    id: bytes
    s1: int = field(repr=False)
    Q1: G1Element
    Q2: G1Element | None = None
    S2: G1Element | None = field(default=None, repr=False)

    @classmethod
    def create(cls, suite: BilinearSuite, identity: bytes, rng=None) -> "ParticipantKeys":
        s1 = suite.random_scalar(rng)
        return cls(identity, s1, s1 * suite.gen_g1)

    @property
    def complete(self) -> bool:
        return self.Q2 is not None and self.S2 is not None

    def with_partial_key(
        self, suite: BilinearSuite, q2: G1Element, s2: G1Element, authority_pk_g2: G2Element
    ) -> "ParticipantKeys":
        """Attach an issued partial key after checking e(S2, P) = e(Q2, Q_kgc)."""
        if suite.pairing(s2, suite.gen_g2) != suite.pairing(q2, authority_pk_g2):
            raise InvalidElement("partial key does not match the authority public key")
        return replace(self, Q2=q2, S2=s2)


@dataclass(frozen=True)
class ClasSignature:
    V: G1Element
    U: G1Element

    def __post_init__(self):
        if self.V.is_identity() or self.U.is_identity():
            raise InvalidElement("signature component is the identity element")

    def to_bytes(self) -> bytes:
        return self.V.to_bytes() + self.U.to_bytes()

    @classmethod
    def from_bytes(cls, suite: BilinearSuite, data: bytes) -> "ClasSignature":
        n = suite.g1_bytes
        if len(data) != 2 * n:
            raise InvalidElement(f"signature must be {2 * n} bytes")
        return cls(suite.g1_from_bytes(data[:n]), suite.g1_from_bytes(data[n:]))


@dataclass(frozen=True)
class AggregateSignature:
    U: G1Element
    V: G1Element
    Q2_sum: G1Element
    n: int = 0


def sign(
    suite: BilinearSuite, keys: ParticipantKeys, authority_pk_g1: G1Element, m: bytes, rng=None
) -> ClasSignature:
    if not keys.complete:
        raise IncompleteKeys(f"participant {keys.id!r} has no partial key")
    rng = rng or secrets.SystemRandom()
    k = suite.random_scalar(rng)
    v = k * keys.Q1
    h = h2(suite, m, v)
    # k*h*s1 folded in Z_q so U costs a single scalar multiplication
    u = keys.S2 + (k * h * keys.s1 % suite.order_q) * authority_pk_g1
    return ClasSignature(v, u)


def verify(
    suite: BilinearSuite,
    identity: bytes,
    q1: G1Element,
    authority_pk_g2: G2Element,
    m: bytes,
    sig: ClasSignature,
) -> bool:
    q2 = h1(suite, identity, q1)
    h = h2(suite, m, sig.V)
    return suite.pairing(sig.U, suite.gen_g2) == suite.pairing(q2 + h * sig.V, authority_pk_g2)


AggregateItem = tuple[bytes, G1Element, bytes, ClasSignature]


def aggregate(suite: BilinearSuite, items: Sequence[AggregateItem]) -> AggregateSignature:
    """Fold ``(id, Q1, m, sig)`` tuples into one aggregate signature."""
    if not items:
        raise EmptyInput("cannot aggregate an empty list of signatures")
    u = v = q2 = None
    for identity, q1, m, sig in items:
        hv = h2(suite, m, sig.V) * sig.V
        q2_i = h1(suite, identity, q1)
        if u is None:
            u, v, q2 = sig.U, hv, q2_i
        else:
            u, v, q2 = u + sig.U, v + hv, q2 + q2_i
    return AggregateSignature(u, v, q2, len(items))


def recompute_q2_sum(suite: BilinearSuite, signers: Iterable[tuple[bytes, G1Element]]) -> G1Element:
    """Sum of H1(id, Q1) over the signer list, for verifiers that distrust ``Q2_sum``."""
    total = suite.g1_identity()
    for identity, q1 in signers:
        total = total + h1(suite, identity, q1)
    return total


def aggregate_verify(suite: BilinearSuite, authority_pk_g2: G2Element, agg: AggregateSignature) -> bool:
    return suite.pairing(agg.U, suite.gen_g2) == suite.pairing(agg.Q2_sum + agg.V, authority_pk_g2)
