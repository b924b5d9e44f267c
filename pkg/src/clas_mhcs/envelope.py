"""Public-key sealed boxes over G1 (DH-KEM + AES-256-GCM).

seal: pick r, R = r*P, key = HKDF-SHA256(ser(r*Q) || ser(R) || "MHCS-ENV"),
encrypt with AES-GCM under a zero nonce (every key is used exactly once).
The wire form is ``ser(R) || tag || ciphertext``.

Any decoding problem, wrong key or modified byte surfaces as
:class:`~clas_mhcs.errors.EnvelopeError`.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .errors import EnvelopeError, InvalidElement
from .group import BilinearSuite, G1Element
from .opcount import envelope_ops, record

KDF_LABEL = b"MHCS-ENV"
TAG_BYTES = 16
_NONCE = bytes(12)


@dataclass(frozen=True)
class SealedBox:
    ephemeral_pub: G1Element
    ciphertext: bytes
    auth_tag: bytes

    def to_bytes(self) -> bytes:
        return self.ephemeral_pub.to_bytes() + self.auth_tag + self.ciphertext

    @classmethod
    def from_bytes(cls, suite: BilinearSuite, data: bytes) -> "SealedBox":
        n = suite.g1_bytes
        if len(data) < n + TAG_BYTES:
            raise EnvelopeError("sealed box truncated")
        try:
            eph = suite.g1_from_bytes(data[:n])
        except InvalidElement:
            raise EnvelopeError("sealed box authentication failed") from None
        return cls(eph, bytes(data[n + TAG_BYTES:]), bytes(data[n : n + TAG_BYTES]))


def _key(shared: G1Element, eph: G1Element) -> bytes:
    hkdf = HKDF(algorithm=hashes.SHA256(), length=32, salt=None, info=KDF_LABEL)
    return hkdf.derive(shared.to_bytes() + eph.to_bytes() + KDF_LABEL)


def seal(suite: BilinearSuite, recipient_pub: G1Element, plaintext: bytes, rng=None) -> SealedBox:
    with envelope_ops():
        r = suite.random_scalar(rng or secrets.SystemRandom())
        eph = r * suite.gen_g1
        key = _key(r * recipient_pub, eph)
        record("E")
        ct = AESGCM(key).encrypt(_NONCE, plaintext, None)
    return SealedBox(eph, ct[:-TAG_BYTES], ct[-TAG_BYTES:])


def open_box(suite: BilinearSuite, recipient_sk: int, box: SealedBox | bytes) -> bytes:
    if isinstance(box, (bytes, bytearray)):
        box = SealedBox.from_bytes(suite, box)
    if box.ephemeral_pub.is_identity():
        raise EnvelopeError("sealed box authentication failed")
    with envelope_ops():
        key = _key(recipient_sk * box.ephemeral_pub, box.ephemeral_pub)
        record("E")
        try:
            return AESGCM(key).decrypt(_NONCE, box.ciphertext + box.auth_tag, None)
        except InvalidTag:
            raise EnvelopeError("sealed box authentication failed") from None


open = open_box  # noqa: A001 - mirrors seal/open naming
