"""Anonymous batch verification for mobile healthcare crowd sensing.

Roles:

* :class:`ManagementServer` (MS) issues partial keys and blinds each
  participant's ``Q2`` into a pseudonymous pair ``index_s = a*S2``,
  ``index_v = a*Q2``.  Only the MS ledger maps ``index_v`` back to an id.
* :class:`Participant` signs health data with ``index_s`` in place of
  ``S2`` and seals ``index_v || h || t`` to the data center.
* :class:`DataCenter` (DC) opens each submission, folds it into the
  current :class:`TimeSlot` and checks the whole slot with two pairings::

      e(sum U_i, P) = e(sum index_v_i + sum h_i*V_i, Q_MS)

Submissions travel as JSON objects ``{"u", "v", "m", "sn_enc"}`` (hex for
points, base64 for bytes), one per line in batch files.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from . import envelope
from .clas import AuthorityKeyPair, KeyGenerationCenter
from .errors import (
    DuplicateIdentity,
    EmptySlot,
    EnvelopeError,
    IncompleteKeys,
    InvalidElement,
    SubmissionRejected,
    UnknownIndex,
)
from .group import H2_TAG, BilinearSuite, G1Element, G2Element, get_suite

TIME_BYTES = 8

REASON_DECRYPT = "decrypt-failure"
REASON_HASH = "hash-mismatch"
REASON_STALE = "stale-timestamp"
REASON_ELEMENT = "invalid-element"
REASON_SLOT_CLOSED = "slot-closed"
REASON_BATCH = "batch-equation"


def encode_time(t: int) -> bytes:
    if not 0 <= t < 1 << 64:
        raise ValueError(f"timestamp {t} does not fit in 64 unsigned bits")
    return t.to_bytes(TIME_BYTES, "big")


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(text: str) -> bytes:
    return base64.b64decode(text.encode("ascii"), validate=True)


def h2_timed(suite: BilinearSuite, m: bytes, t: int, v: G1Element) -> int:
    """H2(m || t, V) with t as 8 big-endian bytes."""
    return suite.hash_to_scalar(H2_TAG, m + encode_time(t) + v.to_bytes())


def sn_layout(suite: BilinearSuite) -> tuple[int, int, int]:
    """Byte widths of the sealed ``index_v || h || t`` plaintext."""
    return suite.g1_bytes, suite.scalar_bytes, TIME_BYTES


def pack_serial(suite: BilinearSuite, index_v: G1Element, h: int, t: int) -> bytes:
    return index_v.to_bytes() + suite.scalar_to_bytes(h) + encode_time(t)


def unpack_serial(suite: BilinearSuite, data: bytes) -> tuple[G1Element, int, int]:
    a, b, c = sn_layout(suite)
    if len(data) != a + b + c:
        raise InvalidElement(f"serial plaintext must be {a + b + c} bytes, got {len(data)}")
    index_v = suite.g1_from_bytes(data[:a])
    h = suite.scalar_from_bytes(data[a : a + b], nonzero=True)
    t = int.from_bytes(data[a + b :], "big")
    return index_v, h, t


# -- management server ----------------------------------------------------------


@dataclass(frozen=True)
class RegistrationRecord:
    """MS-side serial number sn = <id, Q1, Q2, index_s, index_v> plus the blinding a."""

    id: bytes
    Q1: G1Element
    Q2: G1Element
    index_s: G1Element
    index_v: G1Element
    a: int = field(repr=False)

    def to_json(self, suite: BilinearSuite) -> dict:
        return {
            "id": _b64(self.id),
            "q1": self.Q1.hex(),
            "q2": self.Q2.hex(),
            "index_s": self.index_s.hex(),
            "index_v": self.index_v.hex(),
            "a": suite.scalar_to_bytes(self.a).hex(),
        }

    @classmethod
    def from_json(cls, suite: BilinearSuite, obj: dict) -> "RegistrationRecord":
        g = suite.g1_from_bytes
        return cls(
            id=_unb64(obj["id"]),
            Q1=g(bytes.fromhex(obj["q1"])),
            Q2=g(bytes.fromhex(obj["q2"])),
            index_s=g(bytes.fromhex(obj["index_s"])),
            index_v=g(bytes.fromhex(obj["index_v"])),
            a=suite.scalar_from_bytes(bytes.fromhex(obj["a"]), nonzero=True),
        )


@dataclass(frozen=True)
class RegistrationGrant:
    """What the participant receives over the secure channel."""

    S2: G1Element
    SN: G1Element  # = index_v
    index_s: G1Element


class ManagementServer:
    """Registrar and tracer.

    ``ledger_path`` (optional) is an append-only JSONL file of
    :class:`RegistrationRecord` entries.  It contains the blinding scalars
    and must be kept private.
    """

    def __init__(self, suite: BilinearSuite, keys: AuthorityKeyPair, ledger_path: str | os.PathLike | None = None):
        self.suite = suite
        self.keys = keys
        self.ledger_path = Path(ledger_path) if ledger_path is not None else None
        self._by_id: dict[bytes, RegistrationRecord] = {}
        self._by_index: dict[bytes, bytes] = {}
        self._lock = threading.Lock()
        if self.ledger_path is not None and self.ledger_path.exists():
            for line in self.ledger_path.read_text().splitlines():
                if line.strip():
                    self._remember(RegistrationRecord.from_json(suite, json.loads(line)))
        self._kgc = KeyGenerationCenter(suite, keys, issued=self._by_id)

    def _remember(self, rec: RegistrationRecord) -> None:
        self._by_id[rec.id] = rec
        self._by_index[rec.index_v.to_bytes()] = rec.id

    @property
    def public_g1(self) -> G1Element:
        return self.keys.pk_g1

    @property
    def public_g2(self) -> G2Element:
        return self.keys.pk_g2

    def records(self) -> list[RegistrationRecord]:
        return list(self._by_id.values())

    def register(self, identity: bytes, q1: G1Element, rng=None) -> tuple[RegistrationGrant, RegistrationRecord]:
        rng = rng or secrets.SystemRandom()
        with self._lock:
            if identity in self._by_id:
                raise DuplicateIdentity(f"identity {identity!r} already registered")
            q2, s2 = self._kgc.set_partial_key(identity, q1)
            while True:
                a = self.suite.random_scalar(rng)
                index_v = a * q2
                if index_v.to_bytes() not in self._by_index:
                    break
            rec = RegistrationRecord(identity, q1, q2, a * s2, index_v, a)
            self._remember(rec)
            if self.ledger_path is not None:
                with self.ledger_path.open("a") as fh:
                    fh.write(json.dumps(rec.to_json(self.suite), sort_keys=True) + "\n")
        return RegistrationGrant(s2, index_v, rec.index_s), rec

    def trace(self, index_v: G1Element) -> bytes:
        """Recover the registered id behind a pseudonymous ``index_v``."""
        try:
            return self._by_index[index_v.to_bytes()]
        except KeyError:
            raise UnknownIndex("index_v is not in the registration ledger") from None

    def record_for(self, identity: bytes) -> RegistrationRecord:
        return self._by_id[identity]


def ms_init(security_level: int = 128, rng=None) -> tuple[BilinearSuite, AuthorityKeyPair, AuthorityKeyPair]:
    """Suite plus the MS and DC long-term key pairs."""
    suite = get_suite(security_level)
    return suite, AuthorityKeyPair.generate(suite, rng), AuthorityKeyPair.generate(suite, rng)


def register(ms: ManagementServer, identity: bytes, q1: G1Element, rng=None):
    return ms.register(identity, q1, rng)


def ms_trace(ms: ManagementServer, index_v: G1Element) -> bytes:
    return ms.trace(index_v)


# -- participant ----------------------------------------------------------------


@dataclass(frozen=True)
class Participant:
    id: bytes
    s1: int = field(repr=False)
    Q1: G1Element
    index_s: G1Element | None = field(default=None, repr=False)
    SN: G1Element | None = None
    S2: G1Element | None = field(default=None, repr=False)

    @classmethod
    def enroll(cls, suite: BilinearSuite, ms: ManagementServer, identity: bytes, rng=None) -> "Participant":
        """Pick the self-chosen half key, register with the MS and check the grant."""
        s1 = suite.random_scalar(rng)
        q1 = s1 * suite.gen_g1
        grant, _ = ms.register(identity, q1, rng)
        p = cls(identity, s1, q1, grant.index_s, grant.SN, grant.S2)
        if suite.pairing(grant.index_s, suite.gen_g2) != suite.pairing(grant.SN, ms.public_g2):
            raise InvalidElement("registration grant does not match the MS public key")
        return p

    def to_json(self, suite: BilinearSuite) -> dict:
        return {
            "id": _b64(self.id),
            "s1": suite.scalar_to_bytes(self.s1).hex(),
            "q1": self.Q1.hex(),
            "index_s": self.index_s.hex() if self.index_s is not None else None,
            "sn": self.SN.hex() if self.SN is not None else None,
            "s2": self.S2.hex() if self.S2 is not None else None,
        }

    @classmethod
    def from_json(cls, suite: BilinearSuite, obj: dict) -> "Participant":
        def opt(key):
            return suite.g1_from_bytes(bytes.fromhex(obj[key])) if obj.get(key) else None

        return cls(
            _unb64(obj["id"]),
            suite.scalar_from_bytes(bytes.fromhex(obj["s1"]), nonzero=True),
            suite.g1_from_bytes(bytes.fromhex(obj["q1"])),
            opt("index_s"),
            opt("sn"),
            opt("s2"),
        )


@dataclass(frozen=True)
class Submission:
    U: G1Element
    V: G1Element
    m: bytes
    sn_enc: bytes

    def to_json(self) -> dict:
        return {"u": self.U.hex(), "v": self.V.hex(), "m": _b64(self.m), "sn_enc": _b64(self.sn_enc)}

    @classmethod
    def from_json(cls, suite: BilinearSuite, obj: dict) -> "Submission":
        try:
            u = suite.g1_from_bytes(bytes.fromhex(obj["u"]))
            v = suite.g1_from_bytes(bytes.fromhex(obj["v"]))
            return cls(u, v, _unb64(obj["m"]), _unb64(obj["sn_enc"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidElement(f"malformed submission: {exc}") from None

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True).encode()

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()[:16]


def mhcs_sign(
    suite: BilinearSuite,
    participant: Participant,
    ms_pk_g1: G1Element,
    dc_pub: G1Element,
    m: bytes,
    t: int,
    rng=None,
) -> Submission:
    if participant.index_s is None or participant.SN is None:
        raise IncompleteKeys(f"participant {participant.id!r} is not registered")
    rng = rng or secrets.SystemRandom()
    k = suite.random_scalar(rng)
    v = k * participant.Q1
    h = h2_timed(suite, m, t, v)
    u = participant.index_s + (k * h * participant.s1 % suite.order_q) * ms_pk_g1
    box = envelope.seal(suite, dc_pub, pack_serial(suite, participant.SN, h, t), rng)
    return Submission(u, v, m, box.to_bytes())


# -- data center ----------------------------------------------------------------


@dataclass(frozen=True)
class OpenedSubmission:
    submission: Submission
    SN: G1Element
    h: int
    t: int
    hV: G1Element = field(repr=False)
    arrival: int = 0

    def to_json(self, suite: BilinearSuite) -> dict:
        return {
            "submission": self.submission.to_json(),
            "sn": self.SN.hex(),
            "h": suite.scalar_to_bytes(self.h).hex(),
            "t": self.t,
            "arrival": self.arrival,
        }

    @classmethod
    def from_json(cls, suite: BilinearSuite, obj: dict) -> "OpenedSubmission":
        sub = Submission.from_json(suite, obj["submission"])
        h = suite.scalar_from_bytes(bytes.fromhex(obj["h"]), nonzero=True)
        return cls(sub, suite.g1_from_bytes(bytes.fromhex(obj["sn"])), h, int(obj["t"]), h * sub.V, int(obj["arrival"]))


@dataclass(frozen=True)
class Rejection:
    arrival: int
    digest: str
    reason: str
    detail: str = ""

    def to_json(self) -> dict:
        return {"arrival": self.arrival, "digest": self.digest, "reason": self.reason, "detail": self.detail}


@dataclass
class TimeSlot:
    """Collection window [start, end) with running aggregate sums."""

    suite: BilinearSuite
    slot_id: int
    start: int
    end: int
    accepted: list[OpenedSubmission] = field(default_factory=list)
    rejected: list[Rejection] = field(default_factory=list)
    U: G1Element | None = None
    V: G1Element | None = None
    index_v: G1Element | None = None
    closed: bool = False
    arrivals: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError("slot must satisfy start < end")
        zero = self.suite.g1_identity()
        self.U = self.U if self.U is not None else zero
        self.V = self.V if self.V is not None else zero
        self.index_v = self.index_v if self.index_v is not None else zero

    @property
    def n(self) -> int:
        return len(self.accepted)

    def contains(self, t: int) -> bool:
        return self.start <= t < self.end

    def _next_arrival(self) -> int:
        with self._lock:
            self.arrivals += 1
            return self.arrivals - 1

    def _fold(self, opened: OpenedSubmission) -> None:
        with self._lock:
            self.accepted.append(opened)
            self.U = self.U + opened.submission.U
            self.V = self.V + opened.hV
            self.index_v = self.index_v + opened.SN

    def recompute(self) -> tuple[G1Element, G1Element, G1Element]:
        """Sums rebuilt from the accepted list; equals the running sums."""
        zero = self.suite.g1_identity()
        u, v, iv = zero, zero, zero
        for o in self.accepted:
            u, v, iv = u + o.submission.U, v + o.h * o.submission.V, iv + o.SN
        return u, v, iv

    def to_json(self) -> dict:
        return {
            "slot_id": self.slot_id,
            "start": self.start,
            "end": self.end,
            "closed": self.closed,
            "arrivals": self.arrivals,
            "accepted": [o.to_json(self.suite) for o in self.accepted],
            "rejected": [r.to_json() for r in self.rejected],
            "aggregate": {"u": self.U.hex(), "v": self.V.hex(), "index_v": self.index_v.hex()},
        }

    @classmethod
    def from_json(cls, suite: BilinearSuite, obj: dict) -> "TimeSlot":
        slot = cls(suite, int(obj["slot_id"]), int(obj["start"]), int(obj["end"]))
        for o in obj.get("accepted", []):
            slot._fold(OpenedSubmission.from_json(suite, o))
        slot.rejected = [Rejection(**r) for r in obj.get("rejected", [])]
        slot.arrivals = int(obj.get("arrivals", len(slot.accepted) + len(slot.rejected)))
        slot.closed = bool(obj.get("closed", False))
        return slot


def _reject(slot: TimeSlot, sub: Submission, arrival: int, reason: str, detail: str = "") -> SubmissionRejected:
    with slot._lock:
        slot.rejected.append(Rejection(arrival, sub.digest(), reason, detail))
    return SubmissionRejected(reason, detail)


def dc_open(suite: BilinearSuite, dc_sk: int, sub: Submission, slot: TimeSlot) -> OpenedSubmission:
    """Admit ``sub`` into ``slot`` or raise :class:`SubmissionRejected`.

    Checks, in order: envelope authenticity and layout, timestamp inside the
    slot window, and ``H2(m || t, V)`` equal to the sealed ``h``.  Every
    rejection is also logged on the slot.
    """
    arrival = slot._next_arrival()
    if slot.closed:
        raise _reject(slot, sub, arrival, REASON_SLOT_CLOSED)
    try:
        plain = envelope.open_box(suite, dc_sk, sub.sn_enc)
        sn, h, t = unpack_serial(suite, plain)
    except (EnvelopeError, InvalidElement) as exc:
        raise _reject(slot, sub, arrival, REASON_DECRYPT, str(exc)) from None
    if sn.is_identity():
        raise _reject(slot, sub, arrival, REASON_DECRYPT, "identity serial number")
    if not slot.contains(t):
        raise _reject(slot, sub, arrival, REASON_STALE, f"t={t} outside [{slot.start}, {slot.end})")
    if sub.U.is_identity() or sub.V.is_identity():
        raise _reject(slot, sub, arrival, REASON_ELEMENT, "identity signature component")
    if h2_timed(suite, sub.m, t, sub.V) != h:
        raise _reject(slot, sub, arrival, REASON_HASH)
    opened = OpenedSubmission(sub, sn, h, t, h * sub.V, arrival)
    slot._fold(opened)
    return opened


def verify_single(
    suite: BilinearSuite, opened: OpenedSubmission, ms_pk_g2: G2Element, recompute_hash: bool = False
) -> bool:
    """e(U, P) = e(index_v + h*V, Q_MS) for one opened submission.

    With ``recompute_hash`` the scalar h is re-derived from (m, t, V) instead of
    taking the transported value.
    """
    sub = opened.submission
    h = h2_timed(suite, sub.m, opened.t, sub.V) if recompute_hash else opened.h
    return suite.pairing(sub.U, suite.gen_g2) == suite.pairing(opened.SN + h * sub.V, ms_pk_g2)


@dataclass(frozen=True)
class BatchReport:
    slot_id: int
    n: int
    verified: bool
    aggregate: dict
    rejected: list[Rejection]
    offending: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """Batch equation holds and nothing was turned away at admission."""
        return self.verified and not self.rejected

    def to_json(self) -> dict:
        return {
            "slot_id": self.slot_id,
            "n": self.n,
            "verified": self.verified,
            "aggregate": self.aggregate,
            "rejected": [r.to_json() for r in self.rejected],
            "offending": self.offending,
        }


def _subset_holds(suite: BilinearSuite, items: list[OpenedSubmission], ms_pk_g2: G2Element) -> bool:
    u = items[0].submission.U
    w = items[0].SN + items[0].hV
    for o in items[1:]:
        u = u + o.submission.U
        w = w + o.SN + o.hV
    return suite.pairing(u, suite.gen_g2) == suite.pairing(w, ms_pk_g2)


def localize_failures(
    suite: BilinearSuite, items: list[OpenedSubmission], ms_pk_g2: G2Element
) -> list[OpenedSubmission]:
    """Bisect a failing batch down to the submissions that break the equation."""
    if len(items) == 1:
        return list(items)
    mid = len(items) // 2
    bad = []
    for half in (items[:mid], items[mid:]):
        if not _subset_holds(suite, half, ms_pk_g2):
            bad.extend(localize_failures(suite, half, ms_pk_g2))
    return bad


def close_slot_and_batch_verify(
    suite: BilinearSuite, slot: TimeSlot, ms_pk_g2: G2Element, localize: bool = True
) -> BatchReport:
    if slot.n == 0:
        raise EmptySlot(f"slot {slot.slot_id} has no accepted submissions")
    slot.closed = True
    verified = suite.pairing(slot.U, suite.gen_g2) == suite.pairing(slot.index_v + slot.V, ms_pk_g2)
    offending = []
    if not verified and localize:
        offending = [
            {"arrival": o.arrival, "digest": o.submission.digest(), "reason": REASON_BATCH}
            for o in localize_failures(suite, slot.accepted, ms_pk_g2)
        ]
    return BatchReport(
        slot_id=slot.slot_id,
        n=slot.n,
        verified=verified,
        aggregate={"u": slot.U.hex(), "v": slot.V.hex(), "index_v": slot.index_v.hex()},
        rejected=list(slot.rejected),
        offending=offending,
    )


class DataCenter:
    """Task publisher, aggregator and batch verifier.

    Holds its own key pair and the MS public key; it has no way to map a
    pseudonym to an identity.
    """

    def __init__(self, suite: BilinearSuite, keys: AuthorityKeyPair, ms_pk_g2: G2Element):
        self.suite = suite
        self.keys = keys
        self.ms_pk_g2 = ms_pk_g2

    @property
    def public_g1(self) -> G1Element:
        return self.keys.pk_g1

    def open_slot(self, slot_id: int, start: int, end: int) -> TimeSlot:
        return TimeSlot(self.suite, slot_id, start, end)

    def receive(self, sub: Submission, slot: TimeSlot) -> OpenedSubmission:
        return dc_open(self.suite, self.keys.sk, sub, slot)

    def receive_all(self, subs: Iterable[Submission], slot: TimeSlot) -> list[OpenedSubmission]:
        """Admit every submission that passes; rejections stay on the slot."""
        out = []
        for sub in subs:
            try:
                out.append(self.receive(sub, slot))
            except SubmissionRejected:
                pass
        return out

    def verify_single(self, opened: OpenedSubmission) -> bool:
        return verify_single(self.suite, opened, self.ms_pk_g2)

    def close_slot(self, slot: TimeSlot, localize: bool = True) -> BatchReport:
        return close_slot_and_batch_verify(self.suite, slot, self.ms_pk_g2, localize)


# -- JSONL helpers --------------------------------------------------------------


def write_submissions(path: str | os.PathLike, subs: Iterable[Submission], append: bool = False) -> None:
    with open(path, "a" if append else "w") as fh:
        for s in subs:
            fh.write(json.dumps(s.to_json(), sort_keys=True) + "\n")


def read_submissions(suite: BilinearSuite, path: str | os.PathLike) -> Iterator[Submission]:
    with open(path) as fh:
        for line in fh:
            if line.strip():
                yield Submission.from_json(suite, json.loads(line))

