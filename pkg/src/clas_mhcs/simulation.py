"""In-memory crowd-sensing scenarios with optional fault injection."""

from __future__ import annotations

import json
import random
import secrets
from dataclasses import dataclass, field, replace

from . import envelope, protocol
from .group import BilinearSuite
from .protocol import DataCenter, ManagementServer, Participant, Submission

TAMPER_FIELDS = ("m", "u", "v", "sn_enc", "t")


@dataclass(frozen=True)
class TamperSpec:
    field: str
    index: int  # 0-based participant position

    @classmethod
    def parse(cls, text: str) -> "TamperSpec":
        """``"m:3"`` -> TamperSpec("m", 3)."""
        name, _, idx = text.partition(":")
        name = name.strip().lower()
        if name not in TAMPER_FIELDS or not idx.strip().isdigit():
            raise ValueError(f"tamper spec must look like <field>:<index> with field in {TAMPER_FIELDS}")
        return cls(name, int(idx))

    def __str__(self):
        return f"{self.field}:{self.index}"


@dataclass
class ScenarioConfig:
    n_participants: int = 10
    slot_duration_s: int = 60
    message_bits: int = 160
    tamper: TamperSpec | None = None
    seed: int | None = None
    security_level: int = 128
    slot_start: int = 1_700_000_000

    def __post_init__(self):
        if isinstance(self.tamper, str):
            self.tamper = TamperSpec.parse(self.tamper)
        if self.n_participants < 1:
            raise ValueError("n_participants must be >= 1")
        if self.slot_duration_s <= 0:
            raise ValueError("slot_duration_s must be > 0")
        if self.message_bits <= 0 or self.message_bits % 8:
            raise ValueError("message_bits must be a positive multiple of 8")
        if self.tamper is not None and not 0 <= self.tamper.index < self.n_participants:
            raise ValueError(f"tamper index {self.tamper.index} out of range")

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def flip_bit(data: bytes, rng) -> bytes:
    if not data:
        return b"\x01"
    pos = rng.randrange(len(data) * 8)
    out = bytearray(data)
    out[pos // 8] ^= 1 << (pos % 8)
    return bytes(out)


def tamper_submission(
    suite: BilinearSuite,
    sub: Submission,
    field_name: str,
    rng,
    dc_sk: int | None = None,
    dc_pub=None,
    max_shift: int = 120,
) -> Submission:
    """Return ``sub`` with one field altered in transit.

    Changing ``t`` needs the DC key pair: the sealed serial number is opened,
    its timestamp shifted by a non-zero amount and sealed again, which models
    an adversary able to rewrite the envelope (stronger than any real one).
    """
    if field_name == "m":
        return replace(sub, m=flip_bit(sub.m, rng))
    if field_name == "u":
        return replace(sub, U=sub.U + suite.random_scalar(rng) * suite.gen_g1)
    if field_name == "v":
        return replace(sub, V=sub.V + suite.random_scalar(rng) * suite.gen_g1)
    if field_name == "sn_enc":
        return replace(sub, sn_enc=flip_bit(sub.sn_enc, rng))
    if field_name == "t":
        if dc_sk is None or dc_pub is None:
            raise ValueError("tampering t needs the DC key pair")
        sn, h, t = protocol.unpack_serial(suite, envelope.open_box(suite, dc_sk, sub.sn_enc))
        shift = rng.randrange(1, max_shift + 1) * rng.choice((-1, 1))
        box = envelope.seal(suite, dc_pub, protocol.pack_serial(suite, sn, h, max(0, t + shift)), rng)
        return replace(sub, sn_enc=box.to_bytes())
    raise ValueError(f"unknown field {field_name!r}")


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    suite: BilinearSuite
    ms: ManagementServer
    dc: DataCenter
    participants: list[Participant]
    submissions: list[Submission]
    slot: protocol.TimeSlot
    report: protocol.BatchReport
    messages: list[bytes] = field(default_factory=list)


def make_rng(seed: int | None):
    return random.Random(seed) if seed is not None else secrets.SystemRandom()


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Register n participants, collect one slot of signed data and batch-verify it."""
    rng = make_rng(config.seed)
    suite, ms_keys, dc_keys = protocol.ms_init(config.security_level, rng)
    ms = ManagementServer(suite, ms_keys)
    dc = DataCenter(suite, dc_keys, ms_keys.pk_g2)
    width = config.message_bits // 8
    participants = [
        Participant.enroll(suite, ms, b"participant-%06d" % i, rng) for i in range(config.n_participants)
    ]
    slot = dc.open_slot(0, config.slot_start, config.slot_start + config.slot_duration_s)
    messages, subs = [], []
    for i, p in enumerate(participants):
        m = bytes(rng.getrandbits(8) for _ in range(width))
        t = config.slot_start + rng.randrange(config.slot_duration_s)
        sub = protocol.mhcs_sign(suite, p, ms_keys.pk_g1, dc_keys.pk_g1, m, t, rng)
        if config.tamper is not None and config.tamper.index == i:
            sub = tamper_submission(suite, sub, config.tamper.field, rng, dc_keys.sk, dc_keys.pk_g1)
        messages.append(m)
        subs.append(sub)
    dc.receive_all(subs, slot)
    if slot.n:
        report = dc.close_slot(slot)
    else:
        report = protocol.BatchReport(slot.slot_id, 0, False, {}, list(slot.rejected))
    return ScenarioResult(config, suite, ms, dc, participants, subs, slot, report, messages)
