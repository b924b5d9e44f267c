import os
import random

import pytest
from hypothesis import HealthCheck, settings

from clas_mhcs import clas, protocol
from clas_mhcs.group import get_suite

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=100, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session", params=[128, 80], ids=["bls12-381", "type-a"])
def suite(request):
    return get_suite(request.param)


@pytest.fixture(scope="session")
def bls():
    return get_suite(128)


@pytest.fixture(scope="session")
def type_a():
    return get_suite(80)


@pytest.fixture
def rng():
    return random.Random(0xC1A5)


def make_signers(suite, n, rng, prefix=b"user"):
    """KGC keys plus n fully keyed participants."""
    keys = clas.AuthorityKeyPair.generate(suite, rng)
    kgc = clas.KeyGenerationCenter(suite, keys)
    out = []
    for i in range(n):
        k = clas.ParticipantKeys.create(suite, prefix + b"-%d" % i, rng)
        q2, s2 = kgc.set_partial_key(k.id, k.Q1)
        out.append(k.with_partial_key(suite, q2, s2, keys.pk_g2))
    return keys, kgc, out


class World:
    """MS + DC + enrolled participants on one suite."""

    T0 = 1_700_000_000

    def __init__(self, suite, n, rng, ledger_path=None):
        self.suite = suite
        self.rng = rng
        _, self.ms_keys, self.dc_keys = protocol.ms_init(suite.security_level, rng)
        self.ms = protocol.ManagementServer(suite, self.ms_keys, ledger_path)
        self.dc = protocol.DataCenter(suite, self.dc_keys, self.ms_keys.pk_g2)
        self.people = [
            protocol.Participant.enroll(suite, self.ms, b"patient-%04d" % i, rng) for i in range(n)
        ]
        self._slot_id = 0

    def slot(self, duration=60):
        self._slot_id += 1
        start = self.T0 + self._slot_id * 1000
        return self.dc.open_slot(self._slot_id, start, start + duration)

    def sign(self, person, m, t):
        return protocol.mhcs_sign(
            self.suite, person, self.ms_keys.pk_g1, self.dc_keys.pk_g1, m, t, self.rng
        )

    def honest(self, slot, people=None):
        people = self.people if people is None else people
        return [self.sign(p, b"reading-%d" % i, slot.start + i % (slot.end - slot.start)) for i, p in enumerate(people)]


@pytest.fixture(scope="session")
def bls_world():
    return World(get_suite(128), 16, random.Random(7))


@pytest.fixture(scope="session")
def type_a_world():
    return World(get_suite(80), 8, random.Random(8))


# acceptance criteria append (number, title, status, detail) here
ACCEPTANCE_RESULTS: list[tuple[int, str, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, status, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{status}] criterion {num}: {title} -- {detail}")
