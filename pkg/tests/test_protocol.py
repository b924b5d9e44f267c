import base64
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import pytest
from conftest import World

from clas_mhcs import protocol
from clas_mhcs.clas import h1
from clas_mhcs.errors import (
    DuplicateIdentity,
    EmptySlot,
    IncompleteKeys,
    InvalidElement,
    SubmissionRejected,
    UnknownIndex,
)
from clas_mhcs.opcount import OperationCounter
from clas_mhcs.simulation import tamper_submission


def id_leaks(blob: bytes, ids) -> bool:
    for i in ids:
        if i in blob or i.hex().encode() in blob or base64.b64encode(i) in blob:
            return True
    return False


@pytest.fixture
def world(request, suite):
    if suite.security_level == 128:
        return request.getfixturevalue("bls_world")
    return request.getfixturevalue("type_a_world")


class TestRegistration:
    def test_index_relation(self, world):
        s = world.suite
        for rec in world.ms.records():
            assert rec.index_v == rec.a * rec.Q2
            assert s.pairing(rec.index_s, s.gen_g2) == s.pairing(rec.index_v, world.ms.public_g2)
            assert rec.index_s == rec.a * (world.ms_keys.sk * rec.Q2)

    def test_index_unique(self, world):
        idx = [r.index_v.to_bytes() for r in world.ms.records()]
        assert len(set(idx)) == len(idx)

    def test_ms_and_dc_keys(self, world):
        s = world.suite
        assert world.ms_keys.pk_g1 == world.ms_keys.sk * s.gen_g1
        assert world.dc_keys.pk_g1 == world.dc_keys.sk * s.gen_g1

    def test_duplicate(self, world):
        with pytest.raises(DuplicateIdentity):
            protocol.Participant.enroll(world.suite, world.ms, world.people[0].id, world.rng)

    def test_index_collision_regenerates(self, bls):
        class Scripted(random.Random):
            script: list = []

            def randrange(self, *a):
                return self.script.pop(0) if self.script else super().randrange(*a)

        _, ms_keys, _ = protocol.ms_init(128, random.Random(2))
        ms = protocol.ManagementServer(bls, ms_keys)
        # occupy the index that a = 5 would give "b"
        ms._by_index[(5 * h1(bls, b"b", bls.gen_g1)).to_bytes()] = b"someone"
        rng = Scripted(1)
        rng.script = [5, 7]
        _, rec = ms.register(b"b", bls.gen_g1, rng)
        assert rec.a == 7

    def test_trace(self, world):
        for p in world.people:
            assert protocol.ms_trace(world.ms, p.SN) == p.id

    def test_unknown_index(self, world):
        with pytest.raises(UnknownIndex):
            world.ms.trace(world.suite.gen_g1)

    def test_ledger_persistence(self, tmp_path, bls):
        path = tmp_path / "ledger.jsonl"
        rng = random.Random(4)
        _, ms_keys, _ = protocol.ms_init(128, rng)
        ms = protocol.ManagementServer(bls, ms_keys, path)
        people = [protocol.Participant.enroll(bls, ms, b"p%d" % i, rng) for i in range(3)]
        reloaded = protocol.ManagementServer(bls, ms_keys, path)
        assert [reloaded.trace(p.SN) for p in people] == [b"p0", b"p1", b"p2"]
        with pytest.raises(DuplicateIdentity):
            reloaded.register(b"p1", bls.gen_g1, rng)
        lines = path.read_text().splitlines()
        assert len(lines) == 3
        assert protocol.RegistrationRecord.from_json(bls, json.loads(lines[0])) == ms.record_for(b"p0")

    def test_forged_grant_rejected(self, bls, monkeypatch):
        rng = random.Random(5)
        _, ms_keys, _ = protocol.ms_init(128, rng)
        ms = protocol.ManagementServer(bls, ms_keys)
        real = ms.register

        def bad(identity, q1, rng=None):
            grant, rec = real(identity, q1, rng)
            return replace(grant, index_s=2 * grant.index_s), rec

        monkeypatch.setattr(ms, "register", bad)
        with pytest.raises(InvalidElement):
            protocol.Participant.enroll(bls, ms, b"x", rng)

    def test_participant_json(self, world):
        p = world.people[0]
        assert protocol.Participant.from_json(world.suite, p.to_json(world.suite)) == p

    def test_concurrent_registration(self, bls):
        rng = random.Random(6)
        _, ms_keys, _ = protocol.ms_init(128, rng)
        ms = protocol.ManagementServer(bls, ms_keys)

        def attempt(i):
            try:
                ms.register(b"dup" if i % 2 else b"u%d" % i, bls.gen_g1, random.Random(i))
                return 1
            except DuplicateIdentity:
                return 0

        with ThreadPoolExecutor(8) as pool:
            assert sum(pool.map(attempt, range(16))) == 9
        assert len(ms.records()) == 9


class TestSigning:
    def test_verify_single_equation(self, world):
        s = world.suite
        slot = world.slot()
        sub = world.sign(world.people[0], b"bp=120/80", slot.start + 5)
        opened = world.dc.receive(sub, slot)
        assert opened.SN == world.people[0].SN
        assert opened.h == protocol.h2_timed(s, b"bp=120/80", slot.start + 5, sub.V)
        lhs = s.pairing(sub.U, s.gen_g2)
        assert lhs == s.pairing(opened.SN + opened.h * sub.V, world.ms.public_g2)
        assert protocol.verify_single(s, opened, world.ms.public_g2)
        assert protocol.verify_single(s, opened, world.ms.public_g2, recompute_hash=True)

    def test_hash_input_layout(self, bls):
        v = bls.gen_g1
        expect = bls.hash_to_scalar(b"CLAS-H2", b"msg" + (1234).to_bytes(8, "big") + v.to_bytes())
        assert protocol.h2_timed(bls, b"msg", 1234, v) == expect

    def test_incomplete_registration(self, bls):
        p = protocol.Participant(b"x", 1, bls.gen_g1)
        with pytest.raises(IncompleteKeys):
            protocol.mhcs_sign(bls, p, bls.gen_g1, bls.gen_g1, b"m", 0)

    def test_counts(self, world):
        s = world.suite
        slot = world.slot()
        with OperationCounter() as c:
            with c.phase("sign"):
                sub = world.sign(world.people[1], b"m", slot.start)
            with c.phase("open"):
                opened = world.dc.receive(sub, slot)
            with c.phase("single"):
                protocol.verify_single(s, opened, world.ms.public_g2)
            with c.phase("single_h"):
                protocol.verify_single(s, opened, world.ms.public_g2, recompute_hash=True)
        assert c.table("sign") == {"H": 1, "S": 2, "P": 0}
        assert c.counts("sign")["E"] > 0
        assert c.table("open") == {"H": 1, "S": 1, "P": 0}
        assert c.table("single") == {"H": 0, "S": 1, "P": 2}
        assert c.table("single_h") == {"H": 1, "S": 1, "P": 2}

    def test_submission_json_roundtrip(self, world):
        slot = world.slot()
        sub = world.sign(world.people[0], b"\x00\xff", slot.start)
        obj = sub.to_json()
        assert set(obj) == {"u", "v", "m", "sn_enc"}
        assert protocol.Submission.from_json(world.suite, json.loads(json.dumps(obj))) == sub

    def test_submission_bad_json(self, bls):
        with pytest.raises(InvalidElement):
            protocol.Submission.from_json(bls, {"u": "zz", "v": "", "m": "", "sn_enc": ""})
        with pytest.raises(InvalidElement):
            protocol.Submission.from_json(bls, {"u": bls.gen_g1.hex()})

    def test_jsonl_io(self, tmp_path, world):
        slot = world.slot()
        subs = world.honest(slot, world.people[:3])
        path = tmp_path / "subs.jsonl"
        protocol.write_submissions(path, subs[:2])
        protocol.write_submissions(path, subs[2:], append=True)
        assert list(protocol.read_submissions(world.suite, path)) == subs


class TestDataCenter:
    def test_window_half_open(self, world):
        slot = world.slot(duration=60)
        p = world.people[0]
        for t, ok in ((slot.start - 1, False), (slot.start, True), (slot.end - 1, True), (slot.end, False)):
            sub = world.sign(p, b"m", t)
            if ok:
                world.dc.receive(sub, slot)
            else:
                with pytest.raises(SubmissionRejected) as exc:
                    world.dc.receive(sub, slot)
                assert exc.value.reason == protocol.REASON_STALE
        assert slot.n == 2 and len(slot.rejected) == 2

    def test_stale_does_not_touch_sums(self, world):
        slot = world.slot()
        world.dc.receive_all(world.honest(slot, world.people[:2]), slot)
        before = (slot.U, slot.V, slot.index_v)
        world.dc.receive_all([world.sign(world.people[2], b"old", slot.start - 100)], slot)
        assert (slot.U, slot.V, slot.index_v) == before

    @pytest.mark.parametrize(
        "field,reason",
        [
            ("m", protocol.REASON_HASH),
            ("v", protocol.REASON_HASH),
            ("sn_enc", protocol.REASON_DECRYPT),
            ("t", None),
        ],
    )
    def test_rejection_reasons(self, world, field, reason):
        slot = world.slot()
        sub = world.sign(world.people[0], b"data", slot.start + 30)
        bad = tamper_submission(world.suite, sub, field, world.rng, world.dc_keys.sk, world.dc_keys.pk_g1)
        with pytest.raises(SubmissionRejected) as exc:
            world.dc.receive(bad, slot)
        if reason is None:
            assert exc.value.reason in (protocol.REASON_STALE, protocol.REASON_HASH)
        else:
            assert exc.value.reason == reason
        assert slot.rejected[-1].reason == exc.value.reason
        assert slot.n == 0

    def test_identity_u_rejected(self, world):
        slot = world.slot()
        sub = world.sign(world.people[0], b"data", slot.start)
        with pytest.raises(SubmissionRejected) as exc:
            world.dc.receive(replace(sub, U=world.suite.g1_identity()), slot)
        assert exc.value.reason == protocol.REASON_ELEMENT

    def test_closed_slot(self, world):
        slot = world.slot()
        subs = world.honest(slot, world.people[:2])
        world.dc.receive(subs[0], slot)
        world.dc.close_slot(slot)
        with pytest.raises(SubmissionRejected) as exc:
            world.dc.receive(subs[1], slot)
        assert exc.value.reason == protocol.REASON_SLOT_CLOSED

    def test_empty_slot(self, world):
        with pytest.raises(EmptySlot):
            world.dc.close_slot(world.slot())

    def test_running_sums_match_fold(self, world):
        slot = world.slot()
        world.dc.receive_all(world.honest(slot), slot)
        assert (slot.U, slot.V, slot.index_v) == slot.recompute()
        assert slot.index_v == sum((p.SN for p in world.people[1:]), world.people[0].SN)

    def test_concurrent_open(self, world):
        slot = world.slot()
        subs = world.honest(slot)
        with ThreadPoolExecutor(8) as pool:
            list(pool.map(lambda s: world.dc.receive(s, slot), subs))
        assert slot.n == len(subs)
        assert (slot.U, slot.V, slot.index_v) == slot.recompute()
        assert sorted(o.arrival for o in slot.accepted) == list(range(len(subs)))
        assert world.dc.close_slot(slot).verified

    def test_slot_json_roundtrip(self, world):
        slot = world.slot()
        subs = world.honest(slot, world.people[:3])
        subs.append(world.sign(world.people[3], b"late", slot.end + 5))
        world.dc.receive_all(subs, slot)
        again = protocol.TimeSlot.from_json(world.suite, json.loads(json.dumps(slot.to_json())))
        assert again.n == 3 and again.rejected == slot.rejected
        assert (again.U, again.V, again.index_v) == (slot.U, slot.V, slot.index_v)
        assert again.arrivals == 4

    def test_bad_window(self, world):
        with pytest.raises(ValueError):
            world.dc.open_slot(1, 10, 10)


class TestBatch:
    @pytest.mark.parametrize("n", [1, 2, 10, 100])
    def test_end_to_end(self, bls, n):
        w = World(bls, n, random.Random(n))
        slot = w.slot()
        w.dc.receive_all(w.honest(slot), slot)
        with OperationCounter() as c:
            report = w.dc.close_slot(slot)
        assert report.verified and report.ok and report.n == n
        assert c.table() == {"H": 0, "S": 0, "P": 2}

    def test_end_to_end_type_a(self, type_a_world):
        w = type_a_world
        slot = w.slot()
        w.dc.receive_all(w.honest(slot), slot)
        assert w.dc.close_slot(slot).verified

    def test_n1_matches_single(self, world):
        for corrupt in (False, True):
            slot = world.slot()
            sub = world.sign(world.people[0], b"m", slot.start)
            if corrupt:
                sub = replace(sub, U=sub.U + world.suite.gen_g1)
            single = world.dc.verify_single(world.dc.receive(sub, slot))
            assert world.dc.close_slot(slot).verified == single == (not corrupt)

    def test_order_independence(self, bls_world):
        w = bls_world
        slot = w.slot()
        subs = w.honest(slot)
        results = []
        for seed in range(3):
            order = subs[:]
            random.Random(seed).shuffle(order)
            sl = w.dc.open_slot(slot.slot_id, slot.start, slot.end)
            w.dc.receive_all(order, sl)
            r = w.dc.close_slot(sl)
            results.append((r.verified, r.aggregate))
        assert all(r == results[0] for r in results) and results[0][0]

    def test_bisection_names_offender(self, bls_world):
        w = bls_world
        rng = random.Random(40)
        for _ in range(10):
            slot = w.slot()
            w.dc.receive_all(w.honest(slot), slot)
            bad = rng.randrange(slot.n)
            o = slot.accepted[bad]
            forged = replace(o, submission=replace(o.submission, U=o.submission.U + w.suite.gen_g1))
            slot.accepted[bad] = forged
            slot.U = slot.U + w.suite.gen_g1
            report = w.dc.close_slot(slot)
            assert not report.verified and not report.ok
            assert [x["arrival"] for x in report.offending] == [o.arrival]
            assert report.offending[0]["digest"] == forged.submission.digest()

    def test_bisection_multiple(self, bls_world):
        w = bls_world
        slot = w.slot()
        w.dc.receive_all(w.honest(slot), slot)
        for i in (2, 3, 11):
            o = slot.accepted[i]
            slot.accepted[i] = replace(o, submission=replace(o.submission, U=o.submission.U + w.suite.gen_g1))
            slot.U = slot.U + w.suite.gen_g1
        report = w.dc.close_slot(slot)
        assert sorted(x["arrival"] for x in report.offending) == [2, 3, 11]

    def test_no_localize(self, bls_world):
        w = bls_world
        slot = w.slot()
        w.dc.receive_all(w.honest(slot, w.people[:2]), slot)
        slot.U = slot.U + w.suite.gen_g1
        report = w.dc.close_slot(slot, localize=False)
        assert not report.verified and report.offending == []

    def test_agreement_500(self, bls_world):
        w = bls_world
        s = w.suite
        rng = random.Random(41)
        pool_slot = w.slot(duration=600)
        pool = w.honest(pool_slot)
        fields = ("m", "u", "v", "sn_enc", "t")
        for trial in range(500):
            n = rng.randint(1, 16)
            subs = rng.sample(pool, n)
            if rng.random() < 0.7:
                i = rng.randrange(n)
                subs[i] = tamper_submission(s, subs[i], rng.choice(fields), rng, w.dc_keys.sk, w.dc_keys.pk_g1)
            slot = w.dc.open_slot(pool_slot.slot_id, pool_slot.start, pool_slot.end)
            opened = w.dc.receive_all(subs, slot)
            if not opened:
                continue
            singles = all(w.dc.verify_single(o) for o in opened)
            assert w.dc.close_slot(slot, localize=False).verified == singles


class TestAnonymity:
    def test_dc_view_has_no_ids(self, bls_world):
        w = bls_world
        ids = [p.id for p in w.people]
        slot = w.slot()
        subs = w.honest(slot)
        w.dc.receive_all(subs, slot)
        report = w.dc.close_slot(slot)
        blobs = [s.to_bytes() for s in subs]
        blobs += [json.dumps(s.to_json()).encode() for s in subs]
        blobs.append(json.dumps(slot.to_json()).encode())
        blobs.append(json.dumps(report.to_json()).encode())
        blobs += [json.dumps(o.to_json(w.suite)).encode() for o in slot.accepted]
        assert not any(id_leaks(b, ids) for b in blobs)
        assert id_leaks(json.dumps(w.ms.record_for(ids[0]).to_json(w.suite)).encode(), ids)

    def test_dc_holds_no_index_mapping(self, bls_world):
        dc = bls_world.dc
        assert set(vars(dc)) == {"suite", "keys", "ms_pk_g2"}
        assert not hasattr(dc, "trace")

    def test_non_repudiation(self, bls_world):
        w = bls_world
        slot = w.slot()
        w.dc.receive_all(w.honest(slot), slot)
        for o, p in zip(slot.accepted, w.people):
            assert w.ms.trace(o.SN) == p.id
            rec = w.ms.record_for(p.id)
            assert protocol.verify_single(w.suite, replace(o, SN=rec.index_v), w.ms.public_g2)
