import json
import random

import pytest

from clas_mhcs.simulation import ScenarioConfig, TamperSpec, flip_bit, run_scenario


def test_tamper_spec_parse():
    assert TamperSpec.parse("m:3") == TamperSpec("m", 3)
    assert str(TamperSpec.parse(" SN_ENC:0")) == "sn_enc:0"
    for bad in ("m", "x:1", "m:-1", "m:a"):
        with pytest.raises(ValueError):
            TamperSpec.parse(bad)


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(n_participants=0)
    with pytest.raises(ValueError):
        ScenarioConfig(slot_duration_s=0)
    with pytest.raises(ValueError):
        ScenarioConfig(message_bits=12)
    with pytest.raises(ValueError):
        ScenarioConfig(n_participants=2, tamper="m:2")
    with pytest.raises(ValueError):
        ScenarioConfig.from_json({"participants": 3})
    assert ScenarioConfig(tamper="u:1").tamper == TamperSpec("u", 1)
    assert ScenarioConfig().message_bits == 160


def test_config_load(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"n_participants": 3, "tamper": "t:0", "seed": 4}))
    cfg = ScenarioConfig.load(p)
    assert cfg.n_participants == 3 and cfg.tamper == TamperSpec("t", 0)


def test_flip_bit_changes_exactly_one_bit():
    rng = random.Random(1)
    data = rng.randbytes(32)
    for _ in range(100):
        out = flip_bit(data, rng)
        diff = int.from_bytes(data, "big") ^ int.from_bytes(out, "big")
        assert bin(diff).count("1") == 1


def test_honest_run():
    r = run_scenario(ScenarioConfig(n_participants=6, seed=1))
    assert r.report.ok and r.slot.n == 6
    assert all(len(m) == 20 for m in r.messages)
    assert all(r.slot.contains(o.t) for o in r.slot.accepted)


@pytest.mark.parametrize("field", ["m", "u", "v", "sn_enc", "t"])
def test_each_tamper_detected(field):
    r = run_scenario(ScenarioConfig(n_participants=4, seed=2, tamper=f"{field}:1"))
    assert not r.report.ok
    if field == "u":
        assert not r.report.verified
        assert [o["arrival"] for o in r.report.offending] == [1]
    else:
        assert r.report.verified and [x.arrival for x in r.report.rejected] == [1]


def test_seeded_runs_identical():
    a = run_scenario(ScenarioConfig(n_participants=3, seed=9))
    b = run_scenario(ScenarioConfig(n_participants=3, seed=9))
    assert [s.to_json() for s in a.submissions] == [s.to_json() for s in b.submissions]
    assert a.report.to_json() == b.report.to_json()


def test_type_a_run():
    r = run_scenario(ScenarioConfig(n_participants=3, seed=3, security_level=80))
    assert r.report.ok and r.suite.name == "type-a-512"
