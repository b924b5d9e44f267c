"""Command-line driver.

All state lives in one directory (``--dir``, default ``./mhcs-state``)::

    params.json              suite selection
    ms_public.json           MS public key (G1 and G2)
    ms_secret.json           MS private key            (mode 0600)
    dc_public.json / dc_secret.json
    ms_ledger.secret.jsonl   registration ledger       (mode 0600)
    participants/<id>.secret.json
    outbox.jsonl             signed submissions waiting for the DC
    slots/<slot>.json        DC view of a slot (accepted, rejected, sums)
    slots/<slot>.report.json batch verification report

Exit codes: 0 success / verified, 1 protocol rejection or failed
verification, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import secrets
import sys
import tempfile
import time
from pathlib import Path

from . import metrics, protocol
from .clas import AuthorityKeyPair
from .errors import ClasError, DuplicateIdentity, SubmissionRejected, UnsupportedParameter
from .group import SUPPORTED_LEVELS, BilinearSuite, get_suite
from .simulation import ScenarioConfig, TamperSpec, run_scenario, tamper_submission

EXIT_OK, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _atomic_write(path: Path, text: str, secret: bool = False) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        if secret:
            os.chmod(tmp, 0o600)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, obj, secret: bool = False) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n", secret)


def _read_json(path: Path):
    if not path.exists():
        raise UsageError(f"missing artifact {path}; run the earlier phase first")
    with path.open() as fh:
        return json.load(fh)


def _rng(args, *parts):
    if args.seed is None:
        return secrets.SystemRandom()
    return random.Random(":".join(str(p) for p in (args.seed, args.command, *parts)))


def _keys_to_json(suite: BilinearSuite, keys: AuthorityKeyPair, secret: bool) -> dict:
    out = {"pk_g1": keys.pk_g1.hex(), "pk_g2": keys.pk_g2.hex()}
    if secret:
        out["sk"] = suite.scalar_to_bytes(keys.sk).hex()
    return out


def _load_suite(state: Path) -> BilinearSuite:
    return get_suite(_read_json(state / "params.json")["security_level"])


def _load_keys(suite: BilinearSuite, state: Path, who: str) -> AuthorityKeyPair:
    obj = _read_json(state / f"{who}_secret.json")
    keys = AuthorityKeyPair(
        suite.scalar_from_bytes(bytes.fromhex(obj["sk"]), nonzero=True),
        suite.g1_from_bytes(bytes.fromhex(obj["pk_g1"])),
        suite.g2_from_bytes(bytes.fromhex(obj["pk_g2"])),
    )
    if keys.sk * suite.gen_g1 != keys.pk_g1 or keys.sk * suite.gen_g2 != keys.pk_g2:
        raise UsageError(f"{who} key files are inconsistent")
    return keys


def _load_public(suite: BilinearSuite, state: Path, who: str):
    obj = _read_json(state / f"{who}_public.json")
    return suite.g1_from_bytes(bytes.fromhex(obj["pk_g1"])), suite.g2_from_bytes(bytes.fromhex(obj["pk_g2"]))


def _participant_path(state: Path, identity: str) -> Path:
    if not identity or "/" in identity or identity.startswith("."):
        raise UsageError(f"unusable participant id {identity!r}")
    return state / "participants" / f"{identity}.secret.json"


# -- commands -----------------------------------------------------------------


def cmd_setup(args) -> int:
    out = Path(args.out or args.dir)
    suite = get_suite(args.level)
    files = ["params.json", "ms_public.json", "ms_secret.json", "dc_public.json", "dc_secret.json"]
    if not args.force and any((out / f).exists() for f in files):
        raise UsageError(f"{out} already holds a setup; pass --force to overwrite")
    rng = _rng(args)
    ms, dc = AuthorityKeyPair.generate(suite, rng), AuthorityKeyPair.generate(suite, rng)
    _write_json(out / "params.json", {"security_level": suite.security_level, "suite": suite.name, "mode": suite.mode})
    for who, keys in (("ms", ms), ("dc", dc)):
        _write_json(out / f"{who}_public.json", _keys_to_json(suite, keys, False))
        _write_json(out / f"{who}_secret.json", _keys_to_json(suite, keys, True), secret=True)
    if args.force:
        for stale in ("ms_ledger.secret.jsonl",):
            (out / stale).unlink(missing_ok=True)
    print(json.dumps({"suite": suite.name, "dir": str(out)}))
    return EXIT_OK


def cmd_register(args) -> int:
    state = Path(args.dir)
    suite = _load_suite(state)
    ms_keys = _load_keys(suite, state, "ms")
    ms = protocol.ManagementServer(suite, ms_keys, state / "ms_ledger.secret.jsonl")
    path = _participant_path(state, args.id)
    rng = _rng(args, args.id)
    identity = args.id.encode()
    try:
        participant = protocol.Participant.enroll(suite, ms, identity, rng)
    except DuplicateIdentity as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    os.chmod(state / "ms_ledger.secret.jsonl", 0o600)
    _write_json(path, participant.to_json(suite), secret=True)
    print(json.dumps({"id": args.id, "sn": participant.SN.hex()}))
    return EXIT_OK


def cmd_sign(args) -> int:
    state = Path(args.dir)
    suite = _load_suite(state)
    participant = protocol.Participant.from_json(suite, _read_json(_participant_path(state, args.id)))
    ms_g1, _ = _load_public(suite, state, "ms")
    dc_g1, _ = _load_public(suite, state, "dc")
    message_path = Path(args.message)
    if not message_path.exists():
        raise UsageError(f"message file {message_path} not found")
    t = args.time if args.time is not None else int(time.time())
    rng = _rng(args, args.id, t)
    sub = protocol.mhcs_sign(suite, participant, ms_g1, dc_g1, message_path.read_bytes(), t, rng)
    out = Path(args.out) if args.out else state / "outbox.jsonl"
    protocol.write_submissions(out, [sub], append=True)
    print(json.dumps(sub.to_json(), sort_keys=True))
    return EXIT_OK


def _slot_path(state: Path, slot_id: int, suffix: str = "") -> Path:
    return state / "slots" / f"{slot_id}{suffix}.json"


def _load_slot(suite: BilinearSuite, state: Path, slot_id: int, duration: int) -> protocol.TimeSlot:
    path = _slot_path(state, slot_id)
    if path.exists():
        return protocol.TimeSlot.from_json(suite, _read_json(path))
    return protocol.TimeSlot(suite, slot_id, slot_id * duration, (slot_id + 1) * duration)


def cmd_submit(args) -> int:
    state = Path(args.dir)
    suite = _load_suite(state)
    dc_keys = _load_keys(suite, state, "dc")
    _, ms_g2 = _load_public(suite, state, "ms")
    dc = protocol.DataCenter(suite, dc_keys, ms_g2)
    inbox = Path(args.input) if args.input else state / "outbox.jsonl"
    if not inbox.exists():
        raise UsageError(f"no submissions at {inbox}")
    subs = list(protocol.read_submissions(suite, inbox))
    if args.tamper:
        spec = TamperSpec.parse(args.tamper)
        if spec.index >= len(subs):
            raise UsageError(f"tamper index {spec.index} out of range for {len(subs)} submissions")
        subs[spec.index] = tamper_submission(
            suite, subs[spec.index], spec.field, _rng(args, "tamper"), dc_keys.sk, dc_keys.pk_g1
        )
    slot = _load_slot(suite, state, args.slot, args.duration)
    before = len(slot.rejected)
    accepted = 0
    for sub in subs:
        try:
            dc.receive(sub, slot)
            accepted += 1
        except SubmissionRejected:
            pass
    _write_json(_slot_path(state, args.slot), slot.to_json())
    if not args.input:
        inbox.replace(state / f"outbox.slot{args.slot}.{int(time.time() * 1e6)}.jsonl")
    new_rejections = [r.to_json() for r in slot.rejected[before:]]
    print(json.dumps({"slot_id": args.slot, "accepted": accepted, "rejected": new_rejections}, sort_keys=True))
    return EXIT_REJECTED if new_rejections else EXIT_OK


def cmd_aggregate(args) -> int:
    state = Path(args.dir)
    suite = _load_suite(state)
    slot = protocol.TimeSlot.from_json(suite, _read_json(_slot_path(state, args.slot)))
    u, v, iv = slot.recompute()
    agg = {"slot_id": slot.slot_id, "n": slot.n, "u": u.hex(), "v": v.hex(), "index_v": iv.hex()}
    _write_json(_slot_path(state, args.slot, ".aggregate"), agg)
    print(json.dumps(agg, sort_keys=True))
    return EXIT_OK


def cmd_batch_verify(args) -> int:
    state = Path(args.dir)
    suite = _load_suite(state)
    _, ms_g2 = _load_public(suite, state, "ms")
    slot = protocol.TimeSlot.from_json(suite, _read_json(_slot_path(state, args.slot)))
    if slot.n == 0:
        report = protocol.BatchReport(slot.slot_id, 0, False, {}, list(slot.rejected))
    else:
        report = protocol.close_slot_and_batch_verify(suite, slot, ms_g2, localize=not args.no_localize)
        _write_json(_slot_path(state, args.slot), slot.to_json())
    _write_json(_slot_path(state, args.slot, ".report"), report.to_json())
    print(json.dumps(report.to_json(), indent=2, sort_keys=True))
    return EXIT_OK if report.ok else EXIT_REJECTED


def cmd_trace(args) -> int:
    state = Path(args.dir)
    suite = _load_suite(state)
    ms = protocol.ManagementServer(suite, _load_keys(suite, state, "ms"), state / "ms_ledger.secret.jsonl")
    try:
        identity = ms.trace(suite.g1_from_bytes(bytes.fromhex(args.index)))
    except (ClasError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    print(identity.decode(errors="replace"))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = ScenarioConfig.load(args.config).__dict__.copy() if args.config else {}
    overrides = {
        "n_participants": args.participants,
        "slot_duration_s": args.slot_duration,
        "message_bits": args.message_bits,
        "tamper": args.tamper,
        "seed": args.seed,
        "security_level": args.level,
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    try:
        config = ScenarioConfig(**cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = run_scenario(config)
    print(json.dumps(result.report.to_json(), indent=2, sort_keys=True))
    return EXIT_OK if result.report.ok else EXIT_REJECTED


def _parse_sizes(text: str) -> list[int]:
    try:
        sizes = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad participant list {text!r}") from None
    if not sizes or min(sizes) < 1:
        raise UsageError("participant counts must be positive integers")
    return sizes


def cmd_bench(args) -> int:
    level = args.level
    if level is None:
        params = Path(args.dir) / "params.json"
        level = _read_json(params)["security_level"] if params.exists() else 128
    report = metrics.run_benchmark(_parse_sizes(args.participants), get_suite(level), args.seed, args.workers)
    print(metrics.to_text(report))
    if args.csv:
        _atomic_write(Path(args.csv), metrics.to_csv(report))
    if args.json:
        _write_json(Path(args.json), report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dir", default="mhcs-state", help="state directory (default: %(default)s)")
    common.add_argument("--seed", type=int, default=None, help="deterministic randomness (testing only)")
    p = argparse.ArgumentParser(prog="clas-mhcs", description="Certificateless aggregate signatures for crowd sensing")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    s = add("setup", help="create suite parameters and MS/DC key pairs")
    s.add_argument("--level", type=int, default=128, help=f"security level, one of {SUPPORTED_LEVELS}")
    s.add_argument("--out", help="output directory (defaults to --dir)")
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_setup)

    s = add("register", help="register a participant with the MS")
    s.add_argument("--id", required=True)
    s.set_defaults(func=cmd_register)

    s = add("sign", help="sign a health-data file as a participant")
    s.add_argument("--id", required=True)
    s.add_argument("--message", required=True, help="file holding the health data")
    s.add_argument("--time", type=int, help="unix timestamp (default: now)")
    s.add_argument("--out", help="JSONL file to append to (default: <dir>/outbox.jsonl)")
    s.set_defaults(func=cmd_sign)

    s = add("submit", help="DC admits pending submissions into a slot")
    s.add_argument("--slot", type=int, required=True)
    s.add_argument("--duration", type=int, default=60, help="slot length T in seconds; slot k covers [kT, (k+1)T)")
    s.add_argument("--input", help="JSONL submissions (default: <dir>/outbox.jsonl, consumed)")
    s.add_argument("--tamper", help="fault injection <field>:<index>, field in m,u,v,sn_enc,t")
    s.set_defaults(func=cmd_submit)

    s = add("aggregate", help="emit the slot aggregate <U, V, index_v>")
    s.add_argument("--slot", type=int, required=True)
    s.set_defaults(func=cmd_aggregate)

    s = add("batch-verify", help="close a slot and verify it in one batch")
    s.add_argument("--slot", type=int, required=True)
    s.add_argument("--no-localize", action="store_true", help="skip bisection on failure")
    s.set_defaults(func=cmd_batch_verify)

    s = add("trace", help="MS maps a pseudonymous index_v back to an id")
    s.add_argument("--index", required=True, help="hex index_v")
    s.set_defaults(func=cmd_trace)

    s = add("simulate", help="run a whole slot in memory")
    s.add_argument("--config", help="JSON file with ScenarioConfig fields")
    s.add_argument("--participants", type=int)
    s.add_argument("--slot-duration", type=int)
    s.add_argument("--message-bits", type=int)
    s.add_argument("--tamper")
    s.add_argument("--level", type=int)
    s.set_defaults(func=cmd_simulate)

    s = add("bench", help="operation counts and storage versus batch size")
    s.add_argument("--participants", default="1,10,100,1000")
    s.add_argument("--csv")
    s.add_argument("--json")
    s.add_argument("--level", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, UnsupportedParameter) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ClasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REJECTED


if __name__ == "__main__":
    sys.exit(main())
