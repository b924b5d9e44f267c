"""Operation counts, storage accounting and the benchmark harness."""

from __future__ import annotations

import csv
import io
import random
import re
import secrets
import time
from contextlib import contextmanager
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from . import clas, envelope, protocol
from .errors import ClasError
from .group import BilinearSuite, get_suite
from .opcount import TABLE_CLASSES, OperationCounter

PHASES = ("signing", "verification", "aggregation", "aggregate_verification")

# Complexity comparison, symbolic costs per phase exactly as published.
COMPLEXITY_TABLE: dict[str, dict[str, str]] = {
    "THH": {
        "signing": "4nH+3nS",
        "verification": "5nH+4nP+2nS",
        "aggregation": "0",
        "aggregate_verification": "4P+2nS",
    },
    "Malhi-Batra": {
        "signing": "nH+4nS",
        "verification": "2nH+3nP+3nS",
        "aggregation": "0",
        "aggregate_verification": "3P+3nS",
    },
    "XGCL": {
        "signing": "nH+3nS",
        "verification": "2nH+3nP+2nS",
        "aggregation": "0",
        "aggregate_verification": "3P+2nS",
    },
    "Ours": {
        "signing": "nH+2nS",
        "verification": "2nH+2nP+nS",
        "aggregation": "2nS",
        "aggregate_verification": "2P",
    },
}

_TERM = re.compile(r"^(\d*)(n?)([HSP])$")


def parse_cost(expr: str) -> dict[str, tuple[int, int]]:
    """``"2nH+2nP+nS"`` -> ``{"H": (2, 0), "P": (2, 0), "S": (1, 0)}``.

    Each class maps to ``(per_n, constant)``.
    """
    out = {k: (0, 0) for k in TABLE_CLASSES}
    if expr.strip() == "0":
        return out
    for term in expr.replace(" ", "").split("+"):
        match = _TERM.match(term)
        if not match:
            raise ValueError(f"cannot parse cost term {term!r}")
        coef = int(match.group(1) or 1)
        per_n, const = out[match.group(3)]
        if match.group(2):
            per_n += coef
        else:
            const += coef
        out[match.group(3)] = (per_n, const)
    return out


def predicted_counts(scheme: str, phase: str, n: int) -> dict[str, int]:
    cost = parse_cost(COMPLEXITY_TABLE[scheme][phase])
    return {k: a * n + b for k, (a, b) in cost.items()}


# -- storage ------------------------------------------------------------------


@dataclass(frozen=True)
class StorageModel:
    """Bit sizes of what the data center keeps per submission.

    ``index_bits`` is the size of the aggregated serial number kept once per
    slot in batch mode; in the published accounting it equals ``sn_bits``.
    """

    u_bits: int
    v_bits: int
    sn_bits: int
    m_bits: int
    index_bits: int
    mode: str = "published"

    @classmethod
    def published(cls) -> "StorageModel":
        # 512-bit base field Type A curve, 160-bit group order, 160-bit health data
        return cls(u_bits=512, v_bits=512, sn_bits=160, m_bits=160, index_bits=160, mode="published")

    @classmethod
    def actual(cls, suite: BilinearSuite, message_bits: int = 160) -> "StorageModel":
        point = suite.g1_bytes * 8
        plain = sum(protocol.sn_layout(suite))
        sealed = (suite.g1_bytes + envelope.TAG_BYTES + plain) * 8
        return cls(point, point, sealed, message_bits, point, mode="actual")

    @property
    def per_submission(self) -> int:
        return self.u_bits + self.v_bits + self.m_bits + self.sn_bits


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")


def storage_batch(n: int, model: StorageModel | None = None) -> int:
    """Bits held by the data center for a slot of n submissions in batch mode."""
    _check_n(n)
    model = model or StorageModel.published()
    return model.u_bits + model.v_bits + n * model.m_bits + model.index_bits


def storage_unbatched(n: int, model: StorageModel | None = None) -> int:
    _check_n(n)
    model = model or StorageModel.published()
    return n * model.per_submission


# -- benchmark ----------------------------------------------------------------


def _child_rngs(rng, count: int):
    if isinstance(rng, random.Random) and not isinstance(rng, random.SystemRandom):
        return [random.Random(rng.getrandbits(64)) for _ in range(count)]
    return [secrets.SystemRandom() for _ in range(count)]


def _counted(fn, *args):
    with OperationCounter() as c:
        result = fn(*args)
    return result, c.counts()


def _parallel(fn, arg_lists: Sequence[tuple], counter: OperationCounter, phase: str, workers: int):
    if workers <= 1:
        with counter.phase(phase):
            return [fn(*args) for args in arg_lists]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        done = list(pool.map(lambda args: _counted(fn, *args), arg_lists))
    for _, counts in done:
        counter.add(counts, phase)
    return [r for r, _ in done]


def _bench_one(suite: BilinearSuite, n: int, rng, workers: int) -> dict:
    seconds: dict[str, float] = {}
    counter = OperationCounter()

    # CL-AS setup and key issuance, outside the measured phases
    kgc_keys = clas.AuthorityKeyPair.generate(suite, rng)
    kgc = clas.KeyGenerationCenter(suite, kgc_keys)
    keys = []
    for i in range(n):
        k = clas.ParticipantKeys.create(suite, b"bench-signer-%06d" % i, rng)
        q2, s2 = kgc.set_partial_key(k.id, k.Q1)
        keys.append(clas.ParticipantKeys(k.id, k.s1, k.Q1, q2, s2))
    messages = [b"health-record-%06d" % i for i in range(n)]
    rngs = _child_rngs(rng, n)

    @contextmanager
    def timed(label):
        t0 = time.perf_counter()
        yield
        seconds[label] = time.perf_counter() - t0

    with counter:
        with timed("signing"):
            sigs = _parallel(
                lambda k, m, r: clas.sign(suite, k, kgc_keys.pk_g1, m, r),
                list(zip(keys, messages, rngs)), counter, "signing", workers,
            )
        with timed("verification"), counter.phase("verification"):
            ok = all(clas.verify(suite, k.id, k.Q1, kgc_keys.pk_g2, m, s) for k, m, s in zip(keys, messages, sigs))
        items = [(k.id, k.Q1, m, s) for k, m, s in zip(keys, messages, sigs)]
        with timed("aggregation"), counter.phase("aggregation"):
            agg = clas.aggregate(suite, items)
        with timed("aggregate_verification"), counter.phase("aggregate_verification"):
            agg_ok = clas.aggregate_verify(suite, kgc_keys.pk_g2, agg)

    # MHCS flow
    _, ms_keys, dc_keys = protocol.ms_init(suite.security_level, rng)
    ms = protocol.ManagementServer(suite, ms_keys)
    dc = protocol.DataCenter(suite, dc_keys, ms_keys.pk_g2)
    people = [protocol.Participant.enroll(suite, ms, b"bench-patient-%06d" % i, rng) for i in range(n)]
    t_slot = 1_700_000_000
    slot = dc.open_slot(0, t_slot, t_slot + 3600)
    rngs = _child_rngs(rng, n)
    with counter:
        with timed("mhcs_signing"):
            subs = _parallel(
                lambda p, m, r: protocol.mhcs_sign(suite, p, ms_keys.pk_g1, dc_keys.pk_g1, m, t_slot + 1, r),
                list(zip(people, messages, rngs)), counter, "mhcs_signing", workers,
            )
        with timed("mhcs_aggregation"), counter.phase("mhcs_aggregation"):
            opened = [dc.receive(s, slot) for s in subs]
        with timed("mhcs_verification"), counter.phase("mhcs_verification"):
            single_ok = all(protocol.verify_single(suite, o, ms_keys.pk_g2) for o in opened)
        with counter.phase("mhcs_verification_recomputed"):
            all(protocol.verify_single(suite, o, ms_keys.pk_g2, recompute_hash=True) for o in opened)
        with timed("mhcs_batch_verification"), counter.phase("mhcs_batch_verification"):
            report = dc.close_slot(slot, localize=False)

    measured = {ph: counter.table(ph) for ph in counter.phases}
    envelope_ops = {ph: counter.counts(ph).get("E", 0) for ph in counter.phases}
    return {
        "n": n,
        "accepted": {
            "clas_verify_all": ok,
            "clas_aggregate_verify": agg_ok,
            "mhcs_verify_all": single_ok,
            "mhcs_batch_verify": report.verified,
        },
        "measured": measured,
        "envelope_ops": envelope_ops,
        "predicted": {ph: predicted_counts("Ours", ph, n) for ph in PHASES},
        "storage_bits": {
            "batch": storage_batch(n),
            "unbatched": storage_unbatched(n),
            "batch_actual": storage_batch(n, StorageModel.actual(suite)),
            "unbatched_actual": storage_unbatched(n, StorageModel.actual(suite)),
        },
        "seconds": seconds,
    }


def run_benchmark(
    n_values: Iterable[int],
    suite: BilinearSuite | None = None,
    seed: int | None = None,
    workers: int = 1,
) -> dict:
    """Measure per-phase operation counts for each batch size in ``n_values``.

    Returns a JSON-ready dict.  Wall-clock figures live under ``"seconds"``
    keys; everything else is deterministic when ``seed`` is given.
    """
    suite = suite or get_suite()
    rng = random.Random(seed) if seed is not None else secrets.SystemRandom()
    rows = []
    for n in n_values:
        if n < 1:
            raise ClasError(f"batch size must be positive, got {n}")
        rows.append(_bench_one(suite, n, rng, workers))
    return {
        "suite": suite.name,
        "security_level": suite.security_level,
        "seed": seed,
        "complexity_table": COMPLEXITY_TABLE,
        "storage_model": {"published": asdict(StorageModel.published()), "actual": asdict(StorageModel.actual(suite))},
        "rows": rows,
    }


CSV_PHASES = {
    "sign": "signing",
    "verify": "verification",
    "aggregate": "aggregation",
    "aggregate_verify": "aggregate_verification",
    "mhcs_sign": "mhcs_signing",
    "mhcs_verify": "mhcs_verification",
    "mhcs_aggregate": "mhcs_aggregation",
    "mhcs_batch_verify": "mhcs_batch_verification",
}
_CLASS_NAMES = {"H": "hashes", "S": "scalar_mults", "P": "pairings"}


def report_rows(report: dict) -> list[dict]:
    """Flatten a benchmark report into one wide row per n."""
    out = []
    for row in report["rows"]:
        flat: dict[str, object] = {"n": row["n"]}
        for short, phase in CSV_PHASES.items():
            for k, name in _CLASS_NAMES.items():
                flat[f"{name}_{short}"] = row["measured"][phase][k]
        for phase in PHASES:
            for k, name in _CLASS_NAMES.items():
                flat[f"table_{name}_{phase}"] = row["predicted"][phase][k]
        flat["storage_batch_bits"] = row["storage_bits"]["batch"]
        flat["storage_unbatched_bits"] = row["storage_bits"]["unbatched"]
        for phase, secs in row["seconds"].items():
            flat[f"seconds_{phase}"] = round(secs, 6)
        out.append(flat)
    return out


def to_csv(report: dict) -> str:
    rows = report_rows(report)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(counts: dict[str, int]) -> str:
    return " ".join(f"{k}={counts[k]}" for k in TABLE_CLASSES)


def to_text(report: dict) -> str:
    lines = [f"suite {report['suite']} (level {report['security_level']})", ""]
    header = f"{'n':>6}  {'phase':<24} {'measured':<22} {'table (Ours)':<22} {'seconds':>9}"
    lines += [header, "-" * len(header)]
    for row in report["rows"]:
        for phase in PHASES:
            lines.append(
                f"{row['n']:>6}  {phase:<24} {_fmt(row['measured'][phase]):<22} "
                f"{_fmt(row['predicted'][phase]):<22} {row['seconds'].get(phase, 0.0):>9.4f}"
            )
        for phase in ("mhcs_signing", "mhcs_aggregation", "mhcs_verification",
                      "mhcs_verification_recomputed", "mhcs_batch_verification"):
            lines.append(
                f"{row['n']:>6}  {phase:<24} {_fmt(row['measured'][phase]):<22} {'':<22} "
                f"{row['seconds'].get(phase, 0.0):>9.4f}"
            )
    lines += ["", f"{'n':>6}  {'batch bits':>12}  {'unbatched bits':>14}"]
    for row in report["rows"]:
        st = row["storage_bits"]
        lines.append(f"{row['n']:>6}  {st['batch']:>12}  {st['unbatched']:>14}")
    return "\n".join(lines)
