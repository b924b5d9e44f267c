"""Measured operation counts per phase next to the published "Ours" row.

    python scripts/reproduce_complexity_table.py --participants 1,10,100,1000 --out results/
"""

import argparse
import json
from pathlib import Path

from clas_mhcs import metrics
from clas_mhcs.group import get_suite


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--participants", default="1,10,100,1000")
    ap.add_argument("--level", type=int, default=128)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)

    sizes = [int(x) for x in args.participants.split(",")]
    report = metrics.run_benchmark(sizes, get_suite(args.level), args.seed, args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "complexity.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    (out / "complexity.csv").write_text(metrics.to_csv(report))
    print(metrics.to_text(report))

    mismatches = []
    for row in report["rows"]:
        for phase in metrics.PHASES:
            if row["measured"][phase] != row["predicted"][phase]:
                mismatches.append((row["n"], phase, row["measured"][phase], row["predicted"][phase]))
    print("\nphases differing from the published row:")
    for n, phase, got, want in mismatches:
        print(f"  n={n:<5} {phase:<24} measured {got}  published {want}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
