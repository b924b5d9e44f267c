"""H, S and P totals across all four phases as n grows.

The three reference schemes come from their symbolic table rows only; the
"Ours (measured)" columns are instrumented runs of this implementation.
"""

import argparse
import csv
import sys

from clas_mhcs import metrics
from clas_mhcs.group import get_suite


def totals(counts_by_phase):
    counts = list(counts_by_phase)
    return {k: sum(c[k] for c in counts) for k in "HSP"}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--participants", default="1,20,40,60,80,100")
    ap.add_argument("--level", type=int, default=128)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args(argv)

    sizes = [int(x) for x in args.participants.split(",")]
    report = metrics.run_benchmark(sizes, get_suite(args.level), args.seed)
    schemes = list(metrics.COMPLEXITY_TABLE)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["n", "op", *schemes, "Ours (measured)"])
    for row in report["rows"]:
        n = row["n"]
        measured = totals(row["measured"][ph] for ph in metrics.PHASES)
        table = {s: totals(metrics.predicted_counts(s, ph, n) for ph in metrics.PHASES) for s in schemes}
        for op in "HSP":
            w.writerow([n, op, *(table[s][op] for s in schemes), measured[op]])
    if args.out:
        fh.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
