"""Data-center storage versus slot size, batched and unbatched.

Writes one CSV row per n with the published bit sizes and the sizes of this
implementation's actual encodings.
"""

import argparse
import csv
import sys

from clas_mhcs import metrics
from clas_mhcs.group import get_suite


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=1000)
    ap.add_argument("--step", type=int, default=10)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args(argv)

    published = metrics.StorageModel.published()
    actual = {lvl: metrics.StorageModel.actual(get_suite(lvl)) for lvl in (80, 128)}
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["n", "batch_published", "unbatched_published", "batch_type_a", "unbatched_type_a",
                "batch_bls12_381", "unbatched_bls12_381"])
    for n in sorted({1, *range(args.step, args.max_n + 1, args.step)}):
        w.writerow([
            n,
            metrics.storage_batch(n, published), metrics.storage_unbatched(n, published),
            metrics.storage_batch(n, actual[80]), metrics.storage_unbatched(n, actual[80]),
            metrics.storage_batch(n, actual[128]), metrics.storage_unbatched(n, actual[128]),
        ])
    if args.out:
        fh.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
