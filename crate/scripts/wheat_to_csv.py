#!/usr/bin/env python3
"""Convert the Iyer (1942) wheat uniformity trial to a cinar grid CSV.

Input is a long-format CSV with columns row, col, yield, as written by R:

    library(agridat)
    write.csv(iyer.wheat.uniformity, "iyer.csv", row.names = FALSE)

Output is a headerless 25 x 80 grid of counts (yield in half ounces), one
line per row index. The script checks the sample mean 33.8425 and prints the
sha256 of the written file.
"""

import argparse
import csv
import hashlib
import sys

EXPECTED_MEAN = 33.8425


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", help="long-format CSV with row, col, yield")
    ap.add_argument("output", help="grid CSV to write")
    ap.add_argument("--transpose", action="store_true", help="swap row and column indices")
    args = ap.parse_args()

    cells = {}
    with open(args.input, newline="") as f:
        for rec in csv.DictReader(f):
            r, c = int(rec["row"]), int(rec["col"])
            if args.transpose:
                r, c = c, r
            y = float(rec["yield"])
            if y != round(y) or y < 0:
                sys.exit(f"row {r} col {c}: yield {y} is not a count")
            cells[(r, c)] = int(round(y))

    rows = sorted({r for r, _ in cells})
    cols = sorted({c for _, c in cells})
    if len(cells) != len(rows) * len(cols):
        sys.exit("input is not a complete rectangle")
    if (len(rows), len(cols)) != (25, 80):
        print(f"warning: grid is {len(rows)} x {len(cols)}, expected 25 x 80 (try --transpose)", file=sys.stderr)

    with open(args.output, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        for r in rows:
            w.writerow([cells[(r, c)] for c in cols])

    mean = sum(cells.values()) / len(cells)
    digest = hashlib.sha256(open(args.output, "rb").read()).hexdigest()
    print(f"{len(rows)} x {len(cols)}, mean {mean:.4f}, sha256 {digest}")
    if abs(mean - EXPECTED_MEAN) > 5e-5:
        sys.exit(f"sample mean {mean} differs from {EXPECTED_MEAN}")


if __name__ == "__main__":
    main()
