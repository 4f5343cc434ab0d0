#!/usr/bin/env python3
"""Plot per-slot MSE curves from a beamtrack mse.csv.

Usage: python3 docs/plot_mse.py results/mse.csv [--param aoa] [--out plot.png]
"""

import argparse
import csv
from collections import defaultdict

import matplotlib.pyplot as plt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", help="path to an mse.csv produced by beamtrack")
    ap.add_argument("--param", default="aoa", help="parameter column to plot")
    ap.add_argument("--out", help="write a PNG instead of opening a window")
    args = ap.parse_args()

    curves = defaultdict(list)
    with open(args.csv) as fh:
        rows = (line for line in fh if not line.startswith("#"))
        for row in csv.DictReader(rows):
            if row["parameter"] == args.param:
                curves[row["filter"]].append((int(row["slot"]), float(row["mse"])))

    if not curves:
        raise SystemExit(f"no rows with parameter {args.param!r} in {args.csv}")

    for name, points in sorted(curves.items()):
        points.sort()
        plt.semilogy([s for s, _ in points], [m for _, m in points], marker="o", label=name)
    plt.xlabel("time slot")
    plt.ylabel(f"{args.param} MSE")
    plt.grid(True, which="both", alpha=0.3)
    plt.legend()
    if args.out:
        plt.savefig(args.out, dpi=150, bbox_inches="tight")
        print(f"wrote {args.out}")
    else:
        plt.show()


if __name__ == "__main__":
    main()
