#!/usr/bin/env python3
"""Plot data-profile CSVs produced by run_benchmark.py or `stodars profile`.

Each curve shows the fraction of problem instances solved to the profile
tolerance against the evaluation budget in units of n+1.
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from stodars.bench import read_profiles_csv


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csvs", nargs="+", help="profile CSV files")
    ap.add_argument("--out", default="profiles.png")
    args = ap.parse_args()

    fig, axes = plt.subplots(1, len(args.csvs), squeeze=False,
                             figsize=(6 * len(args.csvs), 4.5))
    for ax, path in zip(axes[0], args.csvs):
        for curve in read_profiles_csv(path):
            xs = [b for b, _ in curve.points]
            ys = [f for _, f in curve.points]
            ax.step(xs, ys, where="post", label=curve.solver)
        ax.set_xlabel("evaluations / (n+1)")
        ax.set_ylabel("fraction of instances solved")
        ax.set_ylim(0.0, 1.0)
        ax.set_title(path)
        ax.legend(loc="lower right", fontsize=8)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
