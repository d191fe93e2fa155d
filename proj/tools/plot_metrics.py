#!/usr/bin/env python3
"""Plot a metrics CSV written by `caseidx bench`.

One PNG per experiment goes to the output directory. With --check the file is
only parsed and summarised, which needs nothing beyond the standard library.
"""

import argparse
import csv
import statistics
import sys
from collections import defaultdict
from pathlib import Path

HEADER = [
    "experiment", "run", "parameter_name", "parameter", "dataset_size", "n_shards",
    "elapsed_seconds", "space_bytes", "accuracy", "cache_hits", "cache_misses", "queries",
]

Y_COLUMN = {
    "exp1_index": ("elapsed_seconds", "index time (s)"),
    "exp2_knn": ("elapsed_seconds", "batch time (s)"),
    "exp3_range": ("elapsed_seconds", "batch time (s)"),
    "exp4_space": ("space_bytes", "space (bytes)"),
    "exp5_accuracy": ("accuracy", "accuracy"),
}


def load(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != HEADER:
            raise SystemExit(f"{path}: unexpected header {header}")
        rows = [dict(zip(HEADER, r)) for r in reader]
    for r in rows:
        if r["accuracy"] and not 0.0 <= float(r["accuracy"]) <= 1.0:
            raise SystemExit(f"{path}: accuracy out of range in {r}")
    return rows


def series(rows):
    """experiment -> dataset_size -> [(parameter, median y)]"""
    grouped = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    for r in rows:
        column, _ = Y_COLUMN.get(r["experiment"], ("elapsed_seconds", ""))
        if r[column] == "":
            continue
        grouped[r["experiment"]][int(r["dataset_size"])][float(r["parameter"])].append(
            float(r[column]))
    out = {}
    for exp, by_size in grouped.items():
        out[exp] = {
            size: sorted((p, statistics.median(v)) for p, v in points.items())
            for size, points in by_size.items()
        }
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("metrics")
    ap.add_argument("--out", default="plots")
    ap.add_argument("--check", action="store_true", help="parse and summarise only")
    args = ap.parse_args()

    data = series(load(args.metrics))
    if args.check:
        for exp, by_size in sorted(data.items()):
            for size, pts in sorted(by_size.items()):
                print(exp, size, " ".join(f"{p:g}:{y:g}" for p, y in pts))
        return 0

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is required for plotting (or pass --check)", file=sys.stderr)
        return 1

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for exp, by_size in sorted(data.items()):
        fig, ax = plt.subplots(figsize=(6, 4))
        if exp in ("exp1_index", "exp4_space"):
            pts = sorted(pt for size_pts in by_size.values() for pt in size_pts)
            ax.plot([p for p, _ in pts], [y for _, y in pts], marker="o")
        else:
            for size, pts in sorted(by_size.items()):
                ax.plot([p for p, _ in pts], [y for _, y in pts], marker="o", label=f"n={size}")
        ax.set_title(exp)
        ax.set_ylabel(Y_COLUMN.get(exp, ("", exp))[1])
        ax.set_xlabel({"exp2_knn": "k", "exp3_range": "radius"}.get(exp, "dataset size"))
        if exp == "exp3_range":
            ax.set_xscale("log")
        if ax.get_legend_handles_labels()[0]:
            ax.legend()
        fig.tight_layout()
        fig.savefig(out / f"{exp}.png", dpi=120)
        plt.close(fig)
        print(out / f"{exp}.png")
    return 0


if __name__ == "__main__":
    sys.exit(main())
