#!/usr/bin/env python3
"""Plot reward_ma against episode for one or more run directories.

    python3 docs/plot_metrics.py runs/a runs/b -o curves.png

Needs matplotlib. Not used by the build or the tests.
"""
import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(run_dir):
    with open(Path(run_dir) / "metrics.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    return [int(r["episode"]) + 1 for r in rows], [float(r["reward_ma"]) for r in rows]


def read_config(run_dir):
    cfg = {}
    for line in (Path(run_dir) / "config.txt").read_text().splitlines():
        if "=" in line and not line.startswith("#"):
            k, v = line.split("=", 1)
            cfg[k.strip()] = v.strip()
    return cfg


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("runs", nargs="+")
    ap.add_argument("-o", "--out", default="reward_ma.png")
    args = ap.parse_args()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for run in args.runs:
        cfg = read_config(run)
        x, y = load(run)
        label = f"{cfg.get('algorithm')} lambda_tp={cfg.get('lambda_tp')} seed={cfg.get('seed')}"
        ax.plot(x, y, label=label, linewidth=1)
    ax.set_xlabel("episodes")
    ax.set_ylabel("reward moving average")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
