"""
Plot CLI outputs
================

Draws a training curve CSV (from ``adl train``) and, optionally, a benchmark
CSV (from ``adl bench``) to PNG files next to them. Needs matplotlib.

    python demos/plot_results.py runs/tiny_train/training_curve.csv [runs/plausibility/bench.csv]
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def plot_curve(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    for ax, col in zip(axes, ("loss", "r2_batch", "l0_mean")):
        ax.plot(data["step"], data[col], lw=1)
        ax.set_xlabel("step")
        ax.set_title(col)
    fig.tight_layout()
    out = Path(path).with_suffix(".png")
    fig.savefig(out, dpi=120)
    print("wrote", out)


def plot_bench(path):
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    methods = [r[0] for r in rows]
    # identifiability tables lead with the mean; plausibility tables list one column per k
    cols = header[1:2] if header[1] == "mean_accuracy" else header[1:]
    fig, ax = plt.subplots(figsize=(1.2 * len(methods) + 2, 3.5))
    width = 0.8 / len(cols)
    x = np.arange(len(methods))
    for i, col in enumerate(cols):
        j = header.index(col)
        ax.bar(x + i * width, [float(r[j]) for r in rows], width, label=col)
    ax.set_xticks(x + 0.4 - width / 2)
    ax.set_xticklabels(methods, rotation=30)
    ax.legend()
    fig.tight_layout()
    out = Path(path).with_suffix(".png")
    fig.savefig(out, dpi=120)
    print("wrote", out)


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    plot_curve(sys.argv[1])
    if len(sys.argv) > 2:
        plot_bench(sys.argv[2])
