"""CSV writers/readers for metrics, identified coefficients and comparisons,
plus the generated plotting script."""
from __future__ import annotations

import csv
from dataclasses import fields
from pathlib import Path

from .sim import Metrics, TrajectoryLog

RATIO_METRICS = ("rms_e_q", "max_abs_e_q", "rms_e_theta", "max_abs_e_theta")


def _g(v) -> str:
    return format(float(v), ".17g")


def write_metrics_csv(m: Metrics, path) -> None:
    with Path(path).open("w", newline="") as fh:
        fh.write("metric,value\n")
        for f in fields(m):
            v = getattr(m, f.name)
            fh.write(f"{f.name},{v if isinstance(v, int) else _g(v)}\n")


def read_metrics_csv(path) -> Metrics:
    with Path(path).open(newline="") as fh:
        rows = {r["metric"]: r["value"] for r in csv.DictReader(fh)}
    kw = {}
    for f in fields(Metrics):
        kw[f.name] = int(rows[f.name]) if f.type in (int, "int") else float(rows[f.name])
    return Metrics(**kw)


def write_coefficients_csv(log: TrajectoryLog, path) -> None:
    names = ("t", "a2", "a3", "b2", "residual")
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*(log[n] for n in names)):
            fh.write(",".join(_g(v) for v in row) + "\n")


def read_coefficients_csv(path) -> dict:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {h: [] for h in header}
        for row in reader:
            for h, v in zip(header, row):
                cols[h].append(float(v))
    return cols


def write_comparison_csv(csm: Metrics, dsm: Metrics, path) -> None:
    with Path(path).open("w", newline="") as fh:
        fh.write("metric,csm,dsm,ratio_dsm_over_csm\n")
        for f in fields(Metrics):
            a, b = getattr(csm, f.name), getattr(dsm, f.name)
            if f.name in RATIO_METRICS:
                ratio = _g(b / a) if a != 0 else "nan"
            else:
                ratio = ""
            fa = str(a) if isinstance(a, int) else _g(a)
            fb = str(b) if isinstance(b, int) else _g(b)
            fh.write(f"{f.name},{fa},{fb},{ratio}\n")


def read_comparison_csv(path) -> dict:
    """``{metric: (csm, dsm, ratio or None)}``."""
    out = {}
    with Path(path).open(newline="") as fh:
        for r in csv.DictReader(fh):
            ratio = r["ratio_dsm_over_csm"]
            out[r["metric"]] = (float(r["csm"]), float(r["dsm"]), float(ratio) if ratio else None)
    return out


PLOT_SCRIPT = '''"""Regenerate error/command figures and W(s) coefficient histories from the CSV logs.

Usage: python plot_figures.py [directory]   (requires matplotlib)
"""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {h: [] for h in header}
        for row in reader:
            for h, v in zip(header, row):
                cols[h].append(float(v))
    return cols


def error_figure(log, title, out):
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 7))
    axes[0].plot(log["t"], log["e_theta"])
    axes[0].set_ylabel("pitch angle error [rad]")
    axes[1].plot(log["t"], log["e_q"])
    axes[1].set_ylabel("pitch rate error [rad/s]")
    axes[2].plot(log["t"], log["delta_c"], lw=0.5)
    axes[2].set_ylabel("command [rad]")
    axes[2].set_xlabel("t [s]")
    axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def main(root):
    root = Path(root)
    for name in ("csm", "dsm"):
        path = root / f"{name}_trajectory.csv"
        if path.exists():
            error_figure(load(path), f"{name.upper()} autopilot", root / f"{name}_errors.png")
    coeff = root / "dsm_coefficients.csv"
    if coeff.exists():
        c = load(coeff)
        fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 7))
        for ax, key in zip(axes, ("a2", "a3", "b2")):
            ax.plot(c["t"], c[key])
            ax.set_ylabel(key)
        axes[-1].set_xlabel("t [s]")
        axes[0].set_title("W(s) coefficients identified on line")
        fig.tight_layout()
        fig.savefig(root / "dsm_coefficients.png", dpi=120)
        plt.close(fig)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent)
'''


def write_plot_script(path) -> None:
    Path(path).write_text(PLOT_SCRIPT)
