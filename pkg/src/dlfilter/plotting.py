"""SVG figures rendered from the CSV artifacts only."""
from __future__ import annotations

import os
from collections import defaultdict

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .metrics import METRICS

matplotlib.rcParams["svg.hashsalt"] = "dlfilter"
matplotlib.rcParams["svg.fonttype"] = "none"

COLORS = {"kf": "tab:red", "dlf": "tab:blue", "truth": "black"}
LABELS = {"rms": "RMS error", "mass": "Mass error", "com": "CoM error", "calibration": "Calibration"}


def _save(fig, path):
    FigureCanvasSVG(fig)
    fig.savefig(path, format="svg", metadata={"Date": None})


def _grid_from_rows(rows, value_key):
    ns = sorted({int(r["n"]) for r in rows})
    ks = sorted({int(r["k"]) for r in rows})
    out = np.full((len(ns), len(ks)), np.nan)
    for r in rows:
        out[int(r["n"]), int(r["k"])] = float(r[value_key])
    t = np.array(sorted({float(r["t"]) for r in rows}))
    x = np.array(sorted({float(r["x"]) for r in rows}))
    return t, x, out


def field_plot(path, title, rows, value_key, characteristics=None, observations=None):
    t, x, values = _grid_from_rows(rows, value_key)
    fig = Figure(figsize=(4.0, 4.0))
    ax = fig.add_subplot()
    mesh = ax.pcolormesh(x, t, values, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax)
    if characteristics:
        paths = defaultdict(list)
        for r in characteristics:
            paths[(r["m"], r["i"])].append((float(r["t"]), float(r["x"])))
        for pts in paths.values():
            pts.sort()
            tt, xx = np.array(pts).T
            # break lines where the path wraps around the periodic boundary
            jumps = np.flatnonzero(np.abs(np.diff(xx)) > 0.5) + 1
            for seg_t, seg_x in zip(np.split(tt, jumps), np.split(xx, jumps)):
                ax.plot(seg_x, seg_t, color="black", lw=0.3)
    if observations:
        ax.scatter([float(r["y"]) for r in observations], [float(r["t"]) for r in observations],
                   s=8, facecolors="none", edgecolors="black", lw=0.5)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def metric_series_plot(path, metric, series_rows):
    curves = defaultdict(lambda: defaultdict(list))
    for r in series_rows:
        if r["metric"] == metric and r["scope"] == "series":
            curves[r["filter"]][float(r["t"])].append(float(r["value"]))
    fig = Figure(figsize=(5.0, 3.2))
    ax = fig.add_subplot()
    for mode in sorted(curves):
        ts = sorted(curves[mode])
        ax.plot(ts, [np.mean(curves[mode][t]) for t in ts], color=COLORS.get(mode), label=mode.upper())
    ax.set_xlabel("t")
    ax.set_ylabel(LABELS[metric])
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def summary_boxplot(path, metric, summary_rows):
    rows = [r for r in summary_rows if r["metric"] == metric]
    cells = sorted({(float(r["alpha"]), int(r["I"])) for r in rows})
    modes = sorted({r["filter"] for r in rows})
    fig = Figure(figsize=(max(4.0, 0.9 * len(cells) * len(modes)), 3.5))
    ax = fig.add_subplot()
    stats, positions, colors = [], [], []
    for c, cell in enumerate(cells):
        for j, mode in enumerate(modes):
            match = [r for r in rows if (float(r["alpha"]), int(r["I"])) == cell and r["filter"] == mode]
            if not match:
                continue
            r = match[0]
            stats.append({"whislo": float(r["min"]), "q1": float(r["q25"]), "med": float(r["median"]),
                          "q3": float(r["q75"]), "whishi": float(r["max"]), "label": ""})
            positions.append(c * (len(modes) + 1) + j)
            colors.append(COLORS.get(mode, "gray"))
    if stats:
        art = ax.bxp(stats, positions=positions, showfliers=False, patch_artist=True)
        for box, col in zip(art["boxes"], colors):
            box.set_facecolor(col)
            box.set_alpha(0.6)
    ax.set_xticks([c * (len(modes) + 1) + (len(modes) - 1) / 2 for c in range(len(cells))])
    ax.set_xticklabels([f"a={a:g}\nI={i}" for a, i in cells], fontsize=7)
    ax.set_ylabel(LABELS[metric])
    ax.set_title(" / ".join(f"{m.upper()}" for m in modes))
    fig.tight_layout()
    _save(fig, path)


def alpha_curve_plot(path, metric, curve_rows):
    fig = Figure(figsize=(5.0, 3.2))
    ax = fig.add_subplot()
    modes = sorted({r["filter"] for r in curve_rows})
    for mode in modes:
        pts = sorted((float(r["alpha"]), float(r["mean"])) for r in curve_rows
                     if r["filter"] == mode and r["metric"] == metric)
        if pts:
            a, v = np.array(pts).T
            ax.plot(a, v, marker="o", color=COLORS.get(mode), label=mode.upper())
    ax.set_xscale("log")
    ax.set_xlabel("alpha")
    ax.set_ylabel(LABELS[metric])
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def replot(out_dir):
    """Regenerate every SVG that the CSVs present in ``out_dir`` support."""
    from .experiment import read_csv

    def path(name):
        return os.path.join(out_dir, name)

    written = []
    chars = read_csv(path("characteristics.csv")) if os.path.exists(path("characteristics.csv")) else None
    obs = read_csv(path("observations.csv")) if os.path.exists(path("observations.csv")) else None
    if os.path.exists(path("truth.csv")):
        field_plot(path("field_truth.svg"), "Truth", read_csv(path("truth.csv")), "u",
                   observations=obs)
        written.append("field_truth.svg")
    for mode in ("kf", "dlf"):
        src = path(f"posterior_{mode}.csv")
        if os.path.exists(src):
            field_plot(path(f"field_{mode}.svg"), f"{mode.upper()} posterior mean", read_csv(src),
                       "mean", characteristics=chars if mode == "dlf" else None, observations=obs)
            written.append(f"field_{mode}.svg")
    if os.path.exists(path("series.csv")):
        rows = read_csv(path("series.csv"))
        for metric in METRICS:
            metric_series_plot(path(f"series_{metric}.svg"), metric, rows)
            written.append(f"series_{metric}.svg")
    if os.path.exists(path("summary.csv")):
        rows = read_csv(path("summary.csv"))
        for metric in METRICS:
            summary_boxplot(path(f"box_{metric}.svg"), metric, rows)
            written.append(f"box_{metric}.svg")
    if os.path.exists(path("alpha_curve.csv")):
        rows = read_csv(path("alpha_curve.csv"))
        for metric in METRICS:
            alpha_curve_plot(path(f"alpha_{metric}.svg"), metric, rows)
            written.append(f"alpha_{metric}.svg")
    return written
