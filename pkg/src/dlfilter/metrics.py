"""Quality metrics comparing a posterior trajectory against the truth.

Every metric returns ``(series, total)``: ``series`` holds the per-time value
for ``n = 0..N`` and ``total`` aggregates over ``n = 1..N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

METRICS = ("rms", "mass", "com", "calibration")


def _check(truth, mean):
    truth = np.atleast_2d(np.asarray(truth, dtype=float))
    mean = np.atleast_2d(np.asarray(mean, dtype=float))
    if truth.shape != mean.shape:
        raise ValueError(f"trajectory shapes differ: {truth.shape} vs {mean.shape}")
    return truth, mean


def _time_total(series, dt):
    return math.sqrt(dt * float(np.sum(series[1:] ** 2)))


def rms_error(truth, mean, grid, dt):
    truth, mean = _check(truth, mean)
    series = np.sqrt(grid.dx * np.sum((truth - mean) ** 2, axis=1))
    return series, _time_total(series, dt)


def mass_error(truth, mean, grid, dt):
    truth, mean = _check(truth, mean)
    series = grid.dx * np.abs(np.abs(truth).sum(axis=1) - np.abs(mean).sum(axis=1))
    return series, _time_total(series, dt)


def center_of_mass(field_values, grid):
    """Absolute-value weighted mean node position; ``nan`` for an all-zero field."""
    w = np.abs(np.atleast_2d(field_values))
    total = w.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, (w @ grid.nodes) / total, np.nan)


def com_error(truth, mean, grid, dt):
    """CoM distance series; times where either field vanishes contribute 0.

    Returns ``(series, total, degenerate)`` with ``degenerate`` a boolean mask
    of the flagged times.
    """
    truth, mean = _check(truth, mean)
    diff = np.abs(center_of_mass(truth, grid) - center_of_mass(mean, grid))
    degenerate = ~np.isfinite(diff)
    series = np.where(degenerate, 0.0, diff)
    return series, _time_total(series, dt), degenerate


def calibration(truth, mean, variance):
    """Fraction of cells with ``|truth - mean| < 2 sd``, per time and over ``n >= 1``."""
    truth, mean = _check(truth, mean)
    variance = np.atleast_2d(np.asarray(variance, dtype=float))
    if np.any(variance < 0):
        raise ValueError("variances must be nonnegative")
    inside = np.abs(truth - mean) < 2.0 * np.sqrt(variance)
    series = inside.mean(axis=1)
    total = float(inside[1:].mean()) if len(inside) > 1 else float(series[0])
    return series, total


@dataclass
class MetricsSeries:
    series: dict = field(default_factory=dict)
    totals: dict = field(default_factory=dict)
    degenerate_com: np.ndarray = None


def evaluate(truth, mean, variance, grid, dt):
    rms_s, rms_t = rms_error(truth, mean, grid, dt)
    mass_s, mass_t = mass_error(truth, mean, grid, dt)
    com_s, com_t, degenerate = com_error(truth, mean, grid, dt)
    cal_s, cal_t = calibration(truth, mean, variance)
    return MetricsSeries(
        series={"rms": rms_s, "mass": mass_s, "com": com_s, "calibration": cal_s},
        totals={"rms": rms_t, "mass": mass_t, "com": com_t, "calibration": cal_t},
        degenerate_com=degenerate,
    )
