"""Initial data for the filters: sampled initial field and its prior covariance."""
from __future__ import annotations

import numpy as np

from .filters import GaussianState
from .noise import RngStream, Role
from .truth import initial_field

INIT_MODES = ("deterministic", "amplitude", "phase", "both")
SIGMA_RANGE = (0.5, 1.5)
THETA_RANGE = (0.0, 1.0)
# diagonal floor keeping the initial covariance positive definite
COV_FLOOR = 1e-6
_THETA_NODES = 2000


def _sigma_moments(uncertain, sigma):
    if not uncertain:
        return sigma, sigma**2
    lo, hi = SIGMA_RANGE
    mean = 0.5 * (lo + hi)
    return mean, mean**2 + (hi - lo) ** 2 / 12.0


def _shape_moments(grid, uncertain, theta):
    if not uncertain:
        s = initial_field(grid, 1.0, theta)
        return s, np.outer(s, s)
    lo, hi = THETA_RANGE
    # midpoint rule over the uniform phase prior
    thetas = lo + (np.arange(_THETA_NODES) + 0.5) * (hi - lo) / _THETA_NODES
    shapes = np.stack([initial_field(grid, 1.0, th) for th in thetas])
    return shapes.mean(axis=0), shapes.T @ shapes / _THETA_NODES


def prior_covariance(grid, mode="deterministic", sigma=1.0, theta=0.5, floor=COV_FLOOR):
    """Covariance of ``sigma * shape(theta)`` under the initial-data prior of ``mode``."""
    if mode not in INIT_MODES:
        raise ValueError(f"unknown init mode {mode!r}")
    floor_cov = floor * np.eye(grid.K)
    if mode == "deterministic":
        return floor_cov
    m1, m2 = _sigma_moments(mode in ("amplitude", "both"), sigma)
    s_mean, s_second = _shape_moments(grid, mode in ("phase", "both"), theta)
    cov = m2 * s_second - m1**2 * np.outer(s_mean, s_mean)
    return 0.5 * (cov + cov.T) + floor_cov


def sample_initial_parameters(mode, seed, replicate, sigma=1.0, theta=0.5):
    """Draw the filters' ``(sigma, theta)`` for one replicate."""
    if mode not in INIT_MODES:
        raise ValueError(f"unknown init mode {mode!r}")
    rng = RngStream.for_role(seed, replicate, Role.INITIAL_DATA).generator
    draw_sigma = rng.uniform(*SIGMA_RANGE)
    draw_theta = rng.uniform(*THETA_RANGE)
    if mode in ("amplitude", "both"):
        sigma = draw_sigma
    if mode in ("phase", "both"):
        theta = draw_theta
    return float(sigma), float(theta)


def initial_state(grid, mode="deterministic", sigma=1.0, theta=0.5, floor=COV_FLOOR):
    return GaussianState(initial_field(grid, sigma, theta),
                         prior_covariance(grid, mode, sigma, theta, floor), 0)
