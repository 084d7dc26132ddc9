"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np

from .observation import ObservationSet


def check_field(values, K, name="field"):
    v = np.asarray(values, dtype=float)
    if v.shape != (K,):
        raise ValueError(f"{name} must have shape ({K},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


def check_covariance(cov, K, name="covariance", tol=1e-8):
    c = np.asarray(cov, dtype=float)
    if np.ndim(c) == 0:
        c = float(c) * np.eye(K)
    if c.shape != (K, K):
        raise ValueError(f"{name} must have shape ({K}, {K}), got {c.shape}")
    if not np.allclose(c, c.T, atol=tol * max(1.0, np.abs(c).max())):
        raise ValueError(f"{name} must be symmetric")
    c = 0.5 * (c + c.T)
    if np.linalg.eigvalsh(c).min() < -tol * max(1.0, np.abs(c).max()):
        raise ValueError(f"{name} must be positive semidefinite")
    return c


def check_observations(observations, time_axis, grid):
    obs = list(observations)
    for o in obs:
        if not isinstance(o, ObservationSet):
            raise TypeError(f"expected ObservationSet, got {type(o).__name__}")
        if not time_axis.is_obs_index(o.time_index):
            raise ValueError(f"observation at step {o.time_index} is not an observation time")
        loc = np.asarray(o.locations)
        if loc.size and (loc.min() < 0 or loc.max() >= grid.L):
            raise ValueError("observation locations must lie in [0, L)")
        if o.error_cov.shape != (o.size, o.size):
            raise ValueError("observation error covariance has the wrong shape")
    return sorted(obs, key=lambda o: o.time_index)
