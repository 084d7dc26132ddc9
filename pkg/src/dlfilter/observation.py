"""Synthetic observations drawn from the truth at observation times."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import RngStream, Role, obs_noise


@dataclass(frozen=True)
class ObservationSet:
    obs_index: int
    time_index: int
    locations: np.ndarray
    values: np.ndarray
    error_cov: np.ndarray

    @property
    def size(self):
        return len(self.values)


def draw_locations(grid, I, rng):
    """``I`` distinct grid nodes, uniformly without replacement."""
    if I > grid.K:
        raise ValueError(f"cannot draw {I} distinct locations from {grid.K} nodes")
    if I < 0:
        raise ValueError("observation count must be nonnegative")
    idx = rng.generator.choice(grid.K, size=I, replace=False)
    return grid.nodes[idx]


def observe(truth_values, grid, locations, obs_var, rng, obs_index=0, time_index=0):
    """Read the truth at on-grid ``locations`` and add ``N(0, obs_var)`` errors."""
    locations = np.asarray(locations, dtype=float)
    idx = np.rint(locations / grid.dx).astype(int) % grid.K
    if not np.allclose(grid.nodes[idx], locations, atol=1e-12):
        raise ValueError("observation locations must be grid nodes")
    values = np.asarray(truth_values)[idx] + obs_noise(rng, len(idx), obs_var)
    return ObservationSet(obs_index, time_index, locations, values, obs_var * np.eye(len(idx)))


def generate_observations(truth, grid, time_axis, I, obs_var, seed, replicate=0):
    """Observation sets for every observation time, from one dedicated stream."""
    rng = RngStream.for_role(seed, replicate, Role.OBSERVATION)
    out = []
    for m, n in enumerate(time_axis.obs_indices):
        locs = draw_locations(grid, I, rng)
        out.append(observe(truth[n], grid, locs, obs_var, rng, obs_index=m, time_index=n))
    return out
