"""Periodic grid, time axis and linear interpolation onto grid nodes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# fractional cell offsets this close to an integer are snapped onto the node
_NODE_SNAP = 1e-9


def wrap(x, L=1.0):
    """Map positions onto the half-open periodic interval ``[0, L)``."""
    if L <= 0:
        raise ValueError("domain length must be positive")
    out = np.mod(x, L)
    # np.mod can return L itself for tiny negative inputs
    out = np.where(out >= L, 0.0, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Grid:
    """Equispaced periodic grid with ``K`` nodes ``x^k = k * dx`` on ``[0, L)``."""

    K: int = 100
    L: float = 1.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ValueError(f"grid needs at least 2 nodes, got K={self.K}")
        if self.L <= 0:
            raise ValueError("domain length must be positive")
        object.__setattr__(self, "K", int(self.K))

    @classmethod
    def from_spacing(cls, dx=0.01, L=1.0):
        K = int(round(L / dx))
        if not math.isclose(K * dx, L, rel_tol=1e-9):
            raise ValueError(f"spacing {dx} does not divide length {L}")
        return cls(K=K, L=L)

    @property
    def dx(self):
        return self.L / self.K

    @property
    def nodes(self):
        return np.arange(self.K) * self.dx


@dataclass(frozen=True)
class TimeAxis:
    """Estimation times ``t_n = n * dt`` for ``n = 0..N`` and the observation subset."""

    dt: float = 0.005
    N: int = 100
    obs_indices: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("time step must be positive")
        if self.N < 0:
            raise ValueError("step count must be nonnegative")
        idx = tuple(int(i) for i in self.obs_indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("observation indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] > self.N):
            raise ValueError("observation indices must lie in 0..N")
        object.__setattr__(self, "obs_indices", idx)

    @classmethod
    def from_times(cls, tN=0.5, dt=0.005, obs_times=()):
        N = int(round(tN / dt))
        if not math.isclose(N * dt, tN, rel_tol=1e-9):
            raise ValueError(f"step {dt} does not divide final time {tN}")
        idx = []
        for t in obs_times:
            n = int(round(t / dt))
            if not math.isclose(n * dt, t, rel_tol=1e-9, abs_tol=1e-12):
                raise ValueError(f"observation time {t} is not on the time axis")
            idx.append(n)
        return cls(dt=dt, N=N, obs_indices=tuple(idx))

    @property
    def tN(self):
        return self.N * self.dt

    @property
    def times(self):
        return np.arange(self.N + 1) * self.dt

    @property
    def obs_times(self):
        return np.asarray(self.obs_indices, dtype=float) * self.dt

    @property
    def M(self):
        return len(self.obs_indices)

    def is_obs_index(self, n):
        return n in self.obs_indices


@dataclass(frozen=True)
class InterpRow:
    """Sparse row of the linear interpolation operator: node pair and weights."""

    left_index: int
    right_index: int
    weights: tuple

    def apply(self, values):
        w0, w1 = self.weights
        return w0 * values[self.left_index] + w1 * values[self.right_index]

    def dense(self, K):
        row = np.zeros(K)
        row[self.left_index] += self.weights[0]
        row[self.right_index] += self.weights[1]
        return row


def _cell_coordinates(xs, grid):
    q = wrap(np.asarray(xs, dtype=float), grid.L) / grid.dx
    q = np.atleast_1d(q)
    nearest = np.rint(q)
    q = np.where(np.abs(q - nearest) < _NODE_SNAP, nearest, q)
    left = np.floor(q)
    r = q - left
    left = left.astype(int) % grid.K
    return left, r


def interp_row(x, grid):
    """Linear interpolation row for a single position, periodic across ``L``."""
    left, r = _cell_coordinates([x], grid)
    ell = int(left[0])
    r = float(r[0])
    return InterpRow(ell, (ell + 1) % grid.K, (1.0 - r, r))


def interp_matrix(xs, grid):
    """Stack interpolation rows for every position in ``xs`` into an ``I x K`` matrix."""
    xs = np.asarray(xs, dtype=float).ravel()
    H = np.zeros((xs.size, grid.K))
    if xs.size == 0:
        return H
    left, r = _cell_coordinates(xs, grid)
    rows = np.arange(xs.size)
    np.add.at(H, (rows, left), 1.0 - r)
    np.add.at(H, (rows, (left + 1) % grid.K), r)
    return H
