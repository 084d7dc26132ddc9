"""Coarse forward model used by both filters.

One model step is a Lie split: explicit-Euler upwind advection followed by
exact Fourier diffusion.  Both pieces are linear, so the step is materialized
as a dense ``K x K`` matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .grid import Grid
from .noise import NoiseSpec
from .truth import CFLError, cosine_speed, diffusion_step_exact, zero_forcing


@dataclass(frozen=True)
class ModelOperator:
    matrix: np.ndarray
    time_index: int = 0

    def __matmul__(self, other):
        return self.matrix @ other


def upwind_matrix(grid, c_values, dt):
    """Explicit Euler upwind matrix for ``u_t = c u_x`` with nodal speeds ``c_values``."""
    K = grid.K
    nu = np.broadcast_to(np.asarray(c_values, dtype=float), (K,)) * dt / grid.dx
    peak = float(np.max(np.abs(nu)))
    if peak > 1.0 + 1e-12:
        raise CFLError(peak)
    A = np.diag(1.0 - np.abs(nu))
    idx = np.arange(K)
    pos = nu >= 0
    # c > 0 carries information from the right neighbour, c < 0 from the left
    A[idx[pos], (idx[pos] + 1) % K] += nu[pos]
    A[idx[~pos], (idx[~pos] - 1) % K] += -nu[~pos]
    return A


@lru_cache(maxsize=64)
def _diffusion_matrix(K, L, alpha, dt):
    grid = Grid(K=K, L=L)
    eye = np.eye(K)
    # columns of the circulant diffusion propagator
    return np.stack([diffusion_step_exact(eye[:, j], alpha, dt, grid) for j in range(K)], axis=1)


def diffusion_matrix(grid, alpha, dt):
    return _diffusion_matrix(grid.K, grid.L, float(alpha), float(dt)).copy()


def build_operator(grid, t_n, dt, alpha, c_fn=cosine_speed, time_index=0):
    adv = upwind_matrix(grid, c_fn(grid.nodes, t_n), dt)
    if alpha == 0:
        return ModelOperator(adv, time_index)
    return ModelOperator(_diffusion_matrix(grid.K, grid.L, float(alpha), float(dt)) @ adv,
                         time_index)


@lru_cache(maxsize=16)
def _derivative_matrices(K, dx):
    eye = np.eye(K)
    up = np.roll(eye, 1, axis=1)   # (up @ v)[k] = v[k + 1]
    down = np.roll(eye, -1, axis=1)  # (down @ v)[k] = v[k - 1]
    D1 = (up - down) / (2.0 * dx)
    D2 = (up - 2.0 * eye + down) / dx**2
    D1.setflags(write=False)
    D2.setflags(write=False)
    return D1, D2


def derivative_matrices(grid):
    """Periodic centred first and second difference matrices."""
    return _derivative_matrices(grid.K, grid.dx)


def model_derivatives(values, grid):
    v = np.asarray(values, dtype=float)
    vp = np.roll(v, -1)
    vm = np.roll(v, 1)
    return (vp - vm) / (2.0 * grid.dx), (vp - 2.0 * v + vm) / grid.dx**2


def process_noise_cov(values, noise, dt, grid, include_tilde=False):
    """Euler-Maruyama covariance of the model noise over one step.

    ``Q = dt (B^2 I + A^2 diag(g^2))`` with ``g`` the centred gradient of
    ``values``; the constant phase-speed term ``A_tilde^2 g g^T`` is added
    only when ``include_tilde`` is set.
    """
    g, _ = model_derivatives(values, grid)
    Q = np.diag(noise.B**2 + noise.A**2 * g**2)
    if include_tilde and noise.A_tilde > 0:
        Q = Q + noise.A_tilde**2 * np.outer(g, g)
    return dt * Q


def propagate_moments(mean, cov, op, f_n, Q, dt):
    L = op.matrix if isinstance(op, ModelOperator) else np.asarray(op)
    new_mean = L @ mean + dt * f_n
    new_cov = L @ cov @ L.T + Q
    return new_mean, 0.5 * (new_cov + new_cov.T)


def sample_step(values, op, f_n, Q, dt, rng):
    """Draw ``V' = L V + dt f + w`` with ``w ~ N(0, Q)``."""
    L = op.matrix if isinstance(op, ModelOperator) else np.asarray(op)
    w = rng.generator.multivariate_normal(np.zeros(len(values)), Q, method="eigh")
    return L @ values + dt * f_n + w


@dataclass
class ForwardModel:
    """The model as seen by the filters: grid, step, physics it believes in."""

    grid: Grid
    dt: float
    alpha: float
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec(A_tilde=0.0))
    c_fn: object = cosine_speed
    f_fn: object = zero_forcing
    include_tilde: bool = False

    def __post_init__(self):
        self._ops = {}

    def operator(self, n):
        op = self._ops.get(n)
        if op is None:
            op = build_operator(self.grid, n * self.dt, self.dt, self.alpha, self.c_fn, n)
            self._ops[n] = op
        return op

    def forcing(self, n):
        return np.asarray(self.f_fn(self.grid.nodes, n * self.dt), dtype=float)

    def noise_cov(self, mean):
        return process_noise_cov(mean, self.noise, self.dt, self.grid, self.include_tilde)
