"""Pseudo-observations: real observations carried forward along characteristics.

Each ingested observation set becomes a group whose positions follow
``dx/dt = -c(x, t)`` and whose value mean and covariance are advanced with an
explicit Euler step that borrows derivatives from the current model posterior.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .grid import interp_matrix, wrap
from .model import derivative_matrices


@dataclass
class PseudoObsGroup:
    origin_index: int
    origin_time: int
    positions: np.ndarray
    value_mean: np.ndarray
    value_cov: np.ndarray

    @property
    def size(self):
        return len(self.value_mean)


class PseudoObsBank:
    """Ordered collection of live pseudo-observation groups, oldest first.

    Parameters
    ----------
    cap : int or None
        Maximum number of live groups. ``None`` keeps everything.
    linear_curvature_coef : bool
        Scale the model-uncertainty term of the covariance update linearly by
        ``alpha + A^2/2`` instead of quadratically.
    wavenoise_cov : {"outer", "diag"}
        Form of the phase-speed noise contribution to the covariance growth.
    """

    def __init__(self, grid, cap=None, linear_curvature_coef=False, wavenoise_cov="outer"):
        if cap is not None and cap < 0:
            raise ValueError("cap must be nonnegative")
        if wavenoise_cov not in ("outer", "diag"):
            raise ValueError("wavenoise_cov must be 'outer' or 'diag'")
        self.grid = grid
        self.cap = cap
        self.linear_curvature_coef = linear_curvature_coef
        self.wavenoise_cov = wavenoise_cov
        self.groups = []

    def __len__(self):
        return len(self.groups)

    @property
    def n_values(self):
        return sum(g.size for g in self.groups)

    def ingest(self, obs):
        if self.cap == 0:
            return
        if self.cap is not None:
            while len(self.groups) >= self.cap:
                self.groups.pop(0)
        self.groups.append(PseudoObsGroup(
            origin_index=obs.obs_index,
            origin_time=obs.time_index,
            positions=wrap(np.array(obs.locations, dtype=float), self.grid.L),
            value_mean=np.array(obs.values, dtype=float),
            value_cov=np.array(obs.error_cov, dtype=float),
        ))

    def advance_positions(self, c_fn, t, dt):
        if dt <= 0:
            raise ValueError("dt must be positive")
        for g in self.groups:
            g.positions = wrap(g.positions - c_fn(g.positions, t) * dt, self.grid.L)

    def advance_values(self, model_mean, model_cov, alpha, noise, f_fn, t, dt):
        """Euler step of the pseudo-observation value moments from ``t`` to ``t + dt``.

        Uses the posterior moments of the model at ``t`` and the positions
        at ``t``; call before :meth:`advance_positions`.
        """
        if not self.groups:
            return
        D1, D2 = derivative_matrices(self.grid)
        grad = D1 @ model_mean
        curv = D2 @ model_mean
        coef = alpha + 0.5 * noise.A**2
        cov_coef = coef if self.linear_curvature_coef else coef**2
        for g in self.groups:
            H = interp_matrix(g.positions, self.grid)
            g.value_mean = g.value_mean + dt * (coef * (H @ curv) + f_fn(g.positions, t))
            hg = H @ grad
            if self.wavenoise_cov == "outer":
                wave = np.outer(hg, hg)
            else:
                wave = np.diag(hg**2)
            HD2 = H @ D2
            growth = dt * (noise.B**2 * np.eye(g.size) + noise.A**2 * wave)
            growth = growth + dt**2 * cov_coef * (HD2 @ model_cov @ HD2.T)
            cov = g.value_cov + growth
            g.value_cov = 0.5 * (cov + cov.T)

    def advance(self, model_mean, model_cov, alpha, noise, c_fn, f_fn, t, dt):
        self.advance_values(model_mean, model_cov, alpha, noise, f_fn, t, dt)
        self.advance_positions(c_fn, t, dt)

    def concatenate(self):
        """Stacked positions, value means and block-diagonal covariance of all groups."""
        if not self.groups:
            return np.zeros(0), np.zeros(0), np.zeros((0, 0))
        y = np.concatenate([g.positions for g in self.groups])
        Y = np.concatenate([g.value_mean for g in self.groups])
        R = block_diag(*[g.value_cov for g in self.groups])
        return y, Y, R
