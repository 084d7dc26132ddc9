"""Kalman filter and dynamic-likelihood filter updates and the sequential driver."""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .grid import interp_matrix
from .model import propagate_moments
from .pseudo_obs import PseudoObsBank

logger = logging.getLogger(__name__)

KF = "kf"
DLF = "dlf"
MODES = (KF, DLF)

# relative jitter added to a failed innovation factorization before retrying
INNOVATION_JITTER = 1e-10


class ConditioningError(np.linalg.LinAlgError):
    """The innovation covariance could not be factorized."""


class FilterError(RuntimeError):
    def __init__(self, mode, n, cause):
        self.mode = mode
        self.n = n
        super().__init__(f"{mode} filter failed at step {n}: {cause}")


@dataclass
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray
    time_index: int = 0

    def copy(self):
        return GaussianState(self.mean.copy(), self.cov.copy(), self.time_index)

    @property
    def variance(self):
        return np.diag(self.cov).copy()


def _factor_innovation(S):
    try:
        return cho_factor(S, lower=True, check_finite=False)
    except LinAlgError:
        pass
    jitter = INNOVATION_JITTER * np.trace(S) / max(len(S), 1)
    try:
        return cho_factor(S + jitter * np.eye(len(S)), lower=True, check_finite=False)
    except LinAlgError as exc:
        raise ConditioningError(
            f"innovation covariance of size {len(S)} is not positive definite "
            f"(jitter {jitter:.3g} did not help)") from exc


def kalman_gain(P, H, R):
    """Optimal gain ``P H^T (H P H^T + R)^{-1}`` via a Cholesky solve."""
    PHt = P @ H.T
    S = H @ PHt + R
    S = 0.5 * (S + S.T)
    factor = _factor_innovation(S)
    return cho_solve(factor, PHt.T, check_finite=False).T


def predict(state, op, f_n, Q, dt):
    mean, cov = propagate_moments(state.mean, state.cov, op, f_n, Q, dt)
    return GaussianState(mean, cov, state.time_index + 1)


def analysis(state, H, Y, R):
    """Condition a Gaussian state on ``Y = H V + e`` with ``e ~ N(0, R)``."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    Y = np.asarray(Y, dtype=float)
    if Y.size == 0:
        return state
    P = state.cov
    gain = kalman_gain(P, H, np.asarray(R, dtype=float))
    mean = state.mean + gain @ (Y - H @ state.mean)
    cov = P - gain @ (H @ P)
    return GaussianState(mean, 0.5 * (cov + cov.T), state.time_index)


def dlf_update(state, bank):
    """Analysis against every live pseudo-observation in ``bank``."""
    y, Y, R = bank.concatenate()
    if Y.size == 0:
        return state
    return analysis(state, interp_matrix(y, bank.grid), Y, R)


def mdlf_update(state, obs, bank):
    """Joint update on a real observation set and the live pseudo-observations.

    The two likelihood blocks have independent errors, so conditioning on
    them in sequence equals conditioning on the stacked vector.
    """
    H = interp_matrix(obs.locations, bank.grid)
    state = analysis(state, H, obs.values, obs.error_cov)
    return dlf_update(state, bank)


@dataclass
class FilterResult:
    mode: str
    means: np.ndarray
    variances: np.ndarray
    covariances: np.ndarray = None
    final_state: GaussianState = None
    bank: PseudoObsBank = None
    characteristics: list = field(default_factory=list)
    live_counts: np.ndarray = None


def _record_bank(rows, bank, n, t):
    for g in bank.groups:
        var = np.diag(g.value_cov)
        for i in range(g.size):
            rows.append((g.origin_index, i, n, t, float(g.positions[i]),
                         float(g.value_mean[i]), float(var[i])))


def _dlf_step(state, bank, model, n):
    """Predict from ``n - 1`` to ``n`` and advance the bank alongside."""
    prev = state
    op = model.operator(n - 1)
    Q = model.noise_cov(prev.mean)
    state = predict(prev, op, model.forcing(n - 1), Q, model.dt)
    if bank is not None:
        bank.advance(prev.mean, prev.cov, model.alpha, model.noise, model.c_fn,
                     model.f_fn, (n - 1) * model.dt, model.dt)
    return state


def run_filter(mode, model, time_axis, observations, initial_state, bank=None,
               store_covariances=False, record_characteristics=False):
    """Run the KF or the DLF over ``time_axis`` and collect all posterior states.

    ``observations`` is a sequence of :class:`ObservationSet` whose
    ``time_index`` values must be observation indices of ``time_axis``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown filter mode {mode!r}")
    if mode == KF:
        bank = None
    elif bank is None:
        bank = PseudoObsBank(model.grid)
    by_index = {o.time_index: o for o in observations}
    unknown = set(by_index) - set(time_axis.obs_indices)
    if unknown:
        raise ValueError(f"observations at non-observation indices {sorted(unknown)}")

    N, K = time_axis.N, model.grid.K
    means = np.empty((N + 1, K))
    variances = np.empty((N + 1, K))
    covs = np.empty((N + 1, K, K)) if store_covariances else None
    live = np.zeros(N + 1, dtype=int)
    rows = []
    state = GaussianState(np.array(initial_state.mean, float), np.array(initial_state.cov, float), 0)

    for n in range(N + 1):
        try:
            if n > 0:
                state = _dlf_step(state, bank, model, n)
            obs = by_index.get(n)
            if obs is not None:
                if bank is None:
                    state = analysis(state, interp_matrix(obs.locations, model.grid),
                                     obs.values, obs.error_cov)
                else:
                    state = mdlf_update(state, obs, bank)
                    bank.ingest(obs)
            elif bank is not None and len(bank):
                state = dlf_update(state, bank)
        except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            raise FilterError(mode, n, exc) from exc
        means[n] = state.mean
        variances[n] = np.diag(state.cov)
        if covs is not None:
            covs[n] = state.cov
        if bank is not None:
            live[n] = bank.n_values
            if record_characteristics:
                _record_bank(rows, bank, n, n * model.dt)

    return FilterResult(mode, means, variances, covs, state, bank, rows, live)


def forecast(state, bank, model, horizon_steps, record_characteristics=False):
    """Continue past the last observation with prediction and pseudo-only updates.

    Returns ``(means, variances, rows)`` for the ``horizon_steps`` new steps.
    ``state`` and ``bank`` are advanced in place of copies; the inputs are
    left untouched.
    """
    state = state.copy()
    bank = copy.deepcopy(bank) if bank is not None else None
    K = model.grid.K
    means = np.empty((horizon_steps, K))
    variances = np.empty((horizon_steps, K))
    rows = []
    n0 = state.time_index
    for j in range(horizon_steps):
        n = n0 + j + 1
        state = _dlf_step(state, bank, model, n)
        if bank is not None and len(bank):
            state = dlf_update(state, bank)
        means[j] = state.mean
        variances[j] = np.diag(state.cov)
        if record_characteristics and bank is not None:
            _record_bank(rows, bank, n, n * model.dt)
    return means, variances, rows
