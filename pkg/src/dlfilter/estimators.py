"""Estimator front ends in the scikit-learn style.

``fit`` assimilates a sequence of observation sets and stores the posterior
trajectory; ``predict`` returns posterior means.  Hyperparameters are plain
constructor arguments, so ``get_params``/``set_params``/``clone`` work.

>>> kf = KalmanFilter(alpha=0.01).fit(observations)      # doctest: +SKIP
>>> kf.predict().shape                                     # doctest: +SKIP
(101, 100)
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .filters import DLF, KF, GaussianState, forecast, run_filter
from .grid import Grid, TimeAxis
from .metrics import rms_error
from .model import ForwardModel
from .noise import NoiseSpec
from .prior import COV_FLOOR
from .pseudo_obs import PseudoObsBank
from .truth import cosine_speed, initial_field, zero_forcing
from .validation import check_covariance, check_field, check_observations


class KalmanFilter(BaseEstimator):
    """Kalman filter on the coarse upwind/FFT advection-diffusion model.

    Parameters
    ----------
    alpha : float
        Relative diffusion of the model.
    A, B : float
        Phase-speed and forcing noise amplitudes assumed by the model.
    n_nodes, length : int, float
        Periodic grid.
    dt, n_steps : float, int
        Time axis ``t_n = n dt``, ``n = 0..n_steps``.
    obs_times : sequence of float
        Times at which observation sets may arrive.
    phase_speed, forcing : callable ``(x, t) -> array``
        Deterministic parts of the dynamics known to the model.
    cov_floor : float
        Initial covariance used when ``fit`` gets none.
    store_covariances : bool
        Keep the full posterior covariance of every step in ``covariances_``.
    """

    _mode = KF

    def __init__(self, alpha=0.01, A=0.05, B=0.05, n_nodes=100, length=1.0, dt=0.005,
                 n_steps=100, obs_times=(0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45),
                 phase_speed=cosine_speed, forcing=zero_forcing, cov_floor=COV_FLOOR,
                 store_covariances=False):
        self.alpha = alpha
        self.A = A
        self.B = B
        self.n_nodes = n_nodes
        self.length = length
        self.dt = dt
        self.n_steps = n_steps
        self.obs_times = obs_times
        self.phase_speed = phase_speed
        self.forcing = forcing
        self.cov_floor = cov_floor
        self.store_covariances = store_covariances

    def _setup(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        grid = Grid(K=self.n_nodes, L=self.length)
        ta = TimeAxis.from_times(self.n_steps * self.dt, self.dt, tuple(self.obs_times))
        model = ForwardModel(grid, self.dt, self.alpha, NoiseSpec(self.A, 0.0, self.B),
                             self.phase_speed, self.forcing)
        return grid, ta, model

    def _make_bank(self, grid):
        return None

    def fit(self, observations, y=None, initial_mean=None, initial_cov=None):
        """Assimilate ``observations`` (a sequence of ``ObservationSet``).

        ``initial_mean`` defaults to the unit Gaussian bump at ``x = 0.5`` and
        ``initial_cov`` to ``cov_floor * I``; a scalar covariance is read as a
        multiple of the identity.
        """
        grid, ta, model = self._setup()
        obs = check_observations(observations, ta, grid)
        mean = initial_field(grid) if initial_mean is None else check_field(initial_mean, grid.K,
                                                                            "initial_mean")
        cov = self.cov_floor if initial_cov is None else initial_cov
        cov = check_covariance(cov, grid.K, "initial_cov")
        result = run_filter(self._mode, model, ta, obs, GaussianState(mean, cov, 0),
                            bank=self._make_bank(grid),
                            store_covariances=self.store_covariances,
                            record_characteristics=self._mode == DLF)
        self.grid_ = grid
        self.time_axis_ = ta
        self.model_ = model
        self.means_ = result.means
        self.variances_ = result.variances
        self.covariances_ = result.covariances
        self.final_state_ = result.final_state
        self.result_ = result
        self.n_features_in_ = grid.K
        return self

    def predict(self, steps=None):
        """Posterior means, ``(n_steps + 1, n_nodes)``, or the rows at ``steps``."""
        check_is_fitted(self, "means_")
        return self.means_ if steps is None else self.means_[steps]

    def predict_var(self, steps=None):
        check_is_fitted(self, "variances_")
        return self.variances_ if steps is None else self.variances_[steps]

    def forecast(self, horizon):
        """Means and variances for ``horizon`` steps past the end of the fitted run."""
        check_is_fitted(self, "final_state_")
        if horizon < 0:
            raise ValueError("horizon must be nonnegative")
        bank = getattr(self, "bank_", None)
        means, variances, _ = forecast(self.final_state_, bank, self.model_, horizon)
        return means, variances

    def score(self, truth, y=None):
        """Negative total RMS error against a truth trajectory (higher is better)."""
        check_is_fitted(self, "means_")
        truth = np.asarray(truth, dtype=float)
        if truth.shape != self.means_.shape:
            raise ValueError(f"truth must have shape {self.means_.shape}")
        return -rms_error(truth, self.means_, self.grid_, self.dt)[1]


class DynamicLikelihoodFilter(KalmanFilter):
    """Kalman filter augmented with pseudo-observations along characteristics.

    Extra parameters
    ----------------
    cap : int or None
        Number of most recent observation sets kept alive as pseudo-observations.
    linear_curvature_coef : bool
        Linear instead of quadratic scaling of the model-uncertainty term in
        the pseudo-observation covariance growth.
    wavenoise_cov : {"outer", "diag"}
        Shape of the phase-speed noise term in that growth.
    """

    _mode = DLF

    def __init__(self, alpha=0.01, A=0.05, B=0.05, n_nodes=100, length=1.0, dt=0.005,
                 n_steps=100, obs_times=(0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45),
                 phase_speed=cosine_speed, forcing=zero_forcing, cov_floor=COV_FLOOR,
                 store_covariances=False, cap=None, linear_curvature_coef=False,
                 wavenoise_cov="outer"):
        super().__init__(alpha=alpha, A=A, B=B, n_nodes=n_nodes, length=length, dt=dt,
                         n_steps=n_steps, obs_times=obs_times, phase_speed=phase_speed,
                         forcing=forcing, cov_floor=cov_floor,
                         store_covariances=store_covariances)
        self.cap = cap
        self.linear_curvature_coef = linear_curvature_coef
        self.wavenoise_cov = wavenoise_cov

    def _make_bank(self, grid):
        self.bank_ = PseudoObsBank(grid, cap=self.cap, linear_curvature_coef=self.linear_curvature_coef,
                                   wavenoise_cov=self.wavenoise_cov)
        return self.bank_

    @property
    def characteristics_(self):
        check_is_fitted(self, "result_")
        return self.result_.characteristics
