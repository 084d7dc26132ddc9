"""Kalman and dynamic-likelihood filtering for stochastic 1-D advection-diffusion."""

__version__ = "0.1.0"

from .grid import Grid, TimeAxis, interp_matrix, interp_row, wrap  # noqa: E402
from .filters import GaussianState, analysis, dlf_update, mdlf_update, predict, run_filter  # noqa: E402
from .estimators import DynamicLikelihoodFilter, KalmanFilter  # noqa: E402

__all__ = [
    "Grid", "TimeAxis", "wrap", "interp_row", "interp_matrix",
    "GaussianState", "predict", "analysis", "dlf_update", "mdlf_update", "run_filter",
    "KalmanFilter", "DynamicLikelihoodFilter",
]
