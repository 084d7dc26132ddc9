import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dlfilter import DynamicLikelihoodFilter, KalmanFilter
from dlfilter.experiment import ExperimentConfig, make_bank, make_model, replicate_data
from dlfilter.filters import DLF, KF, run_filter


@pytest.fixture(scope="module")
def case():
    cfg = ExperimentConfig(seed=21)
    return cfg, *replicate_data(cfg, 0)


def test_params_round_trip():
    dlf = DynamicLikelihoodFilter(alpha=0.1, cap=3, wavenoise_cov="diag")
    params = dlf.get_params()
    assert params["alpha"] == 0.1 and params["cap"] == 3 and params["wavenoise_cov"] == "diag"
    twin = clone(dlf)
    assert twin.get_params() == params and twin is not dlf
    twin.set_params(cap=1)
    assert twin.cap == 1 and dlf.cap == 3
    assert "cap" not in KalmanFilter().get_params()


def test_unfitted_estimator_refuses_to_predict():
    with pytest.raises(NotFittedError):
        KalmanFilter().predict()


@pytest.mark.parametrize("est_cls, mode", [(KalmanFilter, KF), (DynamicLikelihoodFilter, DLF)])
def test_estimator_matches_driver(case, est_cls, mode):
    cfg, truth, obs, init = case
    est = est_cls().fit(obs, initial_mean=init.mean, initial_cov=init.cov)
    bank = make_bank(cfg) if mode == DLF else None
    ref = run_filter(mode, make_model(cfg), cfg.time_axis, obs, init, bank=bank)
    np.testing.assert_array_equal(est.predict(), ref.means)
    np.testing.assert_array_equal(est.predict_var(), ref.variances)
    np.testing.assert_array_equal(est.predict(10), ref.means[10])
    assert est.score(truth) < 0


def test_default_initial_state_and_scalar_covariance(case):
    cfg, truth, obs, init = case
    a = KalmanFilter().fit(obs)
    b = KalmanFilter().fit(obs, initial_mean=init.mean, initial_cov=1e-6)
    np.testing.assert_array_equal(a.predict(), b.predict())


def test_dlf_estimator_exposes_bank_and_forecast(case):
    cfg, truth, obs, init = case
    est = DynamicLikelihoodFilter().fit(obs)
    assert len(est.bank_) == cfg.time_axis.M
    assert est.characteristics_
    means, variances = est.forecast(5)
    assert means.shape == (5, 100) and np.all(variances > 0)
    kf_means, _ = KalmanFilter().fit(obs).forecast(0)
    assert kf_means.shape == (0, 100)


def test_input_validation(case):
    cfg, truth, obs, init = case
    with pytest.raises(ValueError):
        KalmanFilter().fit(obs, initial_mean=np.zeros(7))
    with pytest.raises(ValueError):
        KalmanFilter().fit(obs, initial_cov=-np.eye(100))
    with pytest.raises(ValueError):
        KalmanFilter(alpha=-1).fit(obs)
    with pytest.raises(ValueError):
        KalmanFilter(obs_times=(0.05,)).fit(obs)
    est = KalmanFilter().fit(obs)
    with pytest.raises(ValueError):
        est.score(truth[:5])
    with pytest.raises(ValueError):
        est.forecast(-1)
