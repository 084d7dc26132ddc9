import json
import os

import numpy as np
import pytest

from dlfilter import experiment as ex
from dlfilter.experiment import (ExperimentConfig, read_csv, read_metric_rows, run_alpha_curve,
                                 run_jobs, run_replicate, run_sweep, summarize, write_outputs)
from dlfilter.metrics import METRICS

SHORT = dict(tN=0.05, obs_times=[0.025])


def test_empty_config_is_base_case():
    cfg = ExperimentConfig.from_dict({})
    assert cfg.grid.K == 100 and cfg.time_axis.N == 100
    assert cfg.time_axis.obs_indices == tuple(range(10, 100, 10))
    assert (cfg.I, cfg.alpha, cfg.A, cfg.A_tilde, cfg.B, cfg.obs_var) == (20, 0.01, 0.05, 0.0,
                                                                          0.05, 1e-4)
    assert cfg.replicates == 20 and cfg.filters == ["kf", "dlf"]
    assert len(cfg.alpha_grid()) == 9
    assert cfg.alpha_grid()[0] == pytest.approx(1e-4) and cfg.alpha_grid()[-1] == pytest.approx(5)


@pytest.mark.parametrize("bad", [{"bogus": 1}, {"replicates": 0}, {"filters": ["enkf"]},
                                 {"init_mode": "random"}, {"obs_times": [0.0123]},
                                 {"dt": -1.0}, {"alpha": [-0.1]}])
def test_invalid_configs_rejected(bad):
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(bad)


def test_json_round_trip(tmp_path):
    cfg = ExperimentConfig(alpha=[0.001, 0.01], I=[10, 20], seed=5, filters="kf")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    back = ExperimentConfig.from_json(path)
    assert back == cfg and back.filters == ["kf"]


def test_replicate_is_deterministic():
    cfg = ExperimentConfig(seed=11)
    a, b = run_replicate(cfg, 4), run_replicate(cfg, 4)
    assert a.truth_digest == b.truth_digest
    for mode in cfg.filters:
        for m in METRICS:
            assert a.metrics[mode].totals[m] == b.metrics[mode].totals[m]
            np.testing.assert_array_equal(a.metrics[mode].series[m], b.metrics[mode].series[m])
    assert run_replicate(cfg, 5).truth_digest != a.truth_digest


def test_kf_only_never_builds_a_bank(monkeypatch):
    def boom(*args, **kwargs):
        raise AssertionError("pseudo-observation bank constructed")
    monkeypatch.setattr(ex, "make_bank", boom)
    res = run_replicate(ExperimentConfig(filters=["kf"], **SHORT), 0, keep_runs=True)
    assert res.ok and set(res.metrics) == {"kf"}
    assert res.runs["kf"].bank is None


def test_filters_share_truth_and_observations():
    res = run_replicate(ExperimentConfig(**SHORT), 0, keep_runs=True)
    assert res.runs["kf"].bank is None and res.runs["dlf"].bank is not None
    assert ex.truth_digest(res.truth) == res.truth_digest


def test_default_replicate_has_four_totals_per_filter():
    res = run_replicate(ExperimentConfig(), 0)
    for mode in ("kf", "dlf"):
        assert set(res.metrics[mode].totals) == set(METRICS)
        assert all(np.isfinite(v) for v in res.metrics[mode].totals.values())


def test_single_cell_single_replicate_summary():
    _, summary = run_sweep(ExperimentConfig(replicates=1, **SHORT))
    assert len(summary) == 2 * 4
    for row in summary:
        lo, q25, med, q75, hi, mean, count = row[4:]
        assert lo == med == hi == mean and count == 1


def test_full_sweep_row_count_and_quantile_order():
    cfg = ExperimentConfig(alpha=[0.001, 0.01, 0.1], I=[10, 20, 40, 60], replicates=3, **SHORT)
    results, summary = run_sweep(cfg)
    assert len(results) == 12 * 3
    assert len(summary) == 3 * 4 * 2 * 4
    for row in summary:
        lo, q25, med, q75, hi = row[4:9]
        assert lo <= q25 <= med <= q75 <= hi


def test_parallel_matches_serial():
    cfg = ExperimentConfig(alpha=[0.001, 0.01], replicates=2, **SHORT)
    cells = [(0.001, 20), (0.01, 20)]
    serial = run_jobs(cfg, cells, jobs=1)
    parallel = run_jobs(cfg, cells, jobs=2)
    assert [(r.alpha, r.replicate, r.truth_digest) for r in serial] == \
           [(r.alpha, r.replicate, r.truth_digest) for r in parallel]
    assert summarize(ex.metric_rows(serial)) == summarize(ex.metric_rows(parallel))


def test_reaggregation_from_csv_is_bit_identical(tmp_path):
    cfg = ExperimentConfig(alpha=[0.001, 0.01], I=[10, 20], replicates=3, **SHORT)
    results, summary = run_sweep(cfg)
    write_outputs(tmp_path, cfg, results, "sweep")
    again = summarize(read_metric_rows(tmp_path / "runs.csv"))
    assert again == summary
    on_disk = read_csv(tmp_path / "summary.csv")
    assert [float(r["median"]) for r in on_disk] == [row[6] for row in summary]
    for name in ("runs.csv", "series.csv", "replicates.csv", "summary.csv", "manifest.json"):
        assert os.path.exists(tmp_path / name)


def test_rows_carry_seed_and_replicate(tmp_path):
    cfg = ExperimentConfig(replicates=2, seed=77, **SHORT)
    results, _ = run_sweep(cfg)
    write_outputs(tmp_path, cfg, results, "sweep")
    rows = read_csv(tmp_path / "runs.csv")
    assert {r["seed"] for r in rows} == {"77"}
    assert {r["run_id"] for r in rows} == {"0", "1"}
    reps = read_csv(tmp_path / "replicates.csv")
    assert len({r["truth_digest"] for r in reps}) == 2
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["seed"] == 77 and man["switches"]["calibration"] == "two-sided"
    assert man["failures"] == 0


def test_failed_replicate_is_recorded_and_excluded(monkeypatch):
    real = ex.run_filter

    def flaky(mode, model, ta, obs, init, **kw):
        if obs and obs[0].values[0] == flaky.poison:
            raise RuntimeError("injected failure")
        return real(mode, model, ta, obs, init, **kw)

    cfg = ExperimentConfig(replicates=3, **SHORT)
    flaky.poison = ex.replicate_data(cfg, 1)[1][0].values[0]
    monkeypatch.setattr(ex, "run_filter", flaky)
    results, summary = run_sweep(cfg)
    assert [r.ok for r in results] == [True, False, True]
    assert "injected failure" in results[1].error
    assert all(row[-1] == 2 for row in summary)


def test_alpha_curve_single_alpha_matches_sweep_mean():
    cfg = ExperimentConfig(replicates=2, **SHORT)
    _, curve = run_alpha_curve(cfg, alphas=[0.01])
    _, summary = run_sweep(cfg)
    assert [(c[0], c[2], c[3]) for c in curve] == [(s[0], s[3], s[9]) for s in summary]
