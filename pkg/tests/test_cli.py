import json
import os
import subprocess
import sys

import pytest

from dlfilter import cli
from dlfilter import experiment as ex


def files(path):
    return sorted(os.listdir(path))


def read_bytes(path, names):
    return {n: open(os.path.join(path, n), "rb").read() for n in names}


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo")
    assert cli.main(["demo", "--seed", "7", "--out", str(out), "--forecast-steps", "10"]) == 0
    return out


def test_demo_writes_expected_artifacts(demo_dir):
    names = files(demo_dir)
    for n in ("truth.csv", "observations.csv", "posterior_kf.csv", "posterior_dlf.csv",
              "forecast_kf.csv", "forecast_dlf.csv", "characteristics.csv", "runs.csv",
              "series.csv", "manifest.json", "field_truth.svg", "field_kf.svg", "field_dlf.svg",
              "series_rms.svg", "series_mass.svg", "series_com.svg", "series_calibration.svg"):
        assert n in names
    chars = ex.read_csv(demo_dir / "characteristics.csv")
    assert list(chars[0]) == ["m", "i", "n", "t", "x", "mean", "var"]
    # pseudo-observation tracks continue past the last observation time
    assert max(float(r["t"]) for r in chars) > 0.45
    obs = ex.read_csv(demo_dir / "observations.csv")
    assert list(obs[0]) == ["m", "t", "i", "y", "Y"] and len(obs) == 9 * 20
    post = ex.read_csv(demo_dir / "posterior_dlf.csv")
    assert list(post[0]) == ["n", "t", "k", "x", "mean", "var"] and len(post) == 101 * 100


def test_demo_is_byte_identical(demo_dir, tmp_path):
    assert cli.main(["demo", "--seed", "7", "--out", str(tmp_path), "--forecast-steps", "10"]) == 0
    assert files(tmp_path) == files(demo_dir)
    assert read_bytes(tmp_path, files(tmp_path)) == read_bytes(demo_dir, files(demo_dir))


def test_replot_restores_svgs(demo_dir, tmp_path):
    svgs = [n for n in files(demo_dir) if n.endswith(".svg")]
    before = read_bytes(demo_dir, svgs)
    for n in svgs:
        os.remove(demo_dir / n)
    assert cli.main(["replot", "--out", str(demo_dir)]) == 0
    assert read_bytes(demo_dir, svgs) == before


def test_kf_only_demo_has_no_dlf_outputs(tmp_path):
    assert cli.main(["demo", "--seed", "7", "--filters", "kf", "--out", str(tmp_path)]) == 0
    names = files(tmp_path)
    assert not [n for n in names if "dlf" in n]
    assert "characteristics.csv" not in names
    rows = ex.read_csv(tmp_path / "runs.csv")
    assert {r["filter"] for r in rows} == {"kf"}


def test_sweep_writes_summary_and_boxplots(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tN": 0.05, "obs_times": [0.025]}))
    out = tmp_path / "new" / "dir"
    code = cli.main(["sweep", "--config", str(cfg), "--replicates", "2", "--alpha", "0.001",
                     "0.01", "--I", "10", "20", "--out", str(out)])
    assert code == 0
    names = files(out)
    for metric in ("rms", "mass", "com", "calibration"):
        assert f"box_{metric}.svg" in names
    assert len(ex.read_csv(out / "summary.csv")) == 2 * 2 * 2 * 4


def test_alpha_curve_outputs(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tN": 0.05, "obs_times": [0.025]}))
    code = cli.main(["alpha-curve", "--config", str(cfg), "--replicates", "1",
                     "--alpha-count", "3", "--out", str(tmp_path)])
    assert code == 0
    curve = ex.read_csv(tmp_path / "alpha_curve.csv")
    assert len(curve) == 3 * 2 * 4
    assert "alpha_rms.svg" in files(tmp_path)


def test_partial_failure_exit_code(tmp_path, monkeypatch):
    real = ex.run_replicate

    def flaky(cfg, replicate, keep_runs=False):
        res = real(cfg, replicate, keep_runs)
        if replicate == 1:
            res.error, res.metrics = "RuntimeError: injected", {}
        return res

    monkeypatch.setattr(ex, "run_replicate", flaky)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tN": 0.05, "obs_times": [0.025]}))
    code = cli.main(["sweep", "--config", str(cfg), "--replicates", "3", "--out", str(tmp_path)])
    assert code == cli.EXIT_PARTIAL
    statuses = [r["status"] for r in ex.read_csv(tmp_path / "replicates.csv")]
    assert statuses == ["ok", "failed", "ok"]
    assert os.path.exists(tmp_path / "summary.csv")


def test_bad_input_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["demo", "--bogus"])
    assert info.value.code == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"replicates": 0}))
    assert cli.main(["demo", "--config", str(bad), "--out", str(tmp_path)]) == cli.EXIT_ERROR
    assert cli.main(["replot", "--out", str(tmp_path / "missing")]) == cli.EXIT_ERROR
    assert "invalid configuration" in capsys.readouterr().err


def test_seed_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 1}))
    parser = cli.build_parser()
    args = parser.parse_args(["demo", "--config", str(cfg)])
    assert cli.load_config(args, env={}).seed == 1
    assert cli.load_config(args, env={"DLF_SEED": "2"}).seed == 2
    args = parser.parse_args(["demo", "--config", str(cfg), "--seed", "3"])
    assert cli.load_config(args, env={"DLF_SEED": "2"}).seed == 3
    args = parser.parse_args(["sweep", "--full"])
    assert cli.load_config(args, env={}).replicates == 50


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dlfilter", "replot", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
