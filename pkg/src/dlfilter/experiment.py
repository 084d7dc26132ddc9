"""Replicated KF/DLF experiments, parameter sweeps and their CSV artifacts."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from itertools import product

import numpy as np

from . import __version__
from .filters import DLF, KF, MODES, run_filter
from .grid import Grid, TimeAxis
from .metrics import METRICS, evaluate
from .model import ForwardModel
from .noise import NoiseSpec
from .observation import generate_observations
from .prior import INIT_MODES, initial_state, sample_initial_parameters
from .pseudo_obs import PseudoObsBank
from .truth import PhysicsConfig, TruthStreams, simulate_truth

logger = logging.getLogger(__name__)

METRICS_HEADER = ("run_id", "filter", "alpha", "I", "seed", "metric", "scope", "t", "value")
REPLICATES_HEADER = ("run_id", "alpha", "I", "seed", "truth_digest", "status", "error")
SUMMARY_HEADER = ("filter", "alpha", "I", "metric", "min", "q25", "median", "q75", "max",
                  "mean", "count")
CURVE_HEADER = ("filter", "alpha", "metric", "mean", "count")
CALIBRATION_SIDES = "two-sided"


def _default_obs_times():
    return [round(0.05 * m, 10) for m in range(1, 10)]


@dataclass
class ExperimentConfig:
    """All experiment parameters; defaults give the deterministic base case."""

    L: float = 1.0
    dx: float = 0.01
    tN: float = 0.5
    dt: float = 0.005
    obs_times: list = field(default_factory=_default_obs_times)
    I: object = 20
    alpha: object = 0.01
    A: float = 0.05
    A_tilde: float = 0.0
    B: float = 0.05
    obs_var: float = 1e-4
    init_mode: str = "deterministic"
    sigma: float = 1.0
    theta: float = 0.5
    init_cov: str = "prior"
    replicates: int = 20
    cap: object = None
    seed: int = 0
    filters: list = field(default_factory=lambda: [KF, DLF])
    linear_curvature_coef: bool = False
    wavenoise_cov: str = "outer"
    alpha_min: float = 1e-4
    alpha_max: float = 5.0
    alpha_count: int = 9

    def __post_init__(self):
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"init_mode must be one of {INIT_MODES}")
        if self.init_cov not in ("prior", "floor"):
            raise ValueError("init_cov must be 'prior' or 'floor'")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if isinstance(self.filters, str):
            self.filters = [s.strip() for s in self.filters.split(",") if s.strip()]
        bad = [f for f in self.filters if f not in MODES]
        if bad or not self.filters:
            raise ValueError(f"filters must be a nonempty subset of {MODES}, got {self.filters}")
        for name in ("dx", "tN", "dt", "L"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if any(a < 0 for a in self.alphas) or any(i < 1 for i in self.obs_counts):
            raise ValueError("alpha must be nonnegative and I positive")
        self.time_axis  # validates obs_times
        self.grid

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)

    @property
    def alphas(self):
        return [float(a) for a in np.atleast_1d(self.alpha)]

    @property
    def obs_counts(self):
        return [int(i) for i in np.atleast_1d(self.I)]

    @property
    def grid(self):
        return Grid.from_spacing(self.dx, self.L)

    @property
    def time_axis(self):
        return TimeAxis.from_times(self.tN, self.dt, self.obs_times)

    def cell(self, alpha, I):
        """Scalar-parameter copy for one sweep cell."""
        return replace(self, alpha=float(alpha), I=int(I))

    def alpha_grid(self):
        return [float(a) for a in np.geomspace(self.alpha_min, self.alpha_max, self.alpha_count)]


@dataclass
class ReplicateResult:
    alpha: float
    I: int
    replicate: int
    seed: int
    truth_digest: str = ""
    metrics: dict = field(default_factory=dict)
    error: str = ""

    @property
    def ok(self):
        return not self.error


def truth_digest(truth):
    return hashlib.sha256(np.ascontiguousarray(truth, dtype="<f8").tobytes()).hexdigest()[:16]


def replicate_data(cfg, replicate):
    """Truth, observations and filter initial state shared by every filter."""
    grid, ta = cfg.grid, cfg.time_axis
    alpha = cfg.alphas[0]
    physics = PhysicsConfig(alpha=alpha, noise=NoiseSpec(cfg.A, cfg.A_tilde, cfg.B, cfg.obs_var))
    truth = simulate_truth(grid, ta, physics, TruthStreams(cfg.seed, replicate))
    obs = generate_observations(truth, grid, ta, cfg.obs_counts[0], cfg.obs_var, cfg.seed, replicate)
    sigma, theta = sample_initial_parameters(cfg.init_mode, cfg.seed, replicate, cfg.sigma, cfg.theta)
    mode = cfg.init_mode if cfg.init_cov == "prior" else "deterministic"
    init = initial_state(grid, mode, sigma, theta)
    return truth, obs, init


def make_model(cfg):
    # the model never knows about the spatially constant phase-speed noise
    noise = NoiseSpec(cfg.A, 0.0, cfg.B, cfg.obs_var)
    return ForwardModel(cfg.grid, cfg.dt, cfg.alphas[0], noise)


def make_bank(cfg):
    return PseudoObsBank(cfg.grid, cap=cfg.cap, linear_curvature_coef=cfg.linear_curvature_coef,
                         wavenoise_cov=cfg.wavenoise_cov)


def run_replicate(cfg, replicate, keep_runs=False):
    """Run every configured filter on one regenerated replicate of a single cell."""
    alpha, I = cfg.alphas[0], cfg.obs_counts[0]
    result = ReplicateResult(alpha, I, int(replicate), cfg.seed)
    try:
        truth, obs, init = replicate_data(cfg, replicate)
        result.truth_digest = truth_digest(truth)
        model = make_model(cfg)
        runs = {}
        for mode in cfg.filters:
            bank = make_bank(cfg) if mode == DLF else None
            run = run_filter(mode, model, cfg.time_axis, obs, init, bank=bank,
                             record_characteristics=keep_runs)
            result.metrics[mode] = evaluate(truth, run.means, run.variances, cfg.grid, cfg.dt)
            runs[mode] = run
        if keep_runs:
            result.truth, result.observations, result.runs = truth, obs, runs
    except Exception as exc:  # record-and-exclude policy
        logger.warning("replicate %d (alpha=%g, I=%d) failed: %s", replicate, alpha, I, exc)
        result.error = f"{type(exc).__name__}: {exc}"
        result.metrics = {}
    return result


def _job(args):
    cfg, replicate = args
    return run_replicate(cfg, replicate)


def run_jobs(cfg, cells, jobs=1):
    """Run all ``(alpha, I)`` cells times replicates; results sorted by cell and replicate."""
    work = [(cfg.cell(a, i), r) for (a, i) in cells for r in range(cfg.replicates)]
    if jobs and jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_job, work, chunksize=1))
    else:
        results = [_job(w) for w in work]
    return sorted(results, key=lambda r: (r.alpha, r.I, r.replicate))


def run_sweep(cfg, jobs=1):
    cells = list(product(cfg.alphas, cfg.obs_counts))
    results = run_jobs(cfg, cells, jobs)
    return results, summarize(metric_rows(results, "total"))


def run_alpha_curve(cfg, jobs=1, alphas=None):
    alphas = cfg.alpha_grid() if alphas is None else [float(a) for a in alphas]
    cells = [(a, cfg.obs_counts[0]) for a in alphas]
    results = run_jobs(cfg, cells, jobs)
    return results, alpha_curve(summarize(metric_rows(results, "total")))


# --- tables -----------------------------------------------------------------

def fmt(value):
    """Shortest round-trip decimal text for CSV cells."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def metric_rows(results, scope="total", dt=None):
    """Flatten replicate results into rows of :data:`METRICS_HEADER`."""
    rows = []
    for res in results:
        if not res.ok:
            continue
        for mode in sorted(res.metrics):
            ms = res.metrics[mode]
            for metric in METRICS:
                if scope == "total":
                    rows.append((res.replicate, mode, res.alpha, res.I, res.seed, metric,
                                 "total", "", float(ms.totals[metric])))
                else:
                    step = dt if dt is not None else 1.0
                    for n, v in enumerate(ms.series[metric]):
                        rows.append((res.replicate, mode, res.alpha, res.I, res.seed, metric,
                                     "series", float(n * step), float(v)))
    return rows


def replicate_rows(results):
    return [(r.replicate, r.alpha, r.I, r.seed, r.truth_digest, "ok" if r.ok else "failed",
             r.error) for r in results]


def summarize(rows):
    """Quantile summary per ``(filter, alpha, I, metric)`` from total-scope rows."""
    groups = {}
    for row in rows:
        run_id, mode, alpha, I, seed, metric, scope, t, value = row
        if scope != "total":
            continue
        groups.setdefault((mode, float(alpha), int(I), metric), []).append(float(value))
    out = []
    order = {m: j for j, m in enumerate(METRICS)}
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], order.get(k[3], 99))):
        v = np.asarray(groups[key])
        q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])
        out.append(key + tuple(float(x) for x in q) + (float(v.mean()), int(v.size)))
    return out


def alpha_curve(summary):
    return [(mode, alpha, metric, mean, count)
            for (mode, alpha, I, metric, *_q, mean, count) in summary]


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_metric_rows(path):
    """Parse a metrics CSV back into tuples compatible with :func:`summarize`."""
    rows = []
    for r in read_csv(path):
        rows.append((int(r["run_id"]), r["filter"], float(r["alpha"]), int(r["I"]),
                     int(r["seed"]), r["metric"], r["scope"],
                     float(r["t"]) if r["t"] else "", float(r["value"])))
    return rows


def manifest(cfg, command, results=None, **extra):
    import numpy
    import scipy

    data = {
        "command": command,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "versions": {"dlfilter": __version__, "numpy": numpy.__version__,
                     "scipy": scipy.__version__},
        "switches": {"linear_curvature_coef": cfg.linear_curvature_coef,
                     "wavenoise_cov": cfg.wavenoise_cov,
                     "init_cov": cfg.init_cov,
                     "calibration": CALIBRATION_SIDES},
    }
    if results is not None:
        data["replicates"] = [{"alpha": r.alpha, "I": r.I, "replicate": r.replicate,
                               "truth_digest": r.truth_digest, "error": r.error or None}
                              for r in results]
        data["failures"] = sum(not r.ok for r in results)
    data.update(extra)
    return data


def write_outputs(out_dir, cfg, results, command):
    """Write runs.csv, series.csv, replicates.csv, summary.csv and manifest.json."""
    os.makedirs(out_dir, exist_ok=True)
    totals = metric_rows(results, "total")
    write_csv(os.path.join(out_dir, "runs.csv"), METRICS_HEADER, totals)
    write_csv(os.path.join(out_dir, "series.csv"), METRICS_HEADER,
              metric_rows(results, "series", cfg.dt))
    write_csv(os.path.join(out_dir, "replicates.csv"), REPLICATES_HEADER, replicate_rows(results))
    summary = summarize(totals)
    write_csv(os.path.join(out_dir, "summary.csv"), SUMMARY_HEADER, summary)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest(cfg, command, results), fh, indent=2, sort_keys=True)
    return summary
