"""Command-line interface: ``dlfilter demo|sweep|alpha-curve|replot``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from . import experiment as ex
from .filters import DLF, forecast
from .plotting import replot

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 3


def _common(p):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--seed", type=int, help="base seed (overrides DLF_SEED and config)")
    p.add_argument("--out", default="out", help="output directory (created if absent)")
    p.add_argument("--replicates", type=int, help="replicates per cell")
    p.add_argument("--full", action="store_true", help="use 50 replicates per cell")
    p.add_argument("--filters", help="comma-separated subset of kf,dlf")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="dlfilter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="run one replicate and write field/metric artifacts")
    _common(demo)
    demo.add_argument("--replicate", type=int, default=0)
    demo.add_argument("--forecast-steps", type=int, default=0,
                      help="extra steps past the final time with pseudo-observations only")

    sweep = sub.add_parser("sweep", help="replicated runs over the alpha x I grid")
    _common(sweep)
    sweep.add_argument("--alpha", type=float, nargs="+", help="alpha values")
    sweep.add_argument("--I", type=int, nargs="+", dest="obs_count", help="observation counts")

    curve = sub.add_parser("alpha-curve", help="mean metrics over a log-spaced alpha grid")
    _common(curve)
    curve.add_argument("--alpha", type=float, nargs="+", help="explicit alpha values")
    curve.add_argument("--alpha-count", type=int, help="number of log-spaced alphas")

    rp = sub.add_parser("replot", help="regenerate SVGs from existing CSVs")
    rp.add_argument("--out", default="out")
    return parser


def load_config(args, env=None):
    env = os.environ if env is None else env
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    if env.get("DLF_SEED"):
        data["seed"] = int(env["DLF_SEED"])
    if args.seed is not None:
        data["seed"] = args.seed
    if args.full:
        data["replicates"] = 50
    if args.replicates is not None:
        data["replicates"] = args.replicates
    if args.filters:
        data["filters"] = args.filters
    if getattr(args, "alpha", None):
        data["alpha"] = args.alpha
    if getattr(args, "obs_count", None):
        data["I"] = args.obs_count
    if getattr(args, "alpha_count", None):
        data["alpha_count"] = args.alpha_count
    return ex.ExperimentConfig.from_dict(data)


def _write_demo(out, cfg, res, forecast_steps):
    grid, dt = cfg.grid, cfg.dt
    x = grid.nodes
    ex.write_csv(os.path.join(out, "truth.csv"), ("n", "t", "k", "x", "u"),
                 [(n, n * dt, k, x[k], res.truth[n, k])
                  for n in range(len(res.truth)) for k in range(grid.K)])
    ex.write_csv(os.path.join(out, "observations.csv"), ("m", "t", "i", "y", "Y"),
                 [(o.obs_index, o.time_index * dt, i, o.locations[i], o.values[i])
                  for o in res.observations for i in range(o.size)])
    chars = []
    for mode, run in res.runs.items():
        ex.write_csv(os.path.join(out, f"posterior_{mode}.csv"), ("n", "t", "k", "x", "mean", "var"),
                     [(n, n * dt, k, x[k], run.means[n, k], run.variances[n, k])
                      for n in range(len(run.means)) for k in range(grid.K)])
        if mode == DLF:
            chars = list(run.characteristics)
        if forecast_steps > 0:
            means, variances, rows = forecast(run.final_state, run.bank, ex.make_model(cfg),
                                              forecast_steps, record_characteristics=True)
            n0 = run.final_state.time_index
            ex.write_csv(os.path.join(out, f"forecast_{mode}.csv"),
                         ("n", "t", "k", "x", "mean", "var"),
                         [(n0 + j + 1, (n0 + j + 1) * dt, k, x[k], means[j, k], variances[j, k])
                          for j in range(forecast_steps) for k in range(grid.K)])
            if mode == DLF:
                chars.extend(rows)
    if DLF in res.runs:
        ex.write_csv(os.path.join(out, "characteristics.csv"),
                     ("m", "i", "n", "t", "x", "mean", "var"), chars)


def cmd_demo(args, cfg):
    cfg = cfg.cell(cfg.alphas[0], cfg.obs_counts[0])
    res = ex.run_replicate(cfg, args.replicate, keep_runs=True)
    if not res.ok:
        print(f"demo failed: {res.error}", file=sys.stderr)
        return EXIT_ERROR
    os.makedirs(args.out, exist_ok=True)
    _write_demo(args.out, cfg, res, args.forecast_steps)
    ex.write_csv(os.path.join(args.out, "runs.csv"), ex.METRICS_HEADER, ex.metric_rows([res]))
    ex.write_csv(os.path.join(args.out, "series.csv"), ex.METRICS_HEADER,
                 ex.metric_rows([res], "series", cfg.dt))
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(ex.manifest(cfg, "demo", [res], replicate=args.replicate,
                              forecast_steps=args.forecast_steps), fh, indent=2, sort_keys=True)
    replot(args.out)
    for mode, ms in sorted(res.metrics.items()):
        print(mode, " ".join(f"{k}={v:.6g}" for k, v in ms.totals.items()))
    return EXIT_OK


def _report_failures(results):
    failed = [r for r in results if not r.ok]
    for r in failed:
        print(f"replicate {r.replicate} (alpha={r.alpha:g}, I={r.I}) failed: {r.error}",
              file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_sweep(args, cfg):
    results, _ = ex.run_sweep(cfg, jobs=args.jobs)
    ex.write_outputs(args.out, cfg, results, "sweep")
    replot(args.out)
    return _report_failures(results)


def cmd_alpha_curve(args, cfg):
    alphas = cfg.alpha_grid() if not args.alpha else cfg.alphas
    results, curve = ex.run_alpha_curve(replace(cfg, alpha=alphas[0]), jobs=args.jobs,
                                        alphas=alphas)
    ex.write_outputs(args.out, cfg, results, "alpha-curve")
    ex.write_csv(os.path.join(args.out, "alpha_curve.csv"), ex.CURVE_HEADER, curve)
    replot(args.out)
    return _report_failures(results)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "replot":
        if not os.path.isdir(args.out):
            print(f"no such directory: {args.out}", file=sys.stderr)
            return EXIT_ERROR
        for name in replot(args.out):
            print(name)
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_ERROR
    os.makedirs(args.out, exist_ok=True)
    handler = {"demo": cmd_demo, "sweep": cmd_sweep, "alpha-curve": cmd_alpha_curve}[args.command]
    try:
        return handler(args, cfg)
    except Exception as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
