"""Command-line entry point: ``enkbf <subcommand> --config FILE [overrides]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import oracles
from .config import ConfigError, ExperimentConfig, load_config
from .experiment import run_twin_experiment
from .report import (ReportError, emit_report, write_ecdf_csv, write_inflation_csv,
                     write_sweep_csv)
from .suites import (DELTA_GRID_FREQUENT, SPINUP_SCALES, SuiteKind, ecdf, peak_rmse,
                     run_suite)

log = logging.getLogger("enkbf")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="enkbf", description="Ensemble Kalman-Bucy twin experiments")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="TOML experiment config")
    common.add_argument("--seed", type=int)
    common.add_argument("--cycles", type=int)
    common.add_argument("--spinup", type=int, help="cycles discarded before scoring")
    common.add_argument("--out-dir", default="out")
    common.add_argument("--filter", choices=["letkf", "etkbf", "detkbf"])
    common.add_argument("--scheme", choices=["euler", "ef", "dsi"])
    common.add_argument("--schedule", choices=["uniform", "doubling"])
    common.add_argument("--steps", type=int)
    common.add_argument("--workers", type=int, default=1, help="parallel runs for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("run", parents=[common], help="single twin experiment")
    sw = sub.add_parser("sweep-inflation", parents=[common], help="fixed-inflation sweep")
    sw.add_argument("--grid", help="comma-separated delta values")
    st = sub.add_parser("sweep-steps", parents=[common], help="pseudo-time step sweep")
    st.add_argument("--grid", help="comma-separated step counts")
    be = sub.add_parser("beta-ecdf", parents=[common], help="stiffness-ratio ECDF per obs interval")
    be.add_argument("--grid", help="comma-separated observation intervals, each optionally "
                    "paired with a fixed delta as interval:delta")
    sp = sub.add_parser("spinup", parents=[common], help="steady-state initialization stress test")
    sp.add_argument("--grid", help="comma-separated noise scales (multiples of R)")
    oc = sub.add_parser("oracle-check", help="closed-form oracle suites")
    oc.add_argument("-v", "--verbose", action="store_true")
    return p


def _grid(text, cast, default):
    if not text:
        return list(default)
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --grid value: {exc}") from exc


def _interval_delta(text):
    interval, _, delta = text.partition(":")
    return (int(interval), float(delta)) if delta else int(interval)


def apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    filt, run = {}, {}
    if args.filter:
        filt["kind"] = args.filter
    if args.scheme:
        filt["scheme"] = args.scheme
    if args.schedule:
        filt["schedule"] = args.schedule
    if args.steps is not None:
        filt["steps"] = args.steps
    if args.seed is not None:
        run["seed"] = args.seed
    if args.cycles is not None:
        run["cycles"] = args.cycles
    if args.spinup is not None:
        run["spinup"] = args.spinup
    try:
        return cfg.replace(filter=filt, run=run)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_run(cfg, args, out: Path):
    res = run_twin_experiment(cfg)
    paths = emit_report(res.summary, res.diagnostics, out, config=cfg)
    if res.inflation_history:
        paths.append(write_inflation_csv(out / "run_inflation.csv", res.inflation_history))
    s = res.summary
    print(f"rmse {s.rmse_mean:.4f} ({s.rmse_std:.4f})  spread {s.spread_mean:.4f}  "
          f"delta {s.delta_mean:.4f}  failures {s.failures}  aborted {s.aborted}")
    for p in paths:
        print(f"wrote {p}")


def _cmd_suite(kind, cfg, args, out: Path):
    if kind is SuiteKind.INFLATION_SWEEP:
        grid = _grid(args.grid, float, DELTA_GRID_FREQUENT)
    elif kind is SuiteKind.STEP_SWEEP:
        grid = _grid(args.grid, int, (1, 2, 3, 4, 5, 8, 10))
    elif kind is SuiteKind.BETA_ECDF:
        grid = _grid(args.grid, _interval_delta, ((8, 0.04), (25, 0.5)))
    else:
        grid = _grid(args.grid, float, SPINUP_SCALES)
    result = run_suite(kind, cfg, grid, workers=args.workers)
    print(write_sweep_csv(out / f"{kind.value}_sweep.csv", result.rows))
    for row in result.rows:
        print(f"{row.param_name}={row.param_value}: rmse {row.rmse_mean:.4f} "
              f"spread {row.spread_mean:.4f} failures {row.failures}")
    if kind is SuiteKind.BETA_ECDF:
        for interval, betas in result.betas.items():
            x, p = ecdf(betas)
            print(write_ecdf_csv(out / f"beta_ecdf_interval{interval}.csv", x, p))
            if betas.size:
                print(f"interval {interval}: frac(beta<0.1) {(betas < 0.1).mean():.3f} "
                      f"frac(beta>1) {(betas > 1).mean():.3f} median {float(np.median(betas)):.4g} "
                      f"max {betas.max():.4g}")
    if kind is SuiteKind.SPINUP:
        for row, res in zip(result.rows, result.runs):
            tag = f"{row.param_name}{row.param_value}".replace("[", "_").replace("]", "_")
            emit_report(res.summary, res.diagnostics, out, formats=("csv",), stem=f"spinup_{tag}")
            print(f"{row.param_name}={row.param_value}: peak rmse {peak_rmse(res):.4f}")
    if kind is SuiteKind.INFLATION_SWEEP:
        best = result.best()
        print(f"best delta {best.param_value}: rmse {best.rmse_mean:.4f}")


def _cmd_oracle() -> int:
    reports = oracles.run_all()
    for r in reports:
        print(r.line())
    n_ok = sum(r.ok for r in reports)
    print(f"{n_ok}/{len(reports)} oracle suites passed")
    return 0 if n_ok == len(reports) else 1


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "oracle-check":
        return _cmd_oracle()
    try:
        cfg = apply_overrides(load_config(args.config), args)
        out = Path(args.out_dir)
        if args.command == "run":
            _cmd_run(cfg, args, out)
        else:
            kind = {"sweep-inflation": SuiteKind.INFLATION_SWEEP,
                    "sweep-steps": SuiteKind.STEP_SWEEP,
                    "beta-ecdf": SuiteKind.BETA_ECDF,
                    "spinup": SuiteKind.SPINUP}[args.command]
            _cmd_suite(kind, cfg, args, out)
    except ConfigError as exc:
        print(f"enkbf: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except ReportError as exc:
        print(f"enkbf: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
