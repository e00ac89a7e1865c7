"""Experiment suites: inflation and step sweeps, beta ECDF, and the spin-up stress test."""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, ExperimentConfig
from .experiment import ExperimentResult, run_twin_experiment

DELTA_GRID_FREQUENT = tuple(round(0.01 * k, 2) for k in range(1, 11))
DELTA_GRID_INFREQUENT = tuple(round(0.1 * k, 1) for k in range(1, 10))
SPINUP_SCALES = (1, 2, 3)
SPINUP_CYCLES = 150


class SuiteKind(enum.Enum):
    INFLATION_SWEEP = "inflation"
    STEP_SWEEP = "steps"
    BETA_ECDF = "beta_ecdf"
    SPINUP = "spinup"


@dataclass
class SuiteRow:
    param_name: str
    param_value: object
    rmse_mean: float
    rmse_std: float
    spread_mean: float
    delta_mean: float
    failures: int
    aborted: bool = False


@dataclass
class SuiteResult:
    kind: SuiteKind
    rows: list[SuiteRow] = field(default_factory=list)
    runs: list[ExperimentResult] = field(default_factory=list)
    # BETA_ECDF: observation interval -> post-spin-up beta samples
    betas: dict = field(default_factory=dict)

    def best(self) -> SuiteRow:
        finite = [r for r in self.rows if np.isfinite(r.rmse_mean) and not r.aborted]
        if not finite:
            raise ValueError("no successful runs in suite")
        return min(finite, key=lambda r: r.rmse_mean)


def ecdf(samples) -> tuple[np.ndarray, np.ndarray]:
    x = np.sort(np.asarray(samples, dtype=float))
    return x, np.arange(1, x.size + 1) / x.size


def _row(name, value, res: ExperimentResult) -> SuiteRow:
    s = res.summary
    return SuiteRow(name, value, s.rmse_mean, s.rmse_std, s.spread_mean, s.delta_mean,
                    s.failures, s.aborted)


def _run_all(configs, workers):
    if workers <= 1 or len(configs) <= 1:
        return [run_twin_experiment(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_twin_experiment, configs))


def _step_entry(base: ExperimentConfig, item):
    # int -> schedule length with the base scheme; (scheme, schedule, n) otherwise
    if isinstance(item, (tuple, list)):
        scheme, schedule, n = item
    else:
        scheme, schedule, n = base.filter.scheme, base.filter.schedule, item
    cfg = base.replace(filter={"scheme": scheme, "schedule": schedule, "steps": int(n)})
    return f"steps[{scheme}/{schedule}]", int(n), cfg


def run_suite(kind, base: ExperimentConfig, grid, workers: int = 1) -> SuiteResult:
    """Run one suite over ``grid`` and tabulate per-run summaries.

    INFLATION_SWEEP: grid of fixed delta values.
    STEP_SWEEP: grid of step counts, or ``(scheme, schedule, n)`` triples.
    BETA_ECDF: grid of observation intervals, or ``(interval, delta)`` pairs
    giving each window its own fixed inflation; the filter is forced to LETKF
    and the recorded samples are the forecast-ensemble stiffness before
    inflation.
    SPINUP: grid of noise scales k; the ensemble starts at the steady state
    plus N(0, kR) noise and runs SPINUP_CYCLES cycles with each of Euler
    forward and DSI.
    Runs are independent, so ``workers > 1`` runs them in separate processes
    without changing any result.
    """
    kind = kind if isinstance(kind, SuiteKind) else SuiteKind(kind)
    grid = list(grid)
    if not grid:
        raise ConfigError("suite grid is empty")
    labels, configs = [], []
    if kind is SuiteKind.INFLATION_SWEEP:
        for d in grid:
            labels.append(("delta", float(d)))
            configs.append(base.replace(inflation={"mode": "fixed", "delta": float(d)}))
    elif kind is SuiteKind.STEP_SWEEP:
        for item in grid:
            name, n, cfg = _step_entry(base, item)
            labels.append((name, n))
            configs.append(cfg)
    elif kind is SuiteKind.BETA_ECDF:
        for item in grid:
            interval, delta = item if isinstance(item, (tuple, list)) else (item, None)
            cfg = base.replace(filter={"kind": "letkf"}, observations={"interval": int(interval)})
            if delta is not None:
                cfg = cfg.replace(inflation={"mode": "fixed", "delta": float(delta)})
            labels.append(("interval", int(interval)))
            configs.append(cfg)
    else:
        for scheme in ("euler", "dsi"):
            for k in grid:
                labels.append((f"init_scale[{scheme}]", float(k)))
                configs.append(base.replace(
                    filter={"scheme": scheme},
                    run={"init": "steady_state", "init_scale": float(k),
                         "cycles": SPINUP_CYCLES, "spinup": 0, "record": True}))
    results = _run_all(configs, workers)
    out = SuiteResult(kind, [_row(n, v, r) for (n, v), r in zip(labels, results)], results)
    if kind is SuiteKind.BETA_ECDF:
        for (_, interval), res, cfg in zip(labels, results, configs):
            out.betas[interval] = np.array([d.beta_b for d in res.diagnostics
                                            if d.cycle > cfg.run.spinup and not d.failed])
    return out


def peak_rmse(res: ExperimentResult) -> float:
    """Largest finite analysis RMSE in a run; inf if the run aborted or any analysis failed."""
    if res.summary.aborted or res.summary.failures:
        return float("inf")
    vals = [d.rmse_a for d in res.diagnostics]
    return float(max(vals)) if vals else float("nan")
