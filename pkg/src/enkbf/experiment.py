"""Identical-twin cycling: nature run, synthetic observations, forecast/analysis loop."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ExperimentConfig
from .filters import FilterKind, analyze
from .localization import local_analysis_sweep
from .models import BLOWUP_THRESHOLD, ModelDivergence, rk4_advance
from .observations import SeededStream, synthesize_observations
from .pseudo_time import beta_ratio

log = logging.getLogger(__name__)


@dataclass
class CycleDiagnostics:
    cycle: int
    rmse_a: float
    rmse_b: float
    spread: float
    beta: float
    delta_mean: float
    failed: bool
    beta_b: float = float("nan")  # stiffness of the forecast ensemble before inflation


@dataclass
class RunSummary:
    rmse_mean: float
    rmse_std: float
    spread_mean: float
    spread_std: float
    delta_mean: float
    delta_std: float
    beta_mean: float
    beta_max: float
    cycles_run: int
    cycles_scored: int
    failures: int
    aborted: bool
    wall_clock: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentResult:
    summary: RunSummary
    diagnostics: list[CycleDiagnostics] = field(default_factory=list)
    config: ExperimentConfig | None = None
    inflation_history: list[tuple[int, np.ndarray]] = field(default_factory=list)


def compute_diagnostics(analysis, truth) -> tuple[float, float]:
    """Analysis-mean RMSE against the truth and the root-mean ensemble variance."""
    analysis = np.asarray(analysis, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if analysis.shape[0] != truth.shape[0]:
        raise ValueError("analysis and truth dimensions differ")
    rmse = float(np.sqrt(np.mean((analysis.mean(axis=1) - truth) ** 2)))
    spread = float(np.sqrt(np.mean(analysis.var(axis=1, ddof=1))))
    return rmse, spread


def initial_truth(cfg: ExperimentConfig) -> np.ndarray:
    spec = cfg.model
    noise = SeededStream("nature-init", cfg.run.seed).normal(spec.state_size)
    if spec.kind == "l63":
        x0 = np.array([1.0, 1.0, 1.0]) + noise
    else:
        x0 = np.full(spec.n, spec.forcing) + 0.01 * noise
    return rk4_advance(spec, x0, cfg.run.nature_spinup)


def initial_ensemble(cfg: ExperimentConfig, truth: np.ndarray) -> np.ndarray:
    spec = cfg.model
    n, m = spec.state_size, cfg.filter.members
    noise = SeededStream("ensemble-init", cfg.run.seed).normal((n, m))
    init = cfg.run.init
    if init == "truth_plus_r":
        return truth[:, None] + np.sqrt(cfg.run.init_scale * cfg.observations.variance) * noise
    if init == "truth_plus_identity":
        return truth[:, None] + np.sqrt(cfg.run.init_scale) * noise
    if spec.kind == "l96":
        base = np.full(n, spec.forcing)
    else:
        eq = np.sqrt(spec.beta * (spec.rho - 1.0))
        base = np.array([eq, eq, spec.rho - 1.0])
    return base[:, None] + np.sqrt(cfg.run.init_scale * cfg.observations.variance) * noise


def run_twin_experiment(cfg: ExperimentConfig, truth0=None, ens0=None) -> ExperimentResult:
    """Cycle forecast -> (inflate, analyze) -> diagnostics and summarize.

    Deterministic for a given config: observation noise for cycle ``c`` is drawn
    from the ``obs-noise`` stream at offset ``c``.  A failed analysis keeps the
    background ensemble, is flagged, and is excluded from the summary means.
    """
    t0 = time.perf_counter()
    spec = cfg.model
    kind = cfg.filter.filter_kind
    h, r = cfg.observations.build(spec.state_size)
    loc = cfg.localization.build()
    inflation = cfg.inflation.build(spec.state_size)
    integration = None if kind is FilterKind.LETKF else cfg.filter.integration()
    mode = cfg.filter.mode
    obs_stream = SeededStream("obs-noise", cfg.run.seed)
    interval = cfg.observations.interval

    truth = initial_truth(cfg) if truth0 is None else np.array(truth0, dtype=float)
    ens = initial_ensemble(cfg, truth) if ens0 is None else np.array(ens0, dtype=float)

    diags: list[CycleDiagnostics] = []
    infl_hist: list[tuple[int, np.ndarray]] = []
    failures = 0
    aborted = False
    max_failures = cfg.run.abort_fraction * cfg.run.cycles
    scored = {"rmse": [], "spread": [], "delta": [], "beta": []}

    for cycle in range(1, cfg.run.cycles + 1):
        truth = rk4_advance(spec, truth, interval)
        try:
            ens = rk4_advance(spec, ens, interval)
        except ModelDivergence:
            failures += 1
            aborted = True
            diags.append(CycleDiagnostics(cycle, np.nan, np.nan, np.nan, np.nan,
                                          float(inflation.delta.mean()), True, np.nan))
            log.warning("ensemble forecast diverged at cycle %d; aborting run", cycle)
            break
        obs = synthesize_observations(truth, h, r, obs_stream, cycle)
        rmse_b = float(np.sqrt(np.mean((ens.mean(axis=1) - truth) ** 2)))
        delta_used = float(inflation.delta.mean())
        beta_b = beta_ratio(h.apply(ens - ens.mean(axis=1, keepdims=True)), r).beta

        if loc is None:
            res = analyze(kind, ens, obs, integration, mode, float(inflation.delta[0]))
        else:
            sweep = local_analysis_sweep(kind, ens, obs, loc, inflation, integration, mode)
            res = sweep.analysis
            inflation = sweep.inflation

        failed = bool(res.failed or not np.isfinite(res.ensemble).all()
                      or np.abs(res.ensemble).max() > BLOWUP_THRESHOLD)
        if failed:
            failures += 1
            rmse_a, spread = compute_diagnostics(ens, truth)
        else:
            ens = res.ensemble
            rmse_a, spread = compute_diagnostics(ens, truth)
        beta = res.stiffness.beta
        if cfg.run.record:
            diags.append(CycleDiagnostics(cycle, rmse_a, rmse_b, spread, beta, delta_used,
                                          failed, beta_b))
        if cfg.run.record_inflation:
            infl_hist.append((cycle, inflation.delta.copy()))
        if cycle > cfg.run.spinup and not failed:
            scored["rmse"].append(rmse_a)
            scored["spread"].append(spread)
            scored["delta"].append(delta_used)
            scored["beta"].append(beta)
        if failures > max_failures:
            aborted = True
            log.warning("failure rate above %.0f%% at cycle %d; aborting run",
                        100 * cfg.run.abort_fraction, cycle)
            break

    summary = _summarize(scored, cycle, failures, aborted, time.perf_counter() - t0)
    return ExperimentResult(summary, diags, cfg, infl_hist)


def _stats(values):
    if not values:
        return float("nan"), float("nan")
    a = np.asarray(values)
    return float(a.mean()), float(a.std())


def _summarize(scored, cycles_run, failures, aborted, wall):
    rmse = _stats(scored["rmse"])
    spread = _stats(scored["spread"])
    delta = _stats(scored["delta"])
    beta = scored["beta"]
    return RunSummary(
        rmse_mean=rmse[0], rmse_std=rmse[1],
        spread_mean=spread[0], spread_std=spread[1],
        delta_mean=delta[0], delta_std=delta[1],
        beta_mean=float(np.mean(beta)) if beta else float("nan"),
        beta_max=float(np.max(beta)) if beta else float("nan"),
        cycles_run=cycles_run, cycles_scored=len(scored["rmse"]),
        failures=failures, aborted=aborted, wall_clock=wall,
    )
