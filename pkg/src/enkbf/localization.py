"""R-localization, multiplicative inflation, and the per-gridpoint local analysis sweep."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .filters import (AnalysisResult, FilterKind, IntegrationScheme, MeanUpdateMode,
                      integrate_detkbf, integrate_etkbf, letkf_weights)
from .observations import ObservationBatch
from .pseudo_time import StiffnessReport, gram

log = logging.getLogger(__name__)


def gaspari_cohn(d, c):
    """Gaspari-Cohn compactly supported fifth-order correlation, zero beyond 2c."""
    if not c > 0:
        raise ValueError("taper scale c must be positive")
    r = np.abs(np.asarray(d, dtype=float)) / c
    out = np.zeros_like(r)
    inner = r <= 1.0
    ri = r[inner]
    out[inner] = ((((-0.25 * ri + 0.5) * ri + 0.625) * ri - 5.0 / 3.0) * ri * ri) + 1.0
    outer = (r > 1.0) & (r < 2.0)
    ro = r[outer]
    out[outer] = (((((ro / 12.0 - 0.5) * ro + 0.625) * ro + 5.0 / 3.0) * ro - 5.0) * ro
                  + 4.0 - 2.0 / (3.0 * ro))
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def ring_distance(i, j, n):
    d = np.abs(np.asarray(i) - np.asarray(j)) % n
    return np.minimum(d, n - d)


GAUSSIAN_EQUIVALENT = float(np.sqrt(10.0 / 3.0))
RADIUS_OVER_SQRT3 = float(1.0 / np.sqrt(3.0))


@dataclass(frozen=True)
class LocalizationConfig:
    """Localization radius in gridpoint units; the taper scale is ``c = radius * scale_factor``.

    The default factor sqrt(10/3) makes the Gaspari-Cohn taper match a
    Gaussian of standard deviation ``radius``.  ``RADIUS_OVER_SQRT3`` gives
    the narrower c = radius / sqrt(3) convention.
    """

    radius: float = 4.0
    topology: str = "ring"
    scale_factor: float = GAUSSIAN_EQUIVALENT

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("localization radius must be positive")
        if not self.scale_factor > 0:
            raise ValueError("scale factor must be positive")
        if self.topology not in ("ring", "none"):
            raise ValueError(f"unknown topology {self.topology!r}")

    @property
    def scale(self) -> float:
        return self.radius * self.scale_factor

    @property
    def cutoff(self) -> float:
        return 2.0 * self.scale

    def distance(self, i, j, n):
        if self.topology == "ring":
            return ring_distance(i, j, n)
        return np.abs(np.asarray(i) - np.asarray(j))


def localize_observation_errors(center: int, obs: ObservationBatch, loc: LocalizationConfig):
    """Observations within the cutoff of ``center`` and their tapered variances.

    Returns ``(indices, variances)``; variances are divided by the taper weight.
    """
    locs = obs.operator.locations
    d = loc.distance(center, locs, obs.operator.n_state)
    weight = gaspari_cohn(d, loc.scale)
    keep = np.flatnonzero((d < loc.cutoff) & (weight > 0))
    return keep, obs.errors.variances[keep] / weight[keep]


@lru_cache(maxsize=32)
def _local_plan(n_state: int, locations: tuple[int, ...], loc: LocalizationConfig):
    """Padded per-gridpoint observation index and taper-weight tables."""
    locs = np.array(locations, dtype=int)
    grid = np.arange(n_state)
    d = loc.distance(grid[:, None], locs[None, :], n_state)
    weight = np.where(d < loc.cutoff, gaspari_cohn(d, loc.scale), 0.0)
    counts = (weight > 0).sum(axis=1)
    width = max(int(counts.max(initial=0)), 1)
    idx = np.zeros((n_state, width), dtype=int)
    taper = np.zeros((n_state, width))
    for q in range(n_state):
        sel = np.flatnonzero(weight[q] > 0)
        idx[q, : sel.size] = sel
        taper[q, : sel.size] = weight[q, sel]
    return idx, taper


def apply_fixed_inflation(pert: np.ndarray, delta: float) -> np.ndarray:
    """Scale perturbations by (1 + delta); covariance scales by (1 + delta)^2."""
    if delta < 0:
        raise ValueError("inflation must be non-negative")
    return (1.0 + delta) * np.asarray(pert, dtype=float)


@dataclass
class InflationState:
    """Per-gridpoint multiplicative inflation delta_q with optional adaptive updating.

    Adaptive updates blend the innovation-based estimate of (1 + delta)^2 into
    the current factor.  With ``gain="fixed"`` the blend weight is ``kappa``;
    with ``gain="variance"`` it is v_b / (v_b + v_o), where v_b = prior_std**2
    and v_o is the sampling variance of the estimate given the local
    observation count and ensemble trace.  Estimates below ``floor`` are
    raised to it before blending; the blended factor is kept within
    [(1 + delta_min)^2, (1 + delta_max)^2].
    """

    delta: np.ndarray
    adaptive: bool = False
    kappa: float = 0.001
    floor: float = -np.inf
    delta_min: float = 0.0
    delta_max: float = 1.0
    gain: str = "fixed"
    prior_std: float = 0.04
    collapsed: int = 0

    def __post_init__(self):
        self.delta = np.asarray(self.delta, dtype=float)
        if self.gain not in ("fixed", "variance"):
            raise ValueError(f"unknown inflation gain {self.gain!r}")
        if not 0.0 < self.kappa <= 1.0:
            raise ValueError("smoothing gain kappa must lie in (0, 1]")
        if not 0.0 <= self.delta_min <= self.delta_max:
            raise ValueError("need 0 <= delta_min <= delta_max")
        if not np.all(np.isfinite(self.delta)) or np.any(self.delta < 0):
            raise ValueError("inflation values must be finite and non-negative")

    @classmethod
    def fixed(cls, n: int, delta: float) -> "InflationState":
        return cls(np.full(n, float(delta)))

    @classmethod
    def adaptive_start(cls, n: int, delta0: float = 0.0, **kw) -> "InflationState":
        return cls(np.full(n, float(delta0)), adaptive=True, **kw)

    def copy(self) -> "InflationState":
        return replace(self, delta=np.array(self.delta))


def adaptive_inflation_update(state: InflationState, gridpoint, innovation, y_pert_loc,
                              r_loc, n_effective=None) -> InflationState:
    """Update delta at ``gridpoint`` (int or index array) from local innovation statistics.

    ``innovation`` is y - H xbar^b restricted to the local observations,
    ``y_pert_loc`` the uninflated local obs-space perturbations and ``r_loc``
    the tapered variances.  ``n_effective`` defaults to the observation count;
    pass the taper-weight sum when the variances have been tapered.
    """
    new = state.copy()
    gp = np.atleast_1d(gridpoint)
    innovation = np.asarray(innovation, dtype=float).reshape(gp.size, -1)
    r_loc = np.asarray(r_loc, dtype=float).reshape(gp.size, -1)
    y_pert_loc = np.asarray(y_pert_loc, dtype=float)
    y_pert_loc = y_pert_loc.reshape((gp.size,) + y_pert_loc.shape[-2:])
    if n_effective is None:
        n_effective = np.isfinite(r_loc).sum(axis=-1).astype(float)
    n_effective = np.broadcast_to(np.asarray(n_effective, dtype=float), (gp.size,))
    new.delta[gp], collapsed = _adaptive_delta(state, state.delta[gp], innovation, y_pert_loc,
                                               r_loc, n_effective)
    new.collapsed += collapsed
    return new


def _adaptive_delta(state, delta, innovation, y_pert, var, n_eff):
    m = y_pert.shape[-1]
    rinv = 1.0 / var
    has_obs = n_eff > 0
    chi2 = (rinv * innovation**2).sum(axis=-1)
    trace = (rinv * (y_pert**2).sum(axis=-1)).sum(axis=-1) / (m - 1)
    collapsed = has_obs & ~(trace > 1e-300)
    ok = has_obs & ~collapsed
    with np.errstate(divide="ignore", invalid="ignore"):
        estimate = np.where(ok, (chi2 - n_eff) / trace, state.floor)
    infl2 = (1.0 + delta) ** 2
    if state.gain == "variance":
        with np.errstate(divide="ignore", invalid="ignore"):
            v_o = 2.0 / n_eff * ((infl2 * trace + n_eff) / trace) ** 2
            kappa = np.where(ok, state.prior_std**2 / (state.prior_std**2 + v_o), 0.0)
    else:
        kappa = state.kappa
    infl2 = np.where(ok, (1 - kappa) * infl2 + kappa * np.maximum(estimate, state.floor), infl2)
    infl2 = np.clip(infl2, (1.0 + state.delta_min) ** 2, (1.0 + state.delta_max) ** 2)
    new_delta = np.where(ok, np.sqrt(infl2) - 1.0, delta)
    return new_delta, int(collapsed.sum())


@dataclass
class SweepResult:
    analysis: AnalysisResult
    inflation: InflationState
    failed_gridpoints: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    local_beta: np.ndarray | None = None


def local_analysis_sweep(kind, ens_b, obs: ObservationBatch, loc: LocalizationConfig,
                         inflation: InflationState, scheme: IntegrationScheme | None = None,
                         mode=MeanUpdateMode.PER_STEP, order=None) -> SweepResult:
    """Independent ensemble-space analysis at every gridpoint of a ring.

    Every gridpoint uses its own tapered observations and inflation factor
    and writes back only its own row.  All gridpoints are solved as one
    batch; ``order`` permutes the batch and exists to check that the result
    does not depend on processing order.
    """
    kind = FilterKind.parse(kind)
    mode = MeanUpdateMode.parse(mode)
    if kind not in (FilterKind.LETKF, FilterKind.ETKBF, FilterKind.DETKBF):
        raise ValueError(f"local analysis is not defined for {kind}")
    ens_b = np.asarray(ens_b, dtype=float)
    n, m = ens_b.shape
    h = obs.operator
    xm = ens_b.mean(axis=1)
    pert = ens_b - xm[:, None]
    grid = np.arange(n) if order is None else np.asarray(order)

    idx, taper = _local_plan(n, tuple(h.indices), loc)
    idx, taper = idx[grid], taper[grid]
    valid = taper > 0
    with np.errstate(divide="ignore"):
        var = np.where(valid, obs.errors.variances[idx] / np.where(valid, taper, 1.0), np.inf)
    y_all = h.apply(pert)
    innov_all = obs.y - h.apply(xm)
    y_raw = y_all[idx]                                   # (G, Lmax, M), uninflated
    innov = np.where(valid, innov_all[idx], 0.0)
    y_raw = np.where(valid[..., None], y_raw, 0.0)
    n_eff = (np.where(valid, taper, 0.0)).sum(axis=-1)

    delta = inflation.delta[grid]
    scale = 1.0 + delta
    y_b = scale[:, None, None] * y_raw
    rows_mean = xm[grid]
    rows_pert = scale[:, None] * pert[grid]                # (G, M)

    evals = np.linalg.eigvalsh(gram(y_b, 1.0 / var))
    local_beta = np.clip(evals[..., -1], 0.0, None) / (m - 1)

    failed = np.full(grid.size, -1)
    with np.errstate(all="ignore"):
        if kind is FilterKind.LETKF:
            w, w_mean, _ = letkf_weights(y_b, var, -innov)
            rows = (rows_mean + np.einsum("gm,gm->g", rows_pert, w_mean))[:, None] \
                + np.einsum("gm,gmk->gk", rows_pert, w)
        elif kind is FilterKind.ETKBF:
            w, w_mean, failed = integrate_etkbf(y_b, -innov, var, scheme, mode)
            rows = (rows_mean + np.einsum("gm,gm->g", rows_pert, w_mean))[:, None] \
                + np.einsum("gm,gmk->gk", rows_pert, w)
        else:
            y_mean_loc = np.where(valid, h.apply(xm)[idx], 0.0)
            y_full = y_mean_loc[..., None] + y_b
            y_obs = np.where(valid, obs.y[idx], 0.0)
            w, failed = integrate_detkbf(y_full, y_obs, var, scheme)
            rows_full = rows_mean[:, None] + rows_pert
            rows = np.einsum("gm,gmk->gk", rows_full, w)

    bad = (failed >= 0) | ~np.isfinite(rows).all(axis=1)
    rows = np.where(bad[:, None], rows_mean[:, None] + rows_pert, rows)

    out = np.empty_like(ens_b)
    out[grid] = rows
    new_infl = inflation.copy()
    if inflation.adaptive:
        new_delta, collapsed = _adaptive_delta(inflation, delta, innov, y_raw, var, n_eff)
        new_infl.delta[grid] = new_delta
        new_infl.collapsed += collapsed
        if collapsed:
            log.debug("%d gridpoints skipped the inflation update (zero ensemble trace)", collapsed)
    failed_gp = np.sort(grid[bad])
    report = StiffnessReport(float(local_beta.max(initial=0.0)))
    steps = 0 if scheme is None or kind is FilterKind.LETKF else len(scheme.schedule)
    result = AnalysisResult(out, stiffness=report, steps=steps, failed=bool(bad.any()),
                            reason=f"{bad.sum()} gridpoint analyses failed" if bad.any() else "")
    beta_full = np.empty(n)
    beta_full[grid] = local_beta
    return SweepResult(result, new_infl, failed_gp, beta_full)
