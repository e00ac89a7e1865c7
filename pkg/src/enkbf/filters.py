"""Analysis steps: LETKF, ETKBF/DETKBF weight flows, their state-space parents, and the KF.

The ensemble-space kernels (``letkf_weights``, ``etkbf_step``, ``detkbf_step``)
broadcast over any leading batch axes, so one call can carry out the local
analyses of every gridpoint at once.  Observation-space arrays have shape
``(..., L, M)`` and diagonal error variances ``(..., L)``; a variance of
``inf`` marks a padded (ignored) observation.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .ensemble import center
from .observations import ObservationBatch
from .pseudo_time import StepSchedule, StiffnessReport, beta_ratio, gram

log = logging.getLogger(__name__)


class FilterKind(enum.Enum):
    LETKF = "letkf"
    ETKBF = "etkbf"
    DETKBF = "detkbf"
    BGR09_STATE = "bgr09"
    BR10_STATE = "br10"
    KF_REFERENCE = "kf"

    @classmethod
    def parse(cls, value) -> "FilterKind":
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        for k in cls:
            if key in (k.value, k.name.lower()):
                return k
        raise ValueError(f"unknown filter kind {value!r}")


class Scheme(enum.Enum):
    EULER_FORWARD = "euler"
    DSI = "dsi"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        key = str(value).lower()
        for s in cls:
            if key in (s.value, s.name.lower(), "ef" if s is cls.EULER_FORWARD else "dsi"):
                return s
        raise ValueError(f"unknown integration scheme {value!r}")


class MeanUpdateMode(enum.Enum):
    PER_STEP = "per_step"
    FINAL_GAIN = "final_gain"

    @classmethod
    def parse(cls, value) -> "MeanUpdateMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class IntegrationScheme:
    scheme: Scheme
    schedule: StepSchedule


@dataclass
class AnalysisResult:
    ensemble: np.ndarray
    weights: np.ndarray | None = None
    mean_weights: np.ndarray | None = None
    stiffness: StiffnessReport = field(default_factory=lambda: StiffnessReport(0.0))
    steps: int = 0
    failed: bool = False
    reason: str = ""


# ---------------------------------------------------------------------------
# KF reference


def kf_reference_analysis(x_b, p_b, obs: ObservationBatch):
    """Textbook Kalman analysis; returns the analysis mean and covariance."""
    x_b = np.asarray(x_b, dtype=float)
    p_b = np.asarray(p_b, dtype=float)
    h = obs.operator.dense()
    r = np.diag(obs.errors.variances)
    s = h @ p_b @ h.T + r
    k = np.linalg.solve(s, h @ p_b).T
    p_a = p_b - k @ h @ p_b
    p_a = 0.5 * (p_a + p_a.T)
    x_a = x_b - k @ (h @ x_b - obs.y)
    return x_a, p_a


def kf_information_covariance(p_b, obs: ObservationBatch):
    """((P^b)^-1 + H^T R^-1 H)^-1, the second algebraic form of the analysis covariance."""
    h = obs.operator.dense()
    a = np.linalg.inv(p_b) + h.T @ (obs.errors.inverse[:, None] * h)
    p = np.linalg.inv(a)
    return 0.5 * (p + p.T)


# ---------------------------------------------------------------------------
# ensemble-space kernels


def _transpose(a):
    return np.swapaxes(a, -1, -2)


def letkf_weights(y_pert, var, innovation_base):
    """Symmetric-root LETKF transform.

    Returns ``(W, w_mean, P_tilde)`` with P_tilde = (Y^T R^-1 Y + (M-1) I)^-1,
    W = [(M-1) P_tilde]^(1/2) and w_mean = -P_tilde Y^T R^-1 (H xbar - y).
    """
    m = y_pert.shape[-1]
    rinv = 1.0 / var
    evals, evecs = np.linalg.eigh(gram(y_pert, rinv))
    evals = np.clip(evals, 0.0, None)
    inv = 1.0 / (evals + (m - 1))
    p_tilde = (evecs * inv[..., None, :]) @ _transpose(evecs)
    w = (evecs * np.sqrt((m - 1) * inv)[..., None, :]) @ _transpose(evecs)
    rhs = _transpose(y_pert) @ (rinv * innovation_base)[..., None]
    w_mean = -(p_tilde @ rhs)[..., 0]
    return w, w_mean, p_tilde


def _kernel(y, p_tilde, var, ds, scheme):
    if scheme is Scheme.EULER_FORWARD:
        return 1.0 / var
    d = np.einsum("...lm,...mk,...lk->...l", y, p_tilde, y)
    return 1.0 / (ds * d + var)


def etkbf_step(w, w_mean, y_b, innovation_base, var, ds, scheme=Scheme.DSI,
               mode=MeanUpdateMode.PER_STEP):
    """One Euler-forward or DSI step of the perturbation-weight flow.

    ``innovation_base`` is H xbar^b - y.  In PER_STEP mode the mean weights
    follow the DSI mean update translated to ensemble space; in FINAL_GAIN
    mode they are returned unchanged.
    """
    m = w.shape[-1]
    p_tilde = w @ _transpose(w) / (m - 1)
    kinv = _kernel(y_b, p_tilde, var, ds, scheme)
    gain = p_tilde @ _transpose(y_b)
    w_new = w - 0.5 * ds * gain @ (kinv[..., :, None] * (y_b @ w))
    if mode is MeanUpdateMode.PER_STEP:
        innov = innovation_base + (y_b @ w_mean[..., None])[..., 0]
        w_mean = w_mean - ds * (gain @ (kinv * innov)[..., None])[..., 0]
    return w_new, w_mean


def detkbf_step(w_full, y_full, y_obs, var, ds, scheme=Scheme.DSI):
    """One step of the full-ensemble weight flow, using the centered covariance."""
    m = w_full.shape[-1]
    wc = center(w_full)
    p_tilde = wc @ _transpose(wc) / (m - 1)
    kinv = _kernel(y_full, p_tilde, var, ds, scheme)
    z = y_full @ w_full
    bracket = z + z.mean(axis=-1, keepdims=True) - 2.0 * y_obs[..., None]
    return w_full - 0.5 * ds * p_tilde @ _transpose(y_full) @ (kinv[..., :, None] * bracket)


def final_gain_mean_weights(w, y_b, var, innovation_base):
    """Mean weights from the KF gain built with the integrated covariance."""
    m = w.shape[-1]
    p_tilde = w @ _transpose(w) / (m - 1)
    rhs = _transpose(y_b) @ ((1.0 / var) * innovation_base)[..., None]
    return -(p_tilde @ rhs)[..., 0]


def integrate_etkbf(y_b, innovation_base, var, scheme: IntegrationScheme,
                    mode=MeanUpdateMode.PER_STEP):
    """Integrate the ETKBF weights from W(0) = I over the schedule.

    Returns ``(W, w_mean, failed_step)``.  ``failed_step`` holds, per batch
    element, the 0-based pseudo-step that first produced a non-finite entry,
    or -1 if the integration stayed finite.
    """
    m = y_b.shape[-1]
    batch = y_b.shape[:-2]
    w = np.broadcast_to(np.eye(m), batch + (m, m)).copy()
    w_mean = np.zeros(batch + (m,))
    failed = np.full(batch, -1)
    with np.errstate(all="ignore"):
        for k, ds in enumerate(scheme.schedule):
            w, w_mean = etkbf_step(w, w_mean, y_b, innovation_base, var, ds, scheme.scheme, mode)
            bad = ~(np.isfinite(w).all(axis=(-1, -2)) & np.isfinite(w_mean).all(axis=-1))
            failed = np.where(bad & (failed < 0), k, failed)
        if mode is MeanUpdateMode.FINAL_GAIN:
            w_mean = final_gain_mean_weights(w, y_b, var, innovation_base)
    return w, w_mean, failed


def integrate_detkbf(y_full, y_obs, var, scheme: IntegrationScheme):
    m = y_full.shape[-1]
    batch = y_full.shape[:-2]
    w = np.broadcast_to(np.eye(m), batch + (m, m)).copy()
    failed = np.full(batch, -1)
    with np.errstate(all="ignore"):
        for k, ds in enumerate(scheme.schedule):
            w = detkbf_step(w, y_full, y_obs, var, ds, scheme.scheme)
            bad = ~np.isfinite(w).all(axis=(-1, -2))
            failed = np.where(bad & (failed < 0), k, failed)
    return w, failed


# ---------------------------------------------------------------------------
# state-space references


def _state_kernel(hx, var, ds, scheme):
    m = hx.shape[1]
    if scheme is Scheme.EULER_FORWARD:
        return 1.0 / var
    d = np.einsum("lm,lm->l", hx, hx) / (m - 1)
    return 1.0 / (ds * d + var)


def bgr09_state_step(pert, mean, obs: ObservationBatch, ds, scheme=Scheme.DSI):
    """One step of the perturbation flow plus the matching mean update."""
    h = obs.operator.dense()
    m = pert.shape[1]
    p = pert @ pert.T / (m - 1)
    hx = h @ pert
    kinv = _state_kernel(hx, obs.errors.variances, ds, scheme)
    pht = p @ h.T
    new_pert = pert - 0.5 * ds * pht @ (kinv[:, None] * hx)
    new_mean = mean - ds * pht @ (kinv * (h @ mean - obs.y))
    return new_pert, new_mean


def br10_state_step(full, obs: ObservationBatch, ds, scheme=Scheme.DSI):
    """One step of the full-ensemble flow with the centered sample covariance."""
    h = obs.operator.dense()
    m = full.shape[1]
    pert = center(full)
    p = pert @ pert.T / (m - 1)
    kinv = _state_kernel(h @ pert, obs.errors.variances, ds, scheme)
    hx = h @ full
    bracket = hx + hx.mean(axis=1, keepdims=True) - 2.0 * obs.y[:, None]
    return full - 0.5 * ds * p @ h.T @ (kinv[:, None] * bracket)


def state_space_step(ens, mean, obs: ObservationBatch, ds, scheme, kind: FilterKind):
    """Dispatch to the BGR09 (perturbation) or BR10 (full ensemble) state step.

    For BGR09 ``ens`` holds perturbations and ``mean`` is advanced with the
    DSI mean update.  For BR10 ``ens`` is the full ensemble; ``mean`` is
    ignored and the returned mean is the updated ensemble mean.
    """
    scheme = Scheme.parse(scheme)
    if kind is FilterKind.BGR09_STATE:
        return bgr09_state_step(np.asarray(ens, float), np.asarray(mean, float), obs, ds, scheme)
    if kind is FilterKind.BR10_STATE:
        full = br10_state_step(np.asarray(ens, float), obs, ds, scheme)
        return full, full.mean(axis=1)
    raise ValueError(f"state_space_step does not handle {kind}")


def bgr09_perturbation_rhs(pert, obs: ObservationBatch):
    h = obs.operator.dense()
    m = pert.shape[1]
    return -(pert @ (pert.T @ (h.T @ (obs.errors.inverse[:, None] * (h @ pert))))) / (2 * (m - 1))


def mean_rhs(pert, mean, obs: ObservationBatch):
    h = obs.operator.dense()
    m = pert.shape[1]
    return -(pert @ (pert.T @ (h.T @ (obs.errors.inverse * (h @ mean - obs.y))))) / (m - 1)


def br10_rhs(full, obs: ObservationBatch):
    h = obs.operator.dense()
    m = full.shape[1]
    pert = center(full)
    hx = h @ full
    bracket = hx + hx.mean(axis=1, keepdims=True) - 2.0 * obs.y[:, None]
    return -(pert @ (pert.T @ (h.T @ (obs.errors.inverse[:, None] * bracket)))) / (2 * (m - 1))


# ---------------------------------------------------------------------------
# drivers


def letkf_analysis(ens_b, obs: ObservationBatch, inflation: float = 0.0) -> AnalysisResult:
    ens_b = np.asarray(ens_b, dtype=float)
    m = ens_b.shape[1]
    xm = ens_b.mean(axis=1)
    pert = (1.0 + inflation) * (ens_b - xm[:, None])
    if obs.operator.n_obs == 0:
        return AnalysisResult(xm[:, None] + pert, np.eye(m), np.zeros(m))
    y_b = obs.operator.apply(pert)
    d0 = obs.operator.apply(xm) - obs.y
    report = beta_ratio(y_b, obs.errors)
    try:
        w, w_mean, _ = letkf_weights(y_b, obs.errors.variances, d0)
    except np.linalg.LinAlgError as exc:
        return AnalysisResult(ens_b, stiffness=report, failed=True, reason=f"eigh failed: {exc}")
    xa = xm + pert @ w_mean
    return AnalysisResult(xa[:, None] + pert @ w, w, w_mean, report)


def run_kbf_analysis(kind, ens_b, obs: ObservationBatch, scheme: IntegrationScheme,
                     mode=MeanUpdateMode.PER_STEP, inflation: float = 0.0) -> AnalysisResult:
    """Inflate, integrate the chosen pseudo-time flow over the schedule, assemble X^a."""
    kind = FilterKind.parse(kind)
    mode = MeanUpdateMode.parse(mode)
    ens_b = np.asarray(ens_b, dtype=float)
    xm = ens_b.mean(axis=1)
    pert = (1.0 + inflation) * (ens_b - xm[:, None])
    full = xm[:, None] + pert
    h = obs.operator
    var = obs.errors.variances
    y_b = h.apply(pert)
    report = beta_ratio(y_b, obs.errors)
    n = len(scheme.schedule)

    if kind is FilterKind.ETKBF:
        w, w_mean, failed = integrate_etkbf(y_b, h.apply(xm) - obs.y, var, scheme, mode)
        if failed >= 0:
            return _failure(ens_b, report, failed)
        with np.errstate(all="ignore"):
            xa = xm + pert @ w_mean
            return AnalysisResult(xa[:, None] + pert @ w, w, w_mean, report, n)

    if kind is FilterKind.DETKBF:
        w, failed = integrate_detkbf(h.apply(full), obs.y, var, scheme)
        if failed >= 0:
            return _failure(ens_b, report, failed)
        with np.errstate(all="ignore"):
            return AnalysisResult(full @ w, w, None, report, n)

    if kind is FilterKind.BGR09_STATE:
        x, mean = pert, xm
        with np.errstate(all="ignore"):
            for k, ds in enumerate(scheme.schedule):
                x, mean = bgr09_state_step(x, mean, obs, ds, scheme.scheme)
                if not (np.isfinite(x).all() and np.isfinite(mean).all()):
                    return _failure(ens_b, report, k)
        if mode is MeanUpdateMode.FINAL_GAIN:
            hd = h.dense()
            p_a = x @ x.T / (x.shape[1] - 1)
            mean = xm - p_a @ hd.T @ (obs.errors.inverse * (hd @ xm - obs.y))
        return AnalysisResult(mean[:, None] + x, stiffness=report, steps=n)

    if kind is FilterKind.BR10_STATE:
        x = full
        with np.errstate(all="ignore"):
            for k, ds in enumerate(scheme.schedule):
                x = br10_state_step(x, obs, ds, scheme.scheme)
                if not np.isfinite(x).all():
                    return _failure(ens_b, report, k)
        return AnalysisResult(x, stiffness=report, steps=n)

    raise ValueError(f"run_kbf_analysis does not handle {kind}")


def _failure(ens_b, report, step):
    reason = f"non-finite values at pseudo-step {int(step)}"
    log.debug(reason)
    return AnalysisResult(ens_b, stiffness=report, steps=int(step) + 1, failed=True, reason=reason)


def analyze(kind, ens_b, obs: ObservationBatch, scheme: IntegrationScheme | None = None,
            mode=MeanUpdateMode.PER_STEP, inflation: float = 0.0) -> AnalysisResult:
    """Global (unlocalized) analysis for any filter kind except the KF reference."""
    kind = FilterKind.parse(kind)
    if kind is FilterKind.LETKF:
        return letkf_analysis(ens_b, obs, inflation)
    if scheme is None:
        raise ValueError(f"{kind.value} needs an integration scheme")
    return run_kbf_analysis(kind, ens_b, obs, scheme, mode, inflation)
