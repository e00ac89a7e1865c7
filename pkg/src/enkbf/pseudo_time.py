"""Pseudo-time machinery: step schedules, stiffness ratio, exact Riccati flow, DSI kernel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .observations import ObsErrorModel, ObsOperator


@dataclass(frozen=True)
class StepSchedule:
    increments: tuple[float, ...]

    def __post_init__(self):
        inc = tuple(float(a) for a in self.increments)
        if not inc or any(not a > 0 for a in inc):
            raise ValueError("pseudo-time increments must be positive")
        if abs(sum(inc) - 1.0) > 1e-12:
            raise ValueError(f"pseudo-time increments sum to {sum(inc)!r}, not 1")
        object.__setattr__(self, "increments", inc)

    def __len__(self):
        return len(self.increments)

    def __iter__(self):
        return iter(self.increments)


def build_schedule(kind: str, n: int) -> StepSchedule:
    """Uniform steps, or the "doubling" sequence that ends in three quarter-steps.

    For doubling, each earlier step is half its successor and the first step
    repeats the second so the total is exactly 1, e.g. n=6 gives
    (1/16, 1/16, 1/8, 1/4, 1/4, 1/4).
    """
    if n < 1:
        raise ValueError("schedule needs at least one step")
    if kind == "uniform":
        return StepSchedule((1.0 / n,) * n)
    if kind != "doubling":
        raise ValueError(f"unknown schedule kind {kind!r}")
    if n < 4:
        raise ValueError("doubling schedule needs n >= 4")
    steps = [0.25, 0.25, 0.25]
    while len(steps) < n - 1:
        steps.insert(0, steps[0] / 2)
    steps.insert(0, steps[0])
    return StepSchedule(tuple(steps))


@dataclass(frozen=True)
class StiffnessReport:
    beta: float


def gram(y_pert, rinv):
    """Y^T R^-1 Y for diagonal R; batches over leading axes."""
    return np.swapaxes(y_pert, -1, -2) @ (rinv[..., :, None] * y_pert)


def beta_ratio(y_pert: np.ndarray, r: ObsErrorModel | np.ndarray) -> StiffnessReport:
    """Largest eigenvalue of Y^T R^-1 Y / (M - 1)."""
    y_pert = np.asarray(y_pert, dtype=float)
    rinv = r.inverse if isinstance(r, ObsErrorModel) else 1.0 / np.asarray(r, dtype=float)
    m = y_pert.shape[-1]
    if y_pert.shape[-2] == 0:
        return StiffnessReport(0.0)
    evals = np.linalg.eigvalsh(gram(y_pert, rinv))
    return StiffnessReport(float(max(evals[-1], 0.0)) / (m - 1))


def riccati_exact(p_b: np.ndarray, h: ObsOperator | np.ndarray, r: ObsErrorModel,
                  s: float) -> np.ndarray:
    """Closed-form covariance along the pseudo-time flow dP/ds = -P H^T R^-1 H P."""
    p_b = np.asarray(p_b, dtype=float)
    hd = h.dense() if isinstance(h, ObsOperator) else np.asarray(h, dtype=float)
    n = p_b.shape[0]
    a = hd.T @ (r.inverse[:, None] * hd)
    # P(s) = P^b (A P^b s + I)^-1  <=>  (P^b A s + I) P(s)^T = P^b^T, and P^b is symmetric
    system = s * p_b @ a + np.eye(n)
    p = np.linalg.solve(system, p_b).T
    return 0.5 * (p + p.T)


def dsi_effective_inverse(diag_cov: np.ndarray, r: ObsErrorModel | np.ndarray,
                          ds: float) -> np.ndarray:
    """Entrywise 1 / (ds * D_i + r_i): the diagonal of (ds D + R)^-1."""
    if not ds > 0:
        raise ValueError("ds must be positive")
    var = r.variances if isinstance(r, ObsErrorModel) else np.asarray(r, dtype=float)
    return 1.0 / (ds * np.asarray(diag_cov, dtype=float) + var)


def dsi_effective_inverse_dense(hph: np.ndarray, r_dense: np.ndarray, ds: float) -> np.ndarray:
    """Non-diagonal R variant: (diag(H P H^T R^-1 ds + I))^-1 R^-1 as a dense matrix."""
    if not ds > 0:
        raise ValueError("ds must be positive")
    rinv = np.linalg.inv(r_dense)
    d = np.diag(hph @ rinv) * ds + 1.0
    return rinv / d[:, None]
