"""Self-checks against closed forms: LETKF limit, Riccati solution, state/transform equivalence."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .filters import (FilterKind, IntegrationScheme, MeanUpdateMode, Scheme, detkbf_step,
                      etkbf_step, integrate_etkbf, letkf_weights, state_space_step)
from .observations import ObservationBatch, ObsErrorModel, ObsOperator
from .pseudo_time import build_schedule, riccati_exact


@dataclass
class OracleReport:
    name: str
    tolerance: float
    errors: list[float] = field(default_factory=list)

    @property
    def passed(self) -> int:
        return sum(e <= self.tolerance for e in self.errors)

    @property
    def failed(self) -> int:
        return len(self.errors) - self.passed

    @property
    def max_error(self) -> float:
        return max(self.errors) if self.errors else 0.0

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return (f"{status} {self.name}: {self.passed}/{len(self.errors)} within "
                f"{self.tolerance:g} (max error {self.max_error:.3e})")


def rel_fro(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


def random_instance(rng: np.random.Generator, max_n=10, max_m=8, max_l=10):
    """Random ensemble, dense observation operator, diagonal R and observations."""
    n = int(rng.integers(2, max_n + 1))
    m = int(rng.integers(2, max_m + 1))
    l = int(rng.integers(1, max_l + 1))
    ens = rng.normal(size=(n, 1)) + rng.normal(size=(n, m))
    h = ObsOperator(n, matrix=rng.normal(size=(l, n)) / np.sqrt(n))
    r = ObsErrorModel(rng.uniform(0.5, 2.0, size=l))
    y = h.apply(ens.mean(axis=1)) + rng.normal(size=l)
    return ens, ObservationBatch(y, h, r)


def letkf_limit_oracle(n_instances=100, steps=2000, seed=0, tol=1e-6) -> OracleReport:
    """ETKBF with uniform DSI steps: W W^T/(M-1) against (Y^T R^-1 Y + (M-1) I)^-1."""
    rng = np.random.default_rng(seed)
    integ = IntegrationScheme(Scheme.DSI, build_schedule("uniform", steps))
    report = OracleReport(f"ETKBF {steps} DSI steps vs LETKF covariance", tol)
    for _ in range(n_instances):
        ens, obs = random_instance(rng)
        m = ens.shape[1]
        yb = obs.operator.apply(ens)
        y_pert = yb - yb.mean(axis=1, keepdims=True)
        base = yb.mean(axis=1) - obs.y
        var = obs.errors.variances
        w, _, _ = integrate_etkbf(y_pert, base, var, integ, MeanUpdateMode.FINAL_GAIN)
        _, _, p_tilde = letkf_weights(y_pert, var, base)
        report.errors.append(rel_fro(w @ w.T / (m - 1), p_tilde))
    return report


def _perturbation_flow_rk4(pert, h, rinv, s_end, n_steps):
    m = pert.shape[1]

    def rhs(x):
        p = x @ x.T / (m - 1)
        return -0.5 * p @ h.T @ (rinv[:, None] * (h @ x))

    x = pert.copy()
    ds = s_end / n_steps
    for _ in range(n_steps):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * ds * k1)
        k3 = rhs(x + 0.5 * ds * k2)
        k4 = rhs(x + ds * k3)
        x = x + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x @ x.T / (m - 1)


def riccati_oracle(n_instances=20, seed=1, tol=1e-6, n_steps=400,
                   s_values=(0.25, 0.5, 1.0)) -> OracleReport:
    """RK4 integration of the perturbation flow against the closed-form P(s)."""
    rng = np.random.default_rng(seed)
    report = OracleReport("perturbation flow vs closed-form Riccati solution", tol)
    for _ in range(n_instances):
        ens, obs = random_instance(rng)
        m = ens.shape[1]
        pert = ens - ens.mean(axis=1, keepdims=True)
        p_b = pert @ pert.T / (m - 1)
        h = obs.operator.dense()
        for s in s_values:
            p_num = _perturbation_flow_rk4(pert, h, obs.errors.inverse, s, max(1, int(n_steps * s)))
            p_ref = riccati_exact(p_b, obs.operator, obs.errors, s)
            report.errors.append(rel_fro(p_num, p_ref))
    return report


def scalar_riccati_oracle(tol=1e-9) -> OracleReport:
    """P^b = H = R = 1 (beta = 1) gives P(1) = 1/2."""
    report = OracleReport("scalar Riccati, beta=1, s=1", tol)
    p = riccati_exact(np.eye(1), ObsOperator.identity(1), ObsErrorModel.uniform(1, 1.0), 1.0)
    report.errors.append(abs(float(p[0, 0]) - 0.5) / 0.5)
    return report


def equivalence_oracle(n_instances=50, steps=6, seed=2, tol=1e-10) -> list[OracleReport]:
    """Stepwise agreement of the ensemble-space flows with their state-space parents."""
    rng = np.random.default_rng(seed)
    reports = []
    for scheme in (Scheme.EULER_FORWARD, Scheme.DSI):
        etk = OracleReport(f"ETKBF vs perturbation+mean state flow ({scheme.value})", tol)
        detk = OracleReport(f"DETKBF vs full-ensemble state flow ({scheme.value})", tol)
        for _ in range(n_instances):
            ens, obs = random_instance(rng)
            m = ens.shape[1]
            ds = 1.0 / steps
            mean_b = ens.mean(axis=1)
            pert_b = ens - mean_b[:, None]
            yb_full = obs.operator.apply(ens)
            y_pert = yb_full - yb_full.mean(axis=1, keepdims=True)
            base = yb_full.mean(axis=1) - obs.y
            var = obs.errors.variances

            w, w_mean = np.eye(m), np.zeros(m)
            pert, mean = pert_b.copy(), mean_b.copy()
            wf, full = np.eye(m), ens.copy()
            for _ in range(steps):
                w, w_mean = etkbf_step(w, w_mean, y_pert, base, var, ds, scheme,
                                       MeanUpdateMode.PER_STEP)
                pert, mean = state_space_step(pert, mean, obs, ds, scheme, FilterKind.BGR09_STATE)
                etk.errors.append(max(rel_fro(pert_b @ w, pert),
                                      rel_fro(mean_b + pert_b @ w_mean, mean)))
                wf = detkbf_step(wf, yb_full, obs.y, var, ds, scheme)
                full, _ = state_space_step(full, None, obs, ds, scheme, FilterKind.BR10_STATE)
                detk.errors.append(rel_fro(ens @ wf, full))
        reports += [etk, detk]
    return reports


def run_all() -> list[OracleReport]:
    return [letkf_limit_oracle(), riccati_oracle(), scalar_riccati_oracle(), *equivalence_oracle()]
