"""Lorenz-63 / Lorenz-96 dynamics and a fixed-step RK4 integrator.

States may be a single vector of shape ``(N,)`` or an ensemble of shape
``(N, M)``; the tendencies broadcast over trailing member columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

BLOWUP_THRESHOLD = 1e6


class ModelDivergence(RuntimeError):
    """Raised when integration produces non-finite or runaway values."""


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "l63"
    dt: float = 0.01
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    n: int = 40
    forcing: float = 8.0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ("l63", "l96"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if kind == "l96" and self.n < 4:
            raise ValueError("Lorenz-96 needs at least 4 variables")

    @property
    def state_size(self) -> int:
        return 3 if self.kind == "l63" else self.n

    @classmethod
    def lorenz63(cls, dt: float = 0.01, **kw) -> "ModelSpec":
        return cls(kind="l63", dt=dt, **kw)

    @classmethod
    def lorenz96(cls, n: int = 40, forcing: float = 8.0, dt: float = 0.025) -> "ModelSpec":
        return cls(kind="l96", n=n, forcing=forcing, dt=dt)


def l63_tendency(x, sigma=10.0, rho=28.0, beta=8.0 / 3.0):
    dx = np.empty_like(x)
    dx[0] = sigma * (x[1] - x[0])
    dx[1] = x[0] * (rho - x[2]) - x[1]
    dx[2] = x[0] * x[1] - beta * x[2]
    return dx


def l96_tendency(x, forcing=8.0):
    # cyclic: x[q+1], x[q-2], x[q-1] along axis 0
    return (np.roll(x, -1, axis=0) - np.roll(x, 2, axis=0)) * np.roll(x, 1, axis=0) - x + forcing


def tendency(spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != spec.state_size:
        raise ValueError(f"state has {x.shape[0]} rows, model expects {spec.state_size}")
    if spec.kind == "l63":
        return l63_tendency(x, spec.sigma, spec.rho, spec.beta)
    return l96_tendency(x, spec.forcing)


def rk4_step(f, x, dt):
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def _l63_rk4(x, n_steps, dt, s, r, b):
    out = x.copy()
    for j in range(out.shape[1]):
        a0, a1, a2 = out[0, j], out[1, j], out[2, j]
        for _ in range(n_steps):
            k10 = s * (a1 - a0)
            k11 = a0 * (r - a2) - a1
            k12 = a0 * a1 - b * a2
            b0, b1, b2 = a0 + 0.5 * dt * k10, a1 + 0.5 * dt * k11, a2 + 0.5 * dt * k12
            k20 = s * (b1 - b0)
            k21 = b0 * (r - b2) - b1
            k22 = b0 * b1 - b * b2
            c0, c1, c2 = a0 + 0.5 * dt * k20, a1 + 0.5 * dt * k21, a2 + 0.5 * dt * k22
            k30 = s * (c1 - c0)
            k31 = c0 * (r - c2) - c1
            k32 = c0 * c1 - b * c2
            d0, d1, d2 = a0 + dt * k30, a1 + dt * k31, a2 + dt * k32
            k40 = s * (d1 - d0)
            k41 = d0 * (r - d2) - d1
            k42 = d0 * d1 - b * d2
            a0 += dt / 6.0 * (k10 + 2.0 * k20 + 2.0 * k30 + k40)
            a1 += dt / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41)
            a2 += dt / 6.0 * (k12 + 2.0 * k22 + 2.0 * k32 + k42)
        out[0, j], out[1, j], out[2, j] = a0, a1, a2
    return out


@njit(cache=True)
def _l96_tend(x, f, out):
    n = x.shape[0]
    for q in range(n):
        out[q] = (x[(q + 1) % n] - x[(q - 2) % n]) * x[(q - 1) % n] - x[q] + f


@njit(cache=True)
def _l96_rk4(x, n_steps, dt, f):
    n, m = x.shape
    out = x.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for j in range(m):
        a = out[:, j].copy()
        for _ in range(n_steps):
            _l96_tend(a, f, k1)
            for q in range(n):
                tmp[q] = a[q] + 0.5 * dt * k1[q]
            _l96_tend(tmp, f, k2)
            for q in range(n):
                tmp[q] = a[q] + 0.5 * dt * k2[q]
            _l96_tend(tmp, f, k3)
            for q in range(n):
                tmp[q] = a[q] + dt * k3[q]
            _l96_tend(tmp, f, k4)
            for q in range(n):
                a[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
        out[:, j] = a
    return out


def rk4_advance(spec: ModelSpec, x: np.ndarray, n_steps: int) -> np.ndarray:
    """Advance ``x`` by ``n_steps`` classical RK4 steps of size ``spec.dt``.

    Members (columns) are integrated independently by a compiled loop; the
    arithmetic is the same as :func:`rk4_step` applied to :func:`tendency`.
    Raises :class:`ModelDivergence` if the state leaves the finite range or
    any component exceeds ``BLOWUP_THRESHOLD`` in magnitude.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    x = np.array(x, dtype=float)
    if x.shape[0] != spec.state_size:
        raise ValueError(f"state has {x.shape[0]} rows, model expects {spec.state_size}")
    if n_steps == 0:
        return x
    x2 = x.reshape(x.shape[0], -1)
    if spec.kind == "l63":
        out = _l63_rk4(x2, n_steps, spec.dt, spec.sigma, spec.rho, spec.beta)
    else:
        out = _l96_rk4(x2, n_steps, spec.dt, spec.forcing)
    if not np.all(np.isfinite(out)) or np.abs(out).max(initial=0.0) > BLOWUP_THRESHOLD:
        raise ModelDivergence("model state diverged during RK4 integration")
    return out.reshape(x.shape)
