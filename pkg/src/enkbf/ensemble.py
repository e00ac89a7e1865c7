"""Ensemble matrices and the sample statistics shared by every filter.

Ensembles are stored as ``(N, M)`` arrays, one member per column.  The
:class:`Ensemble` and :class:`Weights` wrappers carry a role flag so that a
perturbation matrix cannot be passed where a full ensemble is expected.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Role(enum.Enum):
    FULL = "full"
    PERTURBATIONS = "perturbations"


class RoleError(ValueError):
    """An ensemble or weight matrix was used in the wrong role."""


def _row_scale(a):
    return np.abs(a).max(axis=-1) + 1.0


@dataclass(frozen=True)
class Ensemble:
    values: np.ndarray
    role: Role = Role.FULL

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError(f"ensemble must be 2-D (N, M), got shape {v.shape}")
        n, m = v.shape
        if n < 1 or m < 2:
            raise ValueError(f"need N >= 1 and M >= 2, got N={n}, M={m}")
        if not np.all(np.isfinite(v)):
            raise ValueError("ensemble contains non-finite entries")
        if self.role is Role.PERTURBATIONS:
            sums = v.sum(axis=1)
            if np.any(np.abs(sums) > 1e-10 * _row_scale(v) * m):
                raise RoleError("perturbation rows do not sum to zero")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_state(self) -> int:
        return self.values.shape[0]

    @property
    def n_members(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Weights:
    values: np.ndarray
    role: Role = Role.PERTURBATIONS

    def __post_init__(self):
        w = np.asarray(self.values, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weight matrix contains non-finite entries")
        if self.role is Role.PERTURBATIONS:
            # W 1 = 1 keeps X W centered; 1^T W = 1^T is the column-sum manifold
            if np.any(np.abs(w.sum(axis=0) - 1.0) > 1e-8) or \
                    np.any(np.abs(w.sum(axis=1) - 1.0) > 1e-8):
                raise RoleError("perturbation weight rows and columns must sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "values", w)


def center(a: np.ndarray) -> np.ndarray:
    """Apply (I - U) from the right: subtract the row means along the last axis."""
    return a - a.mean(axis=-1, keepdims=True)


def mean_and_perturbations(ens: Ensemble) -> tuple[np.ndarray, Ensemble]:
    if ens.role is not Role.FULL:
        raise RoleError("mean_and_perturbations expects a full ensemble")
    x = ens.values
    mean = x.mean(axis=1)
    return mean, Ensemble(x - mean[:, None], Role.PERTURBATIONS)


def sample_covariance(pert: Ensemble) -> np.ndarray:
    """P = X X^T / (M - 1), with roundoff-level negative eigenvalues clipped."""
    if pert.role is not Role.PERTURBATIONS:
        raise RoleError("sample_covariance expects centered perturbations")
    x = pert.values
    p = x @ x.T / (x.shape[1] - 1)
    p = 0.5 * (p + p.T)
    return clip_psd(p)


def clip_psd(p: np.ndarray) -> np.ndarray:
    """Zero eigenvalues in [-1e-12 trace, 0); raise on anything more negative."""
    evals, evecs = np.linalg.eigh(p)
    tol = 1e-12 * max(np.trace(p), 0.0)
    if evals.min() >= 0.0:
        return p
    if evals.min() < -tol:
        raise ValueError(f"matrix is not PSD: smallest eigenvalue {evals.min():.3e}")
    evals = np.clip(evals, 0.0, None)
    q = (evecs * evals) @ evecs.T
    return 0.5 * (q + q.T)


def apply_weight_transform(ens: Ensemble, w: Weights) -> Ensemble:
    """Right-multiply an ensemble by a weight matrix.

    Perturbation weights act on perturbations, full-ensemble weights on the
    full ensemble.  The product keeps the input role.
    """
    if ens.n_members != w.values.shape[0]:
        raise ValueError(
            f"ensemble has {ens.n_members} members but weights are {w.values.shape}"
        )
    expected = Role.PERTURBATIONS if w.role is Role.PERTURBATIONS else Role.FULL
    if ens.role is not expected:
        raise RoleError(f"{w.role.value} weights cannot act on a {ens.role.value} ensemble")
    return Ensemble(ens.values @ w.values, ens.role)


def mean_projector(m: int) -> np.ndarray:
    """Dense U = 11^T / M.  Only for tests and tiny M; production code uses :func:`center`."""
    return np.full((m, m), 1.0 / m)
