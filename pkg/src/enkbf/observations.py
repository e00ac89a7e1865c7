"""Linear observation operators, diagonal error models and seeded noise streams."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ObsOperator:
    """Either an ordered index selection or a dense ``(L, N)`` matrix."""

    n_state: int
    indices: tuple[int, ...] | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if (self.indices is None) == (self.matrix is None):
            raise ValueError("give exactly one of indices or matrix")
        if self.indices is not None:
            idx = tuple(int(i) for i in self.indices)
            if len(set(idx)) != len(idx):
                raise ValueError("observed indices must be distinct")
            if any(i < 0 or i >= self.n_state for i in idx):
                raise ValueError("observed index out of range")
            object.__setattr__(self, "indices", idx)
        else:
            h = np.asarray(self.matrix, dtype=float)
            if h.ndim != 2 or h.shape[1] != self.n_state:
                raise ValueError(f"matrix must be (L, {self.n_state}), got {h.shape}")
            h.setflags(write=False)
            object.__setattr__(self, "matrix", h)

    @classmethod
    def identity(cls, n: int) -> "ObsOperator":
        return cls(n, indices=tuple(range(n)))

    @classmethod
    def every_other(cls, n: int, offset: int = 0) -> "ObsOperator":
        """Every other gridpoint; ``offset=0`` picks 0-based 0, 2, ... (1-based odd points)."""
        return cls(n, indices=tuple(range(offset, n, 2)))

    @property
    def n_obs(self) -> int:
        return len(self.indices) if self.indices is not None else self.matrix.shape[0]

    @property
    def locations(self) -> np.ndarray:
        """Gridpoint location of each observation (index operators only)."""
        if self.indices is None:
            raise ValueError("dense operators have no gridpoint locations")
        return np.array(self.indices, dtype=int)

    def dense(self) -> np.ndarray:
        if self.matrix is not None:
            return np.array(self.matrix)
        h = np.zeros((self.n_obs, self.n_state))
        h[np.arange(self.n_obs), list(self.indices)] = 1.0
        return h

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n_state:
            raise ValueError(f"state has {x.shape[0]} rows, operator expects {self.n_state}")
        if self.indices is not None:
            return x[list(self.indices)]
        return self.matrix @ x


@dataclass(frozen=True)
class ObsErrorModel:
    variances: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.variances, dtype=float))
        if v.ndim != 1 or np.any(~(v > 0)):
            raise ValueError("observation error variances must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "variances", v)

    @classmethod
    def uniform(cls, n_obs: int, variance: float) -> "ObsErrorModel":
        return cls(np.full(n_obs, float(variance)))

    @property
    def inverse(self) -> np.ndarray:
        return 1.0 / self.variances


@dataclass(frozen=True)
class ObservationBatch:
    y: np.ndarray
    operator: ObsOperator
    errors: ObsErrorModel
    cycle: int = 0

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if y.shape != (self.operator.n_obs,) or self.errors.variances.shape != y.shape:
            raise ValueError("observation values, operator and error model disagree on L")
        if not np.all(np.isfinite(y)):
            raise ValueError("observations must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)


STREAM_LABELS = ("nature-init", "obs-noise", "ensemble-init", "gridpoint")


@dataclass(frozen=True)
class SeededStream:
    """A labelled, seeded source of standard normal draws.

    ``generator(*offset)`` returns a fresh ``numpy.random.Generator`` whose
    state depends only on ``(label, seed, offset)``, so draws for one cycle or
    gridpoint never depend on what other consumers have drawn.
    """

    label: str
    seed: int
    offset: tuple[int, ...] = field(default=())

    def __post_init__(self):
        base = self.label.split(":", 1)[0]
        if base not in STREAM_LABELS:
            raise ValueError(f"unknown stream label {self.label!r}")

    def _key(self) -> tuple[int, ...]:
        digest = hashlib.sha256(self.label.encode()).digest()
        return (int.from_bytes(digest[:4], "little"),) + tuple(int(o) for o in self.offset)

    def at(self, *offset: int) -> "SeededStream":
        return SeededStream(self.label, self.seed, self.offset + tuple(offset))

    def generator(self, *offset: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed & (2**64 - 1), spawn_key=self.at(*offset)._key())
        return np.random.default_rng(ss)

    def normal(self, size, *offset: int) -> np.ndarray:
        return self.generator(*offset).standard_normal(size)


def project_to_obs(h: ObsOperator, ens: np.ndarray) -> np.ndarray:
    """H applied to each column of an ``(N, M)`` ensemble (full or perturbation)."""
    return h.apply(ens)


def synthesize_observations(truth, h: ObsOperator, r: ObsErrorModel, stream: SeededStream,
                            cycle: int = 0) -> ObservationBatch:
    eps = stream.normal(h.n_obs, cycle) * np.sqrt(r.variances)
    return ObservationBatch(h.apply(truth) + eps, h, r, cycle)


def dump_observations_csv(path, batches) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cycle", "obs_index", "value"])
        for b in batches:
            for i, v in enumerate(b.y):
                w.writerow([b.cycle, i, repr(float(v))])


def load_observations_csv(path, h: ObsOperator, r: ObsErrorModel) -> list[ObservationBatch]:
    values: dict[int, dict[int, float]] = {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            values.setdefault(int(row["cycle"]), {})[int(row["obs_index"])] = float(row["value"])
    out = []
    for cycle in sorted(values):
        entries = values[cycle]
        y = np.array([entries[i] for i in range(len(entries))])
        out.append(ObservationBatch(y, h, r, cycle))
    return out
