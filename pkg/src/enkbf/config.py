"""Experiment configuration: dataclasses mirroring the TOML sections."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .filters import FilterKind, IntegrationScheme, MeanUpdateMode, Scheme
from .localization import GAUSSIAN_EQUIVALENT, InflationState, LocalizationConfig
from .models import ModelSpec
from .observations import ObsErrorModel, ObsOperator
from .pseudo_time import build_schedule


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ObservationConfig:
    interval: int = 8               # model steps per assimilation cycle
    operator: str = "all"           # "all" | "every_other"
    parity: int = 0                 # first observed 0-based index for every_other
    variance: float = 2.0

    def build(self, n_state: int) -> tuple[ObsOperator, ObsErrorModel]:
        if self.operator == "all":
            h = ObsOperator.identity(n_state)
        elif self.operator == "every_other":
            h = ObsOperator.every_other(n_state, self.parity)
        else:
            raise ConfigError(f"unknown observation operator {self.operator!r}")
        return h, ObsErrorModel.uniform(h.n_obs, self.variance)


@dataclass(frozen=True)
class FilterConfig:
    kind: str = "letkf"
    members: int = 3
    scheme: str = "dsi"
    schedule: str = "uniform"
    steps: int = 5
    mean_mode: str = "per_step"

    @property
    def filter_kind(self) -> FilterKind:
        return FilterKind.parse(self.kind)

    def integration(self) -> IntegrationScheme:
        return IntegrationScheme(Scheme.parse(self.scheme), build_schedule(self.schedule, self.steps))

    @property
    def mode(self) -> MeanUpdateMode:
        return MeanUpdateMode.parse(self.mean_mode)


@dataclass(frozen=True)
class LocalizationSection:
    enabled: bool = False
    radius: float = 4.0
    scale_factor: float = GAUSSIAN_EQUIVALENT

    def build(self) -> LocalizationConfig | None:
        if not self.enabled:
            return None
        return LocalizationConfig(self.radius, "ring", self.scale_factor)


@dataclass(frozen=True)
class InflationConfig:
    mode: str = "fixed"             # "fixed" | "adaptive"
    delta: float = 0.0              # fixed value, or initial value when adaptive
    kappa: float = 0.001
    floor: float = float("-inf")
    delta_min: float = 0.0
    delta_max: float = 1.0
    gain: str = "fixed"             # "fixed" | "variance"
    prior_std: float = 0.04

    def build(self, n: int) -> InflationState:
        if self.mode == "fixed":
            return InflationState.fixed(n, self.delta)
        if self.mode == "adaptive":
            return InflationState.adaptive_start(n, self.delta, kappa=self.kappa, floor=self.floor,
                                                 delta_min=self.delta_min,
                                                 delta_max=self.delta_max, gain=self.gain,
                                                 prior_std=self.prior_std)
        raise ConfigError(f"unknown inflation mode {self.mode!r}")


@dataclass(frozen=True)
class RunConfig:
    cycles: int = 20000
    spinup: int = 1000
    seed: int = 0
    init: str = "truth_plus_r"      # "truth_plus_r" | "truth_plus_identity" | "steady_state"
    init_scale: float = 1.0         # multiplies the init noise variance
    nature_spinup: int = 2000       # model steps before cycle 0
    abort_fraction: float = 0.05
    record: bool = True             # keep per-cycle diagnostics
    record_inflation: bool = False  # keep the per-gridpoint delta field after each analysis


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec = field(default_factory=ModelSpec)
    observations: ObservationConfig = field(default_factory=ObservationConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    localization: LocalizationSection = field(default_factory=LocalizationSection)
    inflation: InflationConfig = field(default_factory=InflationConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.filter.members < 2:
            raise ConfigError("ensemble needs at least 2 members")
        if not self.run.cycles > self.run.spinup >= 0:
            raise ConfigError("cycles must exceed the spin-up discard")
        if self.observations.interval < 1:
            raise ConfigError("observation interval must be at least one model step")
        if self.observations.variance <= 0:
            raise ConfigError("observation variance must be positive")
        if self.inflation.mode not in ("fixed", "adaptive"):
            raise ConfigError(f"unknown inflation mode {self.inflation.mode!r}")
        if self.inflation.delta < 0:
            raise ConfigError("inflation must be non-negative")
        if self.run.init not in ("truth_plus_r", "truth_plus_identity", "steady_state"):
            raise ConfigError(f"unknown ensemble init {self.run.init!r}")
        try:
            self.inflation.build(self.model.state_size)
            self.localization.build()
            kind = self.filter.filter_kind
            self.filter.mode
            if kind is FilterKind.KF_REFERENCE:
                raise ConfigError("the KF reference cannot be cycled")
            self.filter.integration()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.localization.enabled:
            if self.model.kind != "l96":
                raise ConfigError("localization needs a ring (Lorenz-96) model")
            if self.filter.filter_kind not in (FilterKind.LETKF, FilterKind.ETKBF,
                                               FilterKind.DETKBF):
                raise ConfigError("localization supports letkf, etkbf and detkbf only")
        if self.inflation.mode == "adaptive" and not self.localization.enabled:
            raise ConfigError("adaptive inflation is implemented for the local analysis only")

    def replace(self, **sections) -> "ExperimentConfig":
        """Return a copy with fields overridden, e.g. ``replace(filter={"steps": 8})``."""
        updates = {}
        for name, value in sections.items():
            current = getattr(self, name)
            updates[name] = dataclasses.replace(current, **value) if isinstance(value, dict) else value
        return dataclasses.replace(self, **updates)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {
    "model": ModelSpec,
    "observations": ObservationConfig,
    "filter": FilterConfig,
    "localization": LocalizationSection,
    "inflation": InflationConfig,
    "run": RunConfig,
}


def config_from_dict(data: dict) -> ExperimentConfig:
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        section = dict(data.get(name, {}))
        allowed = {f.name for f in dataclasses.fields(cls)}
        bad = set(section) - allowed
        if bad:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(bad)}")
        try:
            kwargs[name] = cls(**section)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{name}]: {exc}") from exc
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    with path.open("rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


# Presets matching the twin-experiment settings.

def l63_config(interval: int = 8, kind: str = "letkf", delta: float = 0.05, steps: int = 5,
               schedule: str = "uniform", scheme: str = "dsi", cycles: int = 20000,
               spinup: int = 1000, seed: int = 0, mean_mode: str = "per_step",
               **run) -> ExperimentConfig:
    return ExperimentConfig(
        model=ModelSpec.lorenz63(dt=0.01),
        observations=ObservationConfig(interval=interval, operator="all", variance=2.0),
        filter=FilterConfig(kind=kind, members=3, scheme=scheme, schedule=schedule, steps=steps,
                            mean_mode=mean_mode),
        inflation=InflationConfig(mode="fixed", delta=delta),
        run=RunConfig(cycles=cycles, spinup=spinup, seed=seed, init="truth_plus_r", **run),
    )


def l96_config(kind: str = "letkf", members: int = 10, steps: int = 4, scheme: str = "dsi",
               cycles: int = 20000, spinup: int = 1000, seed: int = 0,
               inflation: InflationConfig | None = None, mean_mode: str = "per_step",
               **run) -> ExperimentConfig:
    run.setdefault("nature_spinup", 4000)
    run.setdefault("init", "truth_plus_identity")
    return ExperimentConfig(
        model=ModelSpec.lorenz96(n=40, forcing=8.0, dt=0.025),
        observations=ObservationConfig(interval=2, operator="every_other", parity=0, variance=1.0),
        filter=FilterConfig(kind=kind, members=members, scheme=scheme, schedule="uniform",
                            steps=steps, mean_mode=mean_mode),
        localization=LocalizationSection(enabled=True, radius=4.0),
        inflation=inflation or InflationConfig(mode="adaptive", delta=0.0),
        run=RunConfig(cycles=cycles, spinup=spinup, seed=seed, **run),
    )
