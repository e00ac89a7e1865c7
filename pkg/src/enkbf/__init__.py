"""Ensemble Kalman-Bucy filters in ensemble-transform form, with LETKF and twin-experiment tooling."""

from .config import ConfigError, ExperimentConfig, l63_config, l96_config, load_config
from .experiment import RunSummary, compute_diagnostics, run_twin_experiment
from .filters import FilterKind, IntegrationScheme, MeanUpdateMode, Scheme, analyze
from .localization import LocalizationConfig, gaspari_cohn, local_analysis_sweep
from .models import ModelSpec, rk4_advance
from .pseudo_time import build_schedule
from .suites import SuiteKind, run_suite

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ExperimentConfig", "FilterKind", "IntegrationScheme", "LocalizationConfig",
    "MeanUpdateMode", "ModelSpec", "RunSummary", "Scheme", "SuiteKind", "analyze",
    "build_schedule", "compute_diagnostics", "gaspari_cohn", "l63_config", "l96_config",
    "load_config", "local_analysis_sweep", "rk4_advance", "run_suite", "run_twin_experiment",
]
