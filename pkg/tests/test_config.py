import pytest

from enkbf.config import (ConfigError, ExperimentConfig, FilterConfig, config_from_dict,
                          l63_config, l96_config, load_config)
from enkbf.filters import FilterKind, Scheme
from enkbf.localization import GAUSSIAN_EQUIVALENT

CONFIG_DIR = __import__("pathlib").Path(__file__).resolve().parents[1] / "configs"


def test_defaults_are_valid():
    cfg = ExperimentConfig()
    assert cfg.run.cycles == 20000 and cfg.run.spinup == 1000
    assert cfg.filter.filter_kind is FilterKind.LETKF


@pytest.mark.parametrize("name", ["l63_frequent", "l63_infrequent", "l96_benchmark", "l96_spinup"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIG_DIR / f"{name}.toml")
    assert cfg.filter.members >= 2


def test_benchmark_file_matches_preset():
    assert load_config(CONFIG_DIR / "l96_benchmark.toml") == l96_config()


def test_presets():
    cfg = l63_config(interval=25, kind="detkbf", schedule="doubling", steps=8)
    assert cfg.observations.interval == 25 and cfg.observations.variance == 2.0
    assert len(cfg.filter.integration().schedule) == 8
    l96 = l96_config()
    assert l96.localization.enabled and l96.localization.scale_factor == GAUSSIAN_EQUIVALENT
    assert l96.inflation.mode == "adaptive"
    assert l96.observations.operator == "every_other"


@pytest.mark.parametrize("section, bad", [
    ("filter", {"members": 1}),
    ("run", {"cycles": 10, "spinup": 10}),
    ("filter", {"schedule": "doubling", "steps": 3}),
    ("filter", {"kind": "kf"}),
    ("filter", {"kind": "enkf"}),
    ("filter", {"scheme": "rk4"}),
    ("filter", {"mean_mode": "sometimes"}),
    ("observations", {"variance": 0.0}),
    ("observations", {"interval": 0}),
    ("inflation", {"delta": -0.1}),
    ("inflation", {"mode": "magic"}),
    ("inflation", {"mode": "adaptive", "gain": "bayes"}),
    ("run", {"init": "random"}),
])
def test_invalid_combinations(section, bad):
    with pytest.raises(ConfigError):
        l63_config().replace(**{section: bad})


def test_localization_needs_ring_model():
    with pytest.raises(ConfigError):
        l63_config().replace(localization={"enabled": True})
    with pytest.raises(ConfigError):
        l63_config().replace(inflation={"mode": "adaptive"})
    with pytest.raises(ConfigError):
        l96_config().replace(filter={"kind": "br10"})


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="sections"):
        config_from_dict({"bogus": {}})
    with pytest.raises(ConfigError, match="filter"):
        config_from_dict({"filter": {"member": 3}})
    with pytest.raises(ConfigError):
        config_from_dict({"model": {"kind": "l99"}})


def test_missing_and_malformed_files(tmp_path):
    missing = tmp_path / "nope.toml"
    with pytest.raises(ConfigError, match="nope.toml"):
        load_config(missing)
    bad = tmp_path / "bad.toml"
    bad.write_text("[filter\nkind=")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_roundtrip_dict():
    cfg = l96_config(kind="etkbf")
    assert config_from_dict(cfg.to_dict()) == cfg


def test_partial_replace():
    cfg = l63_config().replace(filter={"steps": 8}, run={"seed": 4})
    assert cfg.filter.steps == 8 and cfg.filter.kind == "letkf" and cfg.run.seed == 4
    assert cfg.replace(filter=FilterConfig(kind="etkbf")).filter.integration().scheme is Scheme.DSI
