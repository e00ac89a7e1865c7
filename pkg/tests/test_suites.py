import numpy as np
import pytest

from enkbf.config import ConfigError, InflationConfig, l63_config, l96_config
from enkbf.suites import (DELTA_GRID_FREQUENT, DELTA_GRID_INFREQUENT, SPINUP_CYCLES, SuiteKind,
                          ecdf, peak_rmse, run_suite)


def test_grids():
    assert DELTA_GRID_FREQUENT == (0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1)
    assert DELTA_GRID_INFREQUENT == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def test_ecdf():
    x, p = ecdf([3.0, 1.0, 2.0, 2.0])
    np.testing.assert_array_equal(x, [1.0, 2.0, 2.0, 3.0])
    np.testing.assert_array_equal(p, [0.25, 0.5, 0.75, 1.0])


def test_empty_grid_rejected():
    with pytest.raises(ConfigError):
        run_suite(SuiteKind.INFLATION_SWEEP, l63_config(), [])


def test_inflation_sweep_rows():
    res = run_suite("inflation", l63_config(cycles=120, spinup=20), [0.02, 0.08])
    assert [r.param_value for r in res.rows] == [0.02, 0.08]
    assert [r.delta_mean for r in res.rows] == pytest.approx([0.02, 0.08], abs=1e-15)
    assert res.best() in res.rows


def test_step_sweep_accepts_triples():
    base = l63_config(kind="etkbf", cycles=60, spinup=10)
    res = run_suite(SuiteKind.STEP_SWEEP, base, [2, ("euler", "uniform", 4), ("dsi", "doubling", 8)])
    names = [(r.param_name, r.param_value) for r in res.rows]
    assert names == [("steps[dsi/uniform]", 2), ("steps[euler/uniform]", 4),
                     ("steps[dsi/doubling]", 8)]
    with pytest.raises(ConfigError):
        run_suite(SuiteKind.STEP_SWEEP, base, [("dsi", "doubling", 3)])


def test_beta_ecdf_collects_post_spinup_betas():
    res = run_suite(SuiteKind.BETA_ECDF, l63_config(kind="etkbf", cycles=80, spinup=30), [8, 25])
    assert set(res.betas) == {8, 25}
    assert all(b.size == 50 for b in res.betas.values())
    assert all(r.param_name == "interval" for r in res.rows)
    assert np.median(res.betas[25]) > np.median(res.betas[8])


def test_beta_ecdf_records_uninflated_forecast_stiffness():
    # beta scales with the square of the perturbations, so a global fixed
    # inflation multiplies it by exactly (1 + delta)^2
    res = run_suite(SuiteKind.BETA_ECDF, l63_config(cycles=40, spinup=0), [(25, 0.5)])
    run = res.runs[0]
    assert run.config.inflation.delta == 0.5
    raw = np.array([d.beta_b for d in run.diagnostics])
    inflated = np.array([d.beta for d in run.diagnostics])
    np.testing.assert_allclose(inflated, 2.25 * raw, rtol=1e-12)
    np.testing.assert_array_equal(res.betas[25], raw)


def test_spinup_suite_layout():
    base = l96_config(kind="detkbf", inflation=InflationConfig(mode="fixed", delta=0.05))
    res = run_suite(SuiteKind.SPINUP, base, [1.0])
    assert [r.param_name for r in res.rows] == ["init_scale[euler]", "init_scale[dsi]"]
    dsi = res.runs[1]
    assert dsi.summary.cycles_run == SPINUP_CYCLES and dsi.config.run.init == "steady_state"
    assert np.isfinite(peak_rmse(dsi))


def test_parallel_runs_match_serial():
    base = l63_config(kind="detkbf", cycles=80, spinup=10)
    serial = run_suite(SuiteKind.INFLATION_SWEEP, base, [0.03, 0.06], workers=1)
    parallel = run_suite(SuiteKind.INFLATION_SWEEP, base, [0.03, 0.06], workers=2)
    for a, b in zip(serial.runs, parallel.runs):
        assert a.diagnostics == b.diagnostics
