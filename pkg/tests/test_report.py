import csv
import json

import pytest

from enkbf.config import l63_config, l96_config
from enkbf.experiment import CycleDiagnostics, run_twin_experiment
from enkbf.report import (DIAGNOSTIC_COLUMNS, ECDF_COLUMNS, SWEEP_COLUMNS, ReportError,
                          emit_report, write_ecdf_csv, write_inflation_csv, write_sweep_csv)
from enkbf.suites import SuiteRow


def test_empty_diagnostics_give_header_only(tmp_path):
    res = run_twin_experiment(l63_config(cycles=3, spinup=1).replace(run={"record": False}))
    (path,) = emit_report(res.summary, res.diagnostics, tmp_path, formats=("csv",))
    assert path.read_text() == ",".join(DIAGNOSTIC_COLUMNS) + "\n"


def test_float_formatting_round_trips(tmp_path):
    d = CycleDiagnostics(1, 0.1 + 0.2, 1 / 3, 2.0, float("nan"), 0.0289, True)
    (path,) = emit_report(None, [d], tmp_path, formats=("csv",))
    rows = list(csv.DictReader(path.open()))
    assert rows[0]["rmse_a"] == "0.30000000000000004"
    assert float(rows[0]["rmse_b"]) == 1 / 3
    assert rows[0]["failed"] == "1"
    assert rows[0]["beta"] == "nan"


def test_rerun_is_byte_identical(tmp_path):
    cfg = l96_config(kind="detkbf", cycles=15, spinup=2)
    for sub in ("a", "b"):
        res = run_twin_experiment(cfg)
        emit_report(res.summary, res.diagnostics, tmp_path / sub, formats=("csv",))
    a = (tmp_path / "a" / "run_diagnostics.csv").read_bytes()
    assert a == (tmp_path / "b" / "run_diagnostics.csv").read_bytes()


def test_summary_json_keys(tmp_path):
    cfg = l96_config(cycles=12, spinup=2)
    res = run_twin_experiment(cfg)
    paths = emit_report(res.summary, res.diagnostics, tmp_path, config=cfg)
    data = json.loads(paths[1].read_text())
    for key in ("rmse_mean", "rmse_std", "spread_mean", "delta_mean", "failures", "wall_clock"):
        assert key in data
    assert data["config"]["filter"]["members"] == 10
    assert data["config"]["inflation"]["floor"] == "-inf"


def test_sweep_ecdf_and_inflation_csv(tmp_path):
    rows = [SuiteRow("delta", 0.05, 0.3, 0.1, 0.33, 0.05, 0)]
    p = write_sweep_csv(tmp_path / "s.csv", rows)
    assert p.read_text().splitlines()[0] == ",".join(SWEEP_COLUMNS)
    assert p.read_text().splitlines()[1] == "delta,0.05,0.3,0.1,0.33,0.05,0"
    e = write_ecdf_csv(tmp_path / "e.csv", [0.5, 1.5], [0.5, 1.0])
    assert e.read_text().splitlines() == [",".join(ECDF_COLUMNS), "0.5,0.5", "1.5,1.0"]
    import numpy as np
    i = write_inflation_csv(tmp_path / "i.csv", [(3, np.array([0.01, 0.02]))])
    assert i.read_text().splitlines() == ["cycle,gridpoint,delta", "3,0,0.01", "3,1,0.02"]


def test_io_errors_name_the_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ReportError, match="file"):
        emit_report(None, [], blocker / "sub", formats=("csv",))
    with pytest.raises(ValueError):
        emit_report(None, [], tmp_path, formats=("xml",))
