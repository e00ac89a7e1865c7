"""CSV/JSON output.  Floats are written with ``repr`` (shortest round-trip form)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from pathlib import Path

DIAGNOSTIC_COLUMNS = ("cycle", "rmse_a", "rmse_b", "spread", "beta", "delta_mean", "failed",
                      "beta_b")
SWEEP_COLUMNS = ("param_name", "param_value", "rmse_mean", "rmse_std", "spread_mean",
                 "delta_mean", "failures")
ECDF_COLUMNS = ("beta", "ecdf")
INFLATION_COLUMNS = ("cycle", "gridpoint", "delta")


class ReportError(OSError):
    pass


def _cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):  # numpy scalar
        return _cell(v.item())
    return v


def _write_csv(path: Path, columns, rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_cell(row[c]) for c in columns])
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from exc
    return path


def write_diagnostics_csv(path, diagnostics) -> Path:
    return _write_csv(path, DIAGNOSTIC_COLUMNS, (asdict(d) for d in diagnostics))


def write_sweep_csv(path, rows) -> Path:
    return _write_csv(path, SWEEP_COLUMNS, (asdict(r) for r in rows))


def write_ecdf_csv(path, beta, prob) -> Path:
    return _write_csv(path, ECDF_COLUMNS,
                      ({"beta": float(b), "ecdf": float(p)} for b, p in zip(beta, prob)))


def write_inflation_csv(path, history) -> Path:
    """``history`` is a sequence of ``(cycle, delta_field)`` pairs; gridpoints are 0-based."""
    rows = ({"cycle": int(c), "gridpoint": q, "delta": float(d)}
            for c, field in history for q, d in enumerate(field))
    return _write_csv(path, INFLATION_COLUMNS, rows)


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def summary_record(summary, config=None) -> dict:
    record = summary.to_dict()
    if config is not None:
        record["config"] = config.to_dict()
    return _json_safe(record)


def write_summary_json(path, summary, config=None) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(summary_record(summary, config), indent=2) + "\n")
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from exc
    return path


def emit_report(summary, diagnostics, out_dir, formats=("csv", "json"), config=None,
                stem: str = "run") -> list[Path]:
    """Write ``<stem>_diagnostics.csv`` and/or ``<stem>_summary.json`` under ``out_dir``."""
    out_dir = Path(out_dir)
    written = []
    for fmt in formats:
        fmt = fmt.lower()
        if fmt == "csv":
            written.append(write_diagnostics_csv(out_dir / f"{stem}_diagnostics.csv", diagnostics))
        elif fmt == "json":
            written.append(write_summary_json(out_dir / f"{stem}_summary.json", summary, config))
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    return written
