"""
CSV and JSON readers/writers for trajectories, reports, sweeps and
measured data. Floats are written with 17 significant digits so that every file reads
back bit for bit.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import ConfigError
from .ermakov import Trajectory
from .experiment import MeasuredSeries, SweepResult
from .metrics import QslReport

TRAJECTORY_COLUMNS = ("t", "b", "bdot", "omega_sq")
REPORT_COLUMNS = ("t", "F", "logF", "bures", "q_star", "var_h", "gamma_cum")
SWEEP_COLUMNS = ("axis_value", "b_tau", "F_tau", "bures_tau", "gamma_tau", "delta_l", "tau_qsl", "status")
PROTOCOL_COLUMNS = ("t", "omega_sq")


def fmt(x) -> str:
    return format(float(x), ".17g")


def _write_rows(path, header, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([c if isinstance(c, str) else fmt(c) for c in row])
    return path


def _read_table(path, required, optional=()):
    """Read a numeric CSV; returns {column: ndarray}. Errors carry line numbers."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot open ({exc.strerror})") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigError(f"{path}: empty file") from None
        missing = [c for c in required if c not in header]
        unknown = [c for c in header if c not in required and c not in optional]
        if missing or unknown:
            raise ConfigError(
                f"{path}:1: expected columns {','.join(required)}"
                + (f"[,{','.join(optional)}]" if optional else "")
                + f", got {','.join(header)}"
            )
        data = {c: [] for c in header}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ConfigError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            for name, cell in zip(header, row):
                try:
                    data[name].append(float(cell))
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: column {name!r}: not a number: {cell!r}") from None
    return {k: np.array(v, dtype=float) for k, v in data.items()}


def write_trajectory_csv(path, traj: Trajectory):
    return _write_rows(path, TRAJECTORY_COLUMNS, (traj.t, traj.b, traj.bdot, traj.omega_sq))


def read_trajectory_csv(path, omega0=1.0) -> Trajectory:
    d = _read_table(path, TRAJECTORY_COLUMNS)
    return Trajectory(d["t"], d["b"], d["bdot"], d["omega_sq"], omega0)


def write_report_csv(path, report: QslReport):
    cols = (
        report.t,
        report.fidelity,
        report.log_fidelity,
        report.bures,
        report.q_star,
        report.var_h,
        report.gamma_cum,
    )
    return _write_rows(path, REPORT_COLUMNS, cols)


def read_report_csv(path) -> dict[str, np.ndarray]:
    return _read_table(path, REPORT_COLUMNS)


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n", encoding="utf-8")
    return path


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        # json emits repr(float), the shortest string that round-trips
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_sweep_csv(path, result: SweepResult):
    rows = result.rows
    cols = [
        [r.value for r in rows],
        [r.b_tau for r in rows],
        [r.F_tau for r in rows],
        [r.bures_tau for r in rows],
        [r.gamma_tau for r in rows],
        [r.delta_l for r in rows],
        [r.tau_qsl for r in rows],
        ["ok" if r.ok else "failed: " + r.error.replace("\n", " ") for r in rows],
    ]
    return _write_rows(path, SWEEP_COLUMNS, cols)


def read_sweep_csv(path) -> dict[str, list]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
            raise ConfigError(f"{path}:1: not a sweep file")
        out = {c: [] for c in SWEEP_COLUMNS}
        for row in reader:
            for c in SWEEP_COLUMNS:
                out[c].append(row[c] if c == "status" else float(row[c]))
    return out


def read_measured_csv(path, omega0=1.0) -> MeasuredSeries:
    """Measured data with header ``t,b,s_b[,omega_sq]``."""
    d = _read_table(path, ("t", "b", "s_b"), ("omega_sq",))
    if d["t"].size < 2:
        raise ConfigError(f"{path}: need at least 2 data rows")
    bad = np.flatnonzero(~(d["b"] > 0))
    if bad.size:
        raise ConfigError(f"{path}:{bad[0] + 2}: b must be > 0")
    bad = np.flatnonzero(~(d["s_b"] >= 0))
    if bad.size:
        raise ConfigError(f"{path}:{bad[0] + 2}: s_b must be >= 0")
    return MeasuredSeries(d["t"], d["b"], d["s_b"], d.get("omega_sq"), omega0)


def write_measured_csv(path, series: MeasuredSeries):
    if series.omega_sq is None:
        return _write_rows(path, ("t", "b", "s_b"), (series.t, series.b, series.s_b))
    return _write_rows(
        path, ("t", "b", "s_b", "omega_sq"), (series.t, series.b, series.s_b, series.omega_sq)
    )


def read_protocol_csv(path) -> np.ndarray:
    """Tabulated protocol samples from a ``t,omega_sq`` file, shape (n, 2)."""
    d = _read_table(path, PROTOCOL_COLUMNS)
    return np.column_stack([d["t"], d["omega_sq"]])


def write_protocol_csv(path, t, omega_sq):
    return _write_rows(path, PROTOCOL_COLUMNS, (t, omega_sq))
