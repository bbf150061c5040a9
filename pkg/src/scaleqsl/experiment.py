"""
End-to-end pipelines: simulated protocols, parameter sweeps and measured
cloud-size data with uncertainty propagation.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .core import ConfigError, Custom, NumericalError, QslError, SystemSpec
from .ermakov import DEFAULT_ATOL, DEFAULT_NODES, DEFAULT_RTOL, Trajectory, solve_ermakov
from .metrics import (
    BOUND_SLACK,
    QslReport,
    bures_from_log_fidelity,
    dispersion_rate,
    log_fidelity,
    qsl_report,
    tqd_excess_bures,
    tqd_fidelity,
    tqd_gamma,
)
from .protocols import (
    FrequencyProtocol,
    constant_protocol,
    linear_ramp,
    sta_protocol,
    tqd_reference,
)
from .quadrature import cumulative_trapezoid

__all__ = [
    "SolverSettings",
    "run_protocol",
    "PROTOCOL_FAMILIES",
    "SweepRow",
    "SweepResult",
    "sweep",
    "tqd_sweep",
    "MeasuredSeries",
    "discretized_derivative",
    "metrics_from_data",
    "data_metrics",
    "DATA_TARGETS",
    "propagate_uncertainty",
    "propagate_all",
]


@dataclass(frozen=True)
class SolverSettings:
    num_nodes: int = DEFAULT_NODES
    rel_tol: float = DEFAULT_RTOL
    abs_tol: float = DEFAULT_ATOL


def run_protocol(
    spec: SystemSpec,
    protocol: FrequencyProtocol,
    settings: SolverSettings | None = None,
) -> QslReport:
    """Solve the scaling dynamics of ``protocol`` and evaluate all QSL metrics."""
    settings = settings or SolverSettings()
    try:
        traj = solve_ermakov(protocol, settings.num_nodes, settings.rel_tol, settings.abs_tol)
        report = qsl_report(traj, spec.sigma2)
    except NumericalError as exc:
        raise NumericalError(
            f"{protocol.kind} protocol (omega_f={protocol.omega_f:g}, tau={protocol.tau:g}): {exc}"
        ) from exc
    report.meta.update(system=spec.to_dict(), protocol=protocol.to_dict())
    return report


PROTOCOL_FAMILIES: dict[str, Callable[..., FrequencyProtocol]] = {
    "linear": linear_ramp,
    "sta": sta_protocol,
    "tqd": tqd_reference,
    "constant": lambda omega0, omega_f, tau: constant_protocol(omega0, tau),
}

SWEEP_AXES = ("tau", "omega_f", "sigma2")


@dataclass(frozen=True)
class SweepRow:
    value: float
    b_tau: float = math.nan
    F_tau: float = math.nan
    bures_tau: float = math.nan
    gamma_tau: float = math.nan
    delta_l: float = math.nan
    tau_qsl: float = math.nan
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @classmethod
    def from_report(cls, value, report: QslReport) -> SweepRow:
        return cls(
            value=float(value),
            b_tau=report.b_tau,
            F_tau=report.fidelity_tau,
            bures_tau=report.bures_tau,
            gamma_tau=report.gamma_tau,
            delta_l=report.delta_l,
            tau_qsl=report.tau_qsl,
        )


@dataclass(frozen=True)
class SweepResult:
    axis: str
    values: tuple
    rows: tuple
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.values) != len(self.rows):
            raise ConfigError("sweep rows must align with values")

    @property
    def failed(self) -> list[SweepRow]:
        return [r for r in self.rows if not r.ok]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)


def _sweep_point(args):
    spec, family, axis, value, base, settings = args
    params = dict(base)
    try:
        if axis == "sigma2":
            spec = Custom(value=float(value))
        else:
            params[axis] = float(value)
        protocol = PROTOCOL_FAMILIES[family](params["omega0"], params["omega_f"], params["tau"])
        return SweepRow.from_report(value, run_protocol(spec, protocol, settings))
    except QslError as exc:
        return SweepRow(value=float(value), error=str(exc))


def sweep(
    spec: SystemSpec,
    family: str,
    axis: str,
    values: Sequence[float],
    *,
    omega0: float = 1.0,
    omega_f: float = 1 / 16,
    tau: float = 10.0,
    settings: SolverSettings | None = None,
    jobs: int = 1,
) -> SweepResult:
    """Run one protocol per value of ``axis`` (``tau``, ``omega_f`` or ``sigma2``).

    Failures are recorded in their row and do not abort the sweep. With
    ``jobs > 1`` the points run in worker processes; row order always follows
    ``values``.
    """
    if family not in PROTOCOL_FAMILIES:
        raise ConfigError(f"unknown protocol family {family!r}; expected {sorted(PROTOCOL_FAMILIES)}")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    values = tuple(float(v) for v in values)
    if not values or not all(math.isfinite(v) for v in values):
        raise ConfigError("sweep values must be a nonempty list of finite numbers")
    settings = settings or SolverSettings()
    base = {"omega0": omega0, "omega_f": omega_f, "tau": tau}
    tasks = [(spec, family, axis, v, base, settings) for v in values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            rows = tuple(pool.map(_sweep_point, tasks))
    else:
        rows = tuple(_sweep_point(t) for t in tasks)
    meta = {"family": family, "axis": axis, "system": spec.to_dict(), **base, **settings.__dict__}
    return SweepResult(axis, values, rows, meta)


def tqd_sweep(sigma2: float, x_values: Sequence[float], tau: float = 1.0) -> SweepResult:
    """Closed-form adiabatic/TQD metrics over final frequency ratios x."""
    rows = []
    for x in x_values:
        x = float(x)
        try:
            F = tqd_fidelity(x, sigma2)
            gamma = tqd_gamma(x, sigma2)
            bures = float(bures_from_log_fidelity(math.log(F))) if F > 0 else math.pi / 2
            rows.append(
                SweepRow(
                    value=x,
                    b_tau=1 / math.sqrt(x),
                    F_tau=F,
                    bures_tau=bures,
                    gamma_tau=gamma,
                    delta_l=tqd_excess_bures(x, sigma2),
                    tau_qsl=tau * bures / gamma if gamma > 0 else 0.0,
                )
            )
        except QslError as exc:
            rows.append(SweepRow(value=x, error=str(exc)))
    return SweepResult("x", tuple(float(x) for x in x_values), tuple(rows), {"sigma2": sigma2, "tau": tau})


@dataclass(frozen=True, eq=False)
class MeasuredSeries:
    """Measured scaling factors b_m with standard deviations at t_m = m tau / M."""

    t: np.ndarray
    b: np.ndarray
    s_b: np.ndarray
    omega_sq: np.ndarray | None = None
    omega0: float = 1.0

    def __post_init__(self):
        for name in ("t", "b", "s_b", "omega_sq"):
            val = getattr(self, name)
            if val is not None:
                arr = np.array(val, dtype=float)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        n = self.t.size
        if self.t.ndim != 1 or n < 2:
            raise ConfigError("a measured series needs at least 2 samples")
        if self.b.shape != (n,) or self.s_b.shape != (n,):
            raise ConfigError("t, b and s_b must have equal lengths")
        if self.omega_sq is not None and self.omega_sq.shape != (n,):
            raise ConfigError("omega_sq must have the same length as t")
        if not (np.all(np.isfinite(self.b)) and np.all(self.b > 0)):
            raise ConfigError("measured b must be finite and > 0")
        if not (np.all(np.isfinite(self.s_b)) and np.all(self.s_b >= 0)):
            raise ConfigError("uncertainties s_b must be finite and >= 0")
        dt = np.diff(self.t)
        if self.t[0] != 0 or np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-6, atol=0):
            raise ConfigError("sample times must start at 0 and be uniform and increasing")
        if abs(self.b[0] - 1) > 3 * self.s_b[0] + 1e-12:
            warnings.warn(
                f"b(0) = {self.b[0]:.6g} is more than 3 standard deviations from 1",
                stacklevel=2,
            )

    @property
    def step(self) -> float:
        return float(self.t[-1] / (self.t.size - 1))

    def with_omega_sq(self, omega_sq) -> MeasuredSeries:
        return replace(self, omega_sq=np.asarray(omega_sq, dtype=float))


def _forward_diff(b, h):
    b = np.asarray(b, dtype=float)
    d = np.empty_like(b)
    d[..., :-1] = (b[..., 1:] - b[..., :-1]) / h
    d[..., -1] = d[..., -2]
    return d


def discretized_derivative(series: MeasuredSeries) -> np.ndarray:
    """Forward differences (b_{m+1} - b_m) M / tau; the last node reuses the backward difference."""
    return _forward_diff(series.b, series.step)


def _require_omega(series):
    if series.omega_sq is None:
        raise ConfigError("measured series has no omega_sq; supply the protocol")
    return series.omega_sq


def metrics_from_data(spec: SystemSpec, series: MeasuredSeries) -> QslReport:
    """QSL report from measured b_m, with discretized bdot and trapezoid quadrature.

    Noise can push the discrete path length below the Bures angle; such a
    report keeps the signed excess and flags ``meta["bound_violated"]``.
    """
    omega_sq = _require_omega(series)
    traj = Trajectory(series.t, series.b, discretized_derivative(series), omega_sq, series.omega0)
    report = qsl_report(traj, spec.sigma2, quadrature="trapezoid", strict=False)
    violated = report.delta_l < -BOUND_SLACK
    if violated:
        warnings.warn(
            f"measured path length is below the Bures angle by {-report.delta_l:.3g}", stacklevel=2
        )
    elif report.delta_l < 0:
        report = replace(report, delta_l=0.0)
    report.meta.update(system=spec.to_dict(), source="measured", bound_violated=bool(violated))
    return report


DATA_TARGETS = ("b_tau", "F_tau", "bures_tau", "gamma_tau", "delta_l", "tau_qsl", "mean_dispersion")


def data_metrics(b, h, omega_sq, sigma2, omega0=1.0) -> dict[str, np.ndarray]:
    """End-of-series metrics for one or many sampled b-series.

    ``b`` has shape (..., M+1); every returned array has the leading shape.
    """
    b = np.asarray(b, dtype=float)
    bdot = _forward_diff(b, h)
    tau = h * (b.shape[-1] - 1)
    log_f = log_fidelity(b[..., -1], bdot[..., -1], sigma2, omega0)
    bures = np.asarray(bures_from_log_fidelity(log_f))
    rate = np.asarray(dispersion_rate(b, bdot, omega_sq, omega0))
    gamma = math.sqrt(sigma2) * cumulative_trapezoid(rate, h)[..., -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_qsl = np.where(np.asarray(gamma) > 0, tau * bures / gamma, 0.0)
    return {
        "b_tau": b[..., -1],
        "F_tau": np.exp(log_f),
        "bures_tau": bures,
        "gamma_tau": gamma,
        "delta_l": gamma - bures,
        "tau_qsl": t_qsl,
        "mean_dispersion": np.asarray(gamma) / tau,
    }


def _target_fn(spec, series, target):
    if callable(target):
        return lambda bm: np.array([target(row) for row in np.atleast_2d(bm)])
    if target not in DATA_TARGETS:
        raise ConfigError(f"unknown target {target!r}; expected one of {DATA_TARGETS}")
    omega_sq = _require_omega(series)
    h = series.step

    def fn(bm):
        return np.asarray(data_metrics(bm, h, omega_sq, spec.sigma2, series.omega0)[target])

    return fn


def propagate_uncertainty(spec: SystemSpec, series: MeasuredSeries, target, chunk: int = 256):
    """Value and standard deviation of ``target`` from uncorrelated errors in b_m.

    s_X = sqrt(sum_m (dX/db_m)^2 s_{b_m}^2), with dX/db_m from central
    differences of step max(1e-6, 1e-6 b_m). ``target`` is one of
    ``DATA_TARGETS`` or a callable mapping the b array to a number.

    Returns
    -------
    (value, sigma) : tuple of float
    """
    fn = _target_fn(spec, series, target)
    b = series.b
    value = float(np.asarray(fn(b[None, :])).ravel()[0])
    idx = np.flatnonzero(series.s_b > 0)
    if idx.size == 0:
        return value, 0.0
    step = np.maximum(1e-6, 1e-6 * b[idx])
    grad = np.empty(idx.size)
    for lo in range(0, idx.size, chunk):
        sl = slice(lo, lo + chunk)
        k = idx[sl]
        rows = np.arange(k.size)
        plus = np.tile(b, (k.size, 1))
        minus = plus.copy()
        plus[rows, k] += step[sl]
        minus[rows, k] -= step[sl]
        if np.any(minus <= 0):
            raise NumericalError("perturbed b is not positive")
        fp = np.asarray(fn(plus), dtype=float).ravel()
        fm = np.asarray(fn(minus), dtype=float).ravel()
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NumericalError(f"metric {target!r} is not finite at perturbed points")
        grad[sl] = (fp - fm) / (2 * step[sl])
    return value, float(np.sqrt(np.sum((grad * series.s_b[idx]) ** 2)))


def propagate_all(spec: SystemSpec, series: MeasuredSeries) -> dict[str, dict[str, float]]:
    """``propagate_uncertainty`` for every entry of ``DATA_TARGETS``."""
    out = {}
    for name in DATA_TARGETS:
        value, s = propagate_uncertainty(spec, series, name)
        out[name] = {"value": value, "s": s}
    return out
