"""
Trap-frequency schedules omega(t)^2 on [0, tau].

Protocols are immutable and vectorised: ``protocol.omega_sq(t)`` accepts
scalars or arrays. Closed forms are used wherever they exist; only the
tabulated protocol interpolates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .core import ConfigError

__all__ = [
    "FrequencyProtocol",
    "Constant",
    "LinearRamp",
    "StaPolynomial",
    "TqdReference",
    "TimeOfFlight",
    "Tabulated",
    "constant_protocol",
    "linear_ramp",
    "sta_protocol",
    "tqd_reference",
    "tof_protocol",
    "tabulated_protocol",
    "smoothstep",
    "sta_scaling_factor",
    "sta_frequency",
    "tqd_reference_frequency",
    "protocol_from_dict",
]

# Tolerance on the time domain, so grids built with linspace(0, tau) pass.
_T_SLACK = 1e-12


def _finite(name, value):
    if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
        raise ConfigError(f"{name} must be a finite number, got {value!r}")
    return float(value)


def _check_params(omega0, omega_f, tau):
    omega0 = _finite("omega0", omega0)
    omega_f = _finite("omega_f", omega_f)
    tau = _finite("tau", tau)
    if omega0 <= 0:
        raise ConfigError(f"omega0 must be > 0, got {omega0}")
    if omega_f < 0:
        raise ConfigError(f"omega_f must be >= 0, got {omega_f}")
    if tau <= 0:
        raise ConfigError(f"tau must be > 0, got {tau}")
    return omega0, omega_f, tau


def _check_time(t, tau):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < -_T_SLACK * max(tau, 1.0)) or np.any(
        t > tau * (1 + _T_SLACK) + _T_SLACK
    ):
        raise ConfigError(f"time outside the protocol window [0, {tau}]")
    return np.clip(t, 0.0, tau)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def smoothstep(s):
    """Quintic 10 s^3 - 15 s^4 + 6 s^5 and its first two derivatives in s.

    Rises from 0 to 1 on [0, 1] with vanishing first and second derivatives
    at both ends.
    """
    s = np.asarray(s, dtype=float)
    p = s**3 * (10 - 15 * s + 6 * s**2)
    dp = 30 * s**2 * (1 - s) ** 2
    d2p = 60 * s * (1 - s) * (1 - 2 * s)
    return p, dp, d2p


def sta_scaling_factor(t, tau, b_tau):
    """Prescribed STA scaling factor and its time derivatives.

    Returns ``(b, bdot, bddot)`` for the quintic interpolation from b(0) = 1
    to b(tau) = b_tau with vanishing first and second derivatives at both
    ends.
    """
    tau = _finite("tau", tau)
    if tau <= 0:
        raise ConfigError(f"tau must be > 0, got {tau}")
    b_tau = _finite("b_tau", b_tau)
    if b_tau <= 0:
        raise ConfigError(f"b_tau must be > 0, got {b_tau}")
    t = _check_time(t, tau)
    p, dp, d2p = smoothstep(t / tau)
    db = b_tau - 1.0
    return _out(1.0 + db * p), _out(db * dp / tau), _out(db * d2p / tau**2)


def sta_frequency(t, tau, omega0, omega_f):
    """Reverse-engineered omega(t)^2 = omega0^2 / b^4 - bddot / b.

    May be negative (transient trap inversion) for strong, fast expansions.
    """
    omega0, omega_f, tau = _check_params(omega0, omega_f, tau)
    if omega_f <= 0:
        raise ConfigError("STA target frequency must be > 0")
    b, _, bdd = sta_scaling_factor(t, tau, math.sqrt(omega0 / omega_f))
    b = np.asarray(b)
    return _out(omega0**2 / b**4 - np.asarray(bdd) / b)


def tqd_reference_frequency(t, tau, omega0, omega_f):
    """Smooth reference modulation omega(t) (not squared) between omega0 and omega_f."""
    omega0, omega_f, tau = _check_params(omega0, omega_f, tau)
    t = _check_time(t, tau)
    p, _, _ = smoothstep(t / tau)
    return _out(omega0 + (omega_f - omega0) * p)


@dataclass(frozen=True)
class FrequencyProtocol:
    """Base class; subclasses implement ``omega_sq``.

    ``omega`` and ``omega_dot`` are only meaningful where omega^2 > 0 and
    are what the adiabatic reference trajectory needs.
    """

    omega0: float
    omega_f: float
    tau: float
    kind = "protocol"

    def __post_init__(self):
        _check_params(self.omega0, self.omega_f, self.tau)

    @property
    def final_ratio(self) -> float:
        """x = omega(tau) / omega0."""
        return self.omega_f / self.omega0

    def omega_sq(self, t):
        raise NotImplementedError

    def _w2(self, t: float) -> float:
        # unchecked scalar evaluation for the integrator
        return float(self.omega_sq(t))

    def omega(self, t):
        w2 = np.asarray(self.omega_sq(t))
        if np.any(w2 < 0):
            raise ConfigError(f"{self.kind} protocol has omega^2 < 0; omega is undefined")
        return _out(np.sqrt(w2))

    def omega_dot(self, t):
        raise NotImplementedError(f"{self.kind} protocol has no closed-form omega_dot")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "omega0": self.omega0, "omega_f": self.omega_f, "tau": self.tau}


@dataclass(frozen=True)
class Constant(FrequencyProtocol):
    kind = "constant"

    def __post_init__(self):
        super().__post_init__()
        if self.omega_f != self.omega0:
            raise ConfigError("constant protocol requires omega_f == omega0")

    def omega_sq(self, t):
        t = _check_time(t, self.tau)
        return _out(np.full_like(t, self.omega0**2))

    def _w2(self, t):
        return self.omega0**2

    def omega_dot(self, t):
        t = _check_time(t, self.tau)
        return _out(np.zeros_like(t))


@dataclass(frozen=True)
class LinearRamp(FrequencyProtocol):
    """omega(t) = omega0 + (omega_f - omega0) t / tau."""

    kind = "linear"

    def omega(self, t):
        t = _check_time(t, self.tau)
        return _out(self.omega0 + (self.omega_f - self.omega0) * t / self.tau)

    def omega_sq(self, t):
        return _out(np.asarray(self.omega(t)) ** 2)

    def _w2(self, t):
        return (self.omega0 + (self.omega_f - self.omega0) * t / self.tau) ** 2

    def omega_dot(self, t):
        t = _check_time(t, self.tau)
        return _out(np.full_like(t, (self.omega_f - self.omega0) / self.tau))


@dataclass(frozen=True)
class StaPolynomial(FrequencyProtocol):
    """Shortcut to adiabaticity built from the quintic scaling factor."""

    kind = "sta"

    def __post_init__(self):
        super().__post_init__()
        if self.omega_f <= 0:
            raise ConfigError("STA target frequency must be > 0")

    @property
    def b_final(self) -> float:
        return math.sqrt(self.omega0 / self.omega_f)

    def scaling_factor(self, t):
        return sta_scaling_factor(t, self.tau, self.b_final)

    def omega_sq(self, t):
        return sta_frequency(t, self.tau, self.omega0, self.omega_f)

    def _w2(self, t):
        s = t / self.tau
        db = self.b_final - 1.0
        b = 1.0 + db * s**3 * (10 - 15 * s + 6 * s * s)
        bdd = db * 60 * s * (1 - s) * (1 - 2 * s) / self.tau**2
        return self.omega0**2 / b**4 - bdd / b


@dataclass(frozen=True)
class TqdReference(FrequencyProtocol):
    """Smooth quintic omega(t) used as the adiabatic / counterdiabatic reference."""

    kind = "tqd"

    def omega(self, t):
        return tqd_reference_frequency(t, self.tau, self.omega0, self.omega_f)

    def omega_sq(self, t):
        return _out(np.asarray(self.omega(t)) ** 2)

    def _w2(self, t):
        s = t / self.tau
        return (self.omega0 + (self.omega_f - self.omega0) * s**3 * (10 - 15 * s + 6 * s * s)) ** 2

    def omega_dot(self, t):
        t = _check_time(t, self.tau)
        _, dp, _ = smoothstep(t / self.tau)
        return _out((self.omega_f - self.omega0) * dp / self.tau)


@dataclass(frozen=True)
class TimeOfFlight(FrequencyProtocol):
    """Sudden release: omega = 0 for t > 0. ``omega0`` is the trap before release."""

    kind = "tof"
    omega_f: float = 0.0
    tau: float = 10.0

    def __post_init__(self):
        super().__post_init__()
        if self.omega_f != 0:
            raise ConfigError("time-of-flight protocol has omega_f = 0")

    def omega_sq(self, t):
        t = _check_time(t, self.tau)
        return _out(np.zeros_like(t))

    def _w2(self, t):
        return 0.0

    def omega_dot(self, t):
        t = _check_time(t, self.tau)
        return _out(np.zeros_like(t))


@dataclass(frozen=True)
class Tabulated(FrequencyProtocol):
    """Cubic-spline interpolation of sampled omega(t)^2, exact at the samples."""

    kind = "tabulated"
    times: tuple = ()
    values: tuple = ()
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        super().__post_init__()
        t = np.asarray(self.times, dtype=float)
        w2 = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != w2.shape or t.size < 2:
            raise ConfigError("tabulated protocol needs >= 2 (t, omega_sq) samples")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(w2))):
            raise ConfigError("tabulated protocol samples must be finite")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("tabulated protocol times must be strictly increasing")
        if t[0] != 0:
            raise ConfigError("tabulated protocol must start at t = 0")
        # not-a-knot: 4th-order accurate, reduces to a line for 2 samples
        object.__setattr__(self, "_spline", CubicSpline(t, w2, bc_type="not-a-knot"))

    def omega_sq(self, t):
        t = _check_time(t, self.tau)
        return _out(self._spline(t))

    def _w2(self, t):
        return float(self._spline(t))

    def omega_dot(self, t):
        t = _check_time(t, self.tau)
        w = np.sqrt(self._spline(t))
        return _out(self._spline(t, 1) / (2 * w))

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["samples"] = [[float(a), float(b)] for a, b in zip(self.times, self.values)]
        return d


def constant_protocol(omega0=1.0, tau=10.0) -> Constant:
    return Constant(omega0, omega0, tau)


def linear_ramp(omega0, omega_f, tau) -> LinearRamp:
    """Linear ramp of the trap frequency from omega0 to omega_f over tau."""
    return LinearRamp(omega0, omega_f, tau)


def sta_protocol(omega0, omega_f, tau) -> StaPolynomial:
    return StaPolynomial(omega0, omega_f, tau)


def tqd_reference(omega0, omega_f, tau) -> TqdReference:
    return TqdReference(omega0, omega_f, tau)


def tof_protocol(omega0=1.0, tau=10.0) -> TimeOfFlight:
    """Free expansion after releasing a trap of frequency ``omega0``."""
    return TimeOfFlight(omega0, 0.0, tau)


def tabulated_protocol(samples, omega0=None) -> Tabulated:
    """Protocol from ``(t, omega_sq)`` pairs sorted by time and starting at t = 0.

    ``omega0`` defaults to sqrt(omega_sq(0)); it must be given explicitly if
    the first sample is not positive.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ConfigError("samples must be a sequence of >= 2 (t, omega_sq) pairs")
    t, w2 = arr[:, 0], arr[:, 1]
    if omega0 is None:
        if not w2[0] > 0:
            raise ConfigError("omega_sq(0) must be > 0 to infer omega0")
        omega0 = math.sqrt(w2[0])
    omega_f = math.sqrt(w2[-1]) if w2[-1] > 0 else 0.0
    return Tabulated(float(omega0), omega_f, float(t[-1]), tuple(t), tuple(w2))


_BUILDERS = {
    "constant": lambda d: constant_protocol(d.get("omega0", 1.0), d["tau"]),
    "linear": lambda d: linear_ramp(d.get("omega0", 1.0), d["omega_f"], d["tau"]),
    "sta": lambda d: sta_protocol(d.get("omega0", 1.0), d["omega_f"], d["tau"]),
    "tqd": lambda d: tqd_reference(d.get("omega0", 1.0), d["omega_f"], d["tau"]),
    "tof": lambda d: tof_protocol(d.get("omega0", 1.0), d["tau"]),
    "tabulated": lambda d: tabulated_protocol(d["samples"], d.get("omega0")),
}
_ALLOWED = {
    "constant": {"omega0", "omega_f", "tau"},
    "linear": {"omega0", "omega_f", "tau"},
    "sta": {"omega0", "omega_f", "tau"},
    "tqd": {"omega0", "omega_f", "tau"},
    "tof": {"omega0", "omega_f", "tau"},
    "tabulated": {"samples", "omega0", "omega_f", "tau"},
}


def protocol_from_dict(data: dict) -> FrequencyProtocol:
    """Inverse of ``FrequencyProtocol.to_dict``."""
    if not isinstance(data, dict):
        raise ConfigError("protocol must be a JSON object")
    kind = data.get("kind")
    if kind not in _BUILDERS:
        raise ConfigError(f"unknown protocol kind {kind!r}; expected one of {sorted(_BUILDERS)}")
    extra = set(data) - _ALLOWED[kind] - {"kind"}
    if extra:
        raise ConfigError(f"unknown field(s) {sorted(extra)} for protocol kind {kind!r}")
    try:
        return _BUILDERS[kind](data)
    except KeyError as exc:
        raise ConfigError(f"protocol kind {kind!r} requires field {exc.args[0]!r}") from None
