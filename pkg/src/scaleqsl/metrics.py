"""
Quantum-speed-limit quantities as functions of the scaling factor.

Everything is expressed through (b, bdot, omega^2, sigma2) with hbar = 1.
Fidelities are computed in log space: sigma2 grows like N^2 for fermionic
systems and direct powers underflow long before the physics gets
interesting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, NumericalError
from .ermakov import Trajectory
from .quadrature import cumulative_simpson, cumulative_trapezoid

__all__ = [
    "fidelity_excess",
    "log_fidelity",
    "fidelity",
    "bures_angle",
    "bures_from_log_fidelity",
    "nonadiabatic_energy",
    "q_star",
    "energy_variance",
    "energy_variance_from_state",
    "quantum_fisher",
    "dispersion_rate",
    "path_length",
    "excess_bures",
    "qsl_time",
    "tqd_fidelity",
    "tqd_alpha",
    "tqd_gamma",
    "tqd_excess_bures",
    "tqd_excess_bures_series",
    "tqd_energy_variance",
    "adiabatic_q_star",
    "generating_function",
    "squeezing_moments",
    "QslReport",
    "qsl_report",
]

BURES_SLACK = 1e-12
Q_STAR_SLACK = 1e-9
RADICAND_SLACK = 1e-12
BOUND_SLACK = 1e-9


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _positive_b(b):
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)) or np.any(b <= 0):
        raise ConfigError("scaling factor b must be finite and > 0")
    return b


def fidelity_excess(b, bdot, omega0=1.0):
    """X - 1, where F = X^(-sigma2); evaluated without cancellation near b = 1."""
    b = _positive_b(b)
    bdot = np.asarray(bdot, dtype=float)
    if not np.all(np.isfinite(bdot)):
        raise ConfigError("bdot must be finite")
    return 0.25 * (b - 1 / b) ** 2 + 0.25 * (bdot / omega0) ** 2


def log_fidelity(b, bdot, sigma2, omega0=1.0):
    """Natural log of the ground-state survival probability."""
    if not np.all(np.asarray(sigma2) > 0):
        raise ConfigError(f"sigma2 must be > 0, got {sigma2!r}")
    return _scalar(-np.asarray(sigma2) * np.log1p(fidelity_excess(b, bdot, omega0)))


def fidelity(b, bdot, sigma2, omega0=1.0):
    """Survival probability F = [(b^2/4)((1 + 1/b^2)^2 + (bdot/(omega0 b))^2)]^(-sigma2).

    Examples
    --------
    >>> round(fidelity(2.0, 1.0, 0.5), 6)
    0.742781
    """
    return _scalar(np.exp(log_fidelity(b, bdot, sigma2, omega0)))


def bures_from_log_fidelity(log_f):
    """Bures angle arccos(sqrt(F)) from log F, accurate for F close to 1."""
    log_f = np.asarray(log_f, dtype=float)
    sqrt_f = np.exp(0.5 * log_f)
    sqrt_1mf = np.sqrt(-np.expm1(log_f))
    return _scalar(np.arctan2(sqrt_1mf, sqrt_f))


def bures_angle(F):
    """arccos(sqrt(F)); values within 1e-12 outside [0, 1] are clamped."""
    F = np.asarray(F, dtype=float)
    if np.any(~np.isfinite(F)) or np.any(F < -BURES_SLACK) or np.any(F > 1 + BURES_SLACK):
        raise ConfigError("fidelity must lie in [0, 1]")
    return _scalar(np.arccos(np.sqrt(np.clip(F, 0.0, 1.0))))


def nonadiabatic_energy(b, bdot, omega_sq, omega0=1.0):
    """omega Q* = (omega0^2/b^2 + omega^2 b^2 + bdot^2) / (2 omega0).

    Finite for any sign of omega^2, unlike Q* itself.
    """
    b = _positive_b(b)
    return (omega0**2 / b**2 + np.asarray(omega_sq) * b**2 + np.asarray(bdot) ** 2) / (2 * omega0)


def q_star(b, bdot, omega, omega0=1.0):
    """Nonadiabatic factor Q*; equals 1 in the instantaneous ground state."""
    omega = np.asarray(omega, dtype=float)
    if np.any(~(omega > 0)):
        raise ConfigError("Q* undefined for untrapped/inverted configurations (omega <= 0)")
    return _scalar(nonadiabatic_energy(b, bdot, omega**2, omega0) / omega)


def energy_variance(q_star, omega, sigma2):
    """var H = omega^2 sigma2 (Q*^2 - 1), with hbar = 1."""
    q = np.asarray(q_star, dtype=float)
    if np.any(q < 1 - Q_STAR_SLACK):
        raise NumericalError("Q* < 1: upstream numerical fault")
    q = np.maximum(q, 1.0)
    return _scalar(np.asarray(omega) ** 2 * sigma2 * (q**2 - 1))


def dispersion_rate(b, bdot, omega_sq, omega0=1.0):
    """sqrt(omega^2 (Q*^2 - 1)), i.e. the energy dispersion per unit sigma.

    With E = omega Q*, the radicand E^2 - omega^2 is factored as
    (E - omega)(E + omega) for omega^2 >= 0, where
    E - omega = ((omega0/b - omega b)^2 + bdot^2) / (2 omega0) is manifestly
    non-negative. Works for untrapped (omega = 0) and inverted (omega^2 < 0)
    configurations.
    """
    b = _positive_b(b)
    bdot = np.asarray(bdot, dtype=float)
    w2 = np.asarray(omega_sq, dtype=float)
    energy = nonadiabatic_energy(b, bdot, w2, omega0)
    w = np.sqrt(np.maximum(w2, 0.0))
    gap = ((omega0 / b - w * b) ** 2 + bdot**2) / (2 * omega0)
    rad = np.where(w2 >= 0, gap * (energy + w), energy**2 - w2)
    if np.any(rad < -RADICAND_SLACK):
        raise NumericalError("negative energy variance")
    return _scalar(np.sqrt(np.maximum(rad, 0.0)))


def energy_variance_from_state(b, bdot, omega_sq, sigma2, omega0=1.0):
    """var H from the scaling factor directly; defined also where Q* is not."""
    return _scalar(sigma2 * np.asarray(dispersion_rate(b, bdot, omega_sq, omega0)) ** 2)


def quantum_fisher(var_h, hbar=1.0):
    """Quantum Fisher information 4 var H / hbar^2 of a pure state."""
    v = np.asarray(var_h, dtype=float)
    if np.any(v < 0):
        raise ConfigError("energy variance must be >= 0")
    return _scalar(4 * v / hbar**2)


def _cumulative(y, t, method):
    h = (t[-1] - t[0]) / (t.size - 1)
    if method == "simpson":
        return cumulative_simpson(y, h)
    if method == "trapezoid":
        return cumulative_trapezoid(y, h)
    raise ConfigError(f"unknown quadrature {method!r}")


def path_length(trajectory: Trajectory, sigma2: float, method: str = "simpson"):
    """Cumulative path length gamma(t_m) = sigma * int_0^t_m sqrt(omega^2 (Q*^2 - 1)).

    Composite Simpson on the uniform grid by default; ``method="trapezoid"``
    for data that is not smooth.
    """
    if not sigma2 > 0:
        raise ConfigError("sigma2 must be > 0")
    rate = dispersion_rate(trajectory.b, trajectory.bdot, trajectory.omega_sq, trajectory.omega0)
    return math.sqrt(sigma2) * _cumulative(np.asarray(rate), trajectory.t, method)


def excess_bures(gamma_tau, bures_tau):
    """delta L = gamma - L, floored at zero within 1e-9."""
    if not (math.isfinite(gamma_tau) and math.isfinite(bures_tau)):
        raise ConfigError("gamma and Bures angle must be finite")
    d = gamma_tau - bures_tau
    if d < -BOUND_SLACK:
        raise NumericalError(
            f"path length {gamma_tau:.12g} below Bures angle {bures_tau:.12g}: bound violated"
        )
    return max(d, 0.0)


def qsl_time(bures_tau, mean_dispersion, hbar=1.0):
    """Mandelstam-Tamm time hbar L(tau) / mean(Delta H)."""
    if bures_tau == 0:
        return 0.0
    if not mean_dispersion > 0:
        raise ConfigError("zero energy dispersion with a nonzero Bures angle")
    return hbar * bures_tau / mean_dispersion


def _check_ratio(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ConfigError("frequency ratio x must be finite and > 0")
    return x


def tqd_fidelity(x, sigma2):
    """Overlap of the initial ground state with the adiabatically continued one."""
    x = _check_ratio(x)
    return _scalar(np.exp(-sigma2 * np.log((1 + x) ** 2 / (4 * x))))


def tqd_alpha(x):
    """Sign of bdot: +1 for an expansion (x < 1), -1 for a compression, 0 at x = 1."""
    return _scalar(np.sign(1 - _check_ratio(x)))


def tqd_gamma(x, sigma2, alpha=None):
    """Path length -alpha (sigma/2) log x of a monotone adiabatic/TQD process."""
    x = _check_ratio(x)
    expected = np.sign(1 - x)
    if alpha is None:
        alpha = expected
    elif np.any((x != 1) & (np.asarray(alpha) != expected)):
        raise ConfigError("alpha must be +1 for expansions (x < 1) and -1 for compressions")
    return _scalar(-np.asarray(alpha) * math.sqrt(sigma2) / 2 * np.log(x))


def tqd_excess_bures(x, sigma2):
    """Excess Bures angle of an adiabatic/TQD process ending at x = omega(tau)/omega0."""
    x = _check_ratio(x)
    gamma = np.abs(math.sqrt(sigma2) / 2 * np.log(x))
    log_f = -sigma2 * np.log((1 + x) ** 2 / (4 * x))
    d = gamma - np.asarray(bures_from_log_fidelity(log_f))
    return _scalar(np.maximum(d, 0.0))


def tqd_excess_bures_series(x, sigma2):
    """Second-order expansion alpha sigma (1-x) + (alpha sigma / 2)(1-x)^2 about x = 1.

    Kept for comparison only. The exact expression in ``tqd_excess_bures``
    vanishes faster than this (about 2e-8 at x = 0.99 for sigma = 1, while
    this series gives about 0.01), so the series is not a valid
    approximation of it.
    """
    x = _check_ratio(x)
    a = np.sign(1 - x)
    s = math.sqrt(sigma2)
    return _scalar(a * s * (1 - x) + a * s / 2 * (1 - x) ** 2)


def tqd_energy_variance(b, bdot, sigma2, hbar=1.0):
    """Counterdiabatic energy variance (bdot/b)^2 hbar^2 sigma2."""
    b = _positive_b(b)
    return _scalar((np.asarray(bdot) / b) ** 2 * hbar**2 * sigma2)


def adiabatic_q_star(omega, omega_dot):
    """Q* along the adiabatic trajectory: 1 + omega_dot^2 / (8 omega^4)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(~(omega > 0)):
        raise ConfigError("omega must be > 0")
    return _scalar(1 + np.asarray(omega_dot) ** 2 / (8 * omega**4))


def generating_function(b, sigma2):
    """Dilatation generating function A_C(b) = [(b/2)(1 + 1/b^2)]^(-sigma2)."""
    b = _positive_b(b)
    return _scalar(np.exp(-sigma2 * np.log(0.5 * (b + 1 / b))))


def squeezing_moments(sigma2, step=1e-4, hbar=1.0):
    """First two moments of the squeezing operator by finite differences of A_C.

    Uses u = log b, where (-i hbar b d/db)^k = (-i hbar d/du)^k, and central
    differences in u. Returns ``(<C>, <C^2>)`` as real numbers: the first
    moment is -i hbar A'(0) (purely imaginary, returned as its magnitude with
    sign), the second is -hbar^2 A''(0).
    """
    def a(u):
        return generating_function(math.exp(u), sigma2)

    first = hbar * (a(step) - a(-step)) / (2 * step)
    second = -(hbar**2) * (a(step) - 2 * a(0.0) + a(-step)) / step**2
    return first, second


@dataclass(frozen=True, eq=False)
class QslReport:
    """Per-node QSL metrics plus end-of-protocol summary.

    ``q_star`` is NaN where omega^2 <= 0. ``quadrature_error`` is the
    difference between the Simpson and trapezoid estimates of gamma(tau).
    """

    t: np.ndarray
    b: np.ndarray
    bdot: np.ndarray
    omega_sq: np.ndarray
    fidelity: np.ndarray
    log_fidelity: np.ndarray
    bures: np.ndarray
    q_star: np.ndarray
    var_h: np.ndarray
    gamma_cum: np.ndarray
    sigma2: float
    delta_l: float
    tau_qsl: float
    mean_dispersion: float
    quadrature: str = "simpson"
    quadrature_error: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def tau(self) -> float:
        return float(self.t[-1])

    @property
    def gamma_tau(self) -> float:
        return float(self.gamma_cum[-1])

    @property
    def bures_tau(self) -> float:
        return float(self.bures[-1])

    @property
    def b_tau(self) -> float:
        return float(self.b[-1])

    @property
    def fidelity_tau(self) -> float:
        return float(self.fidelity[-1])

    def summary(self) -> dict:
        return {
            "sigma2": self.sigma2,
            "tau": self.tau,
            "b_tau": self.b_tau,
            "F_tau": self.fidelity_tau,
            "bures_tau": self.bures_tau,
            "gamma_tau": self.gamma_tau,
            "delta_l": self.delta_l,
            "tau_qsl": self.tau_qsl,
            "mean_dispersion": self.mean_dispersion,
            "quadrature": self.quadrature,
            "quadrature_error": self.quadrature_error,
        }


def qsl_report(
    trajectory: Trajectory, sigma2: float, quadrature: str = "simpson", strict: bool = True
) -> QslReport:
    """Evaluate every metric on a trajectory.

    With ``strict=False`` a path length below the Bures angle is kept as a
    negative ``delta_l`` instead of raising; used for noisy measured data.
    """
    tr = trajectory
    log_f = np.asarray(log_fidelity(tr.b, tr.bdot, sigma2, tr.omega0), dtype=float)
    bures = np.asarray(bures_from_log_fidelity(log_f), dtype=float)
    rate = np.asarray(dispersion_rate(tr.b, tr.bdot, tr.omega_sq, tr.omega0), dtype=float)
    var_h = sigma2 * rate**2
    trapped = tr.omega_sq > 0
    qs = np.full(tr.t.size, np.nan)
    w = np.sqrt(tr.omega_sq[trapped])
    qs[trapped] = nonadiabatic_energy(tr.b[trapped], tr.bdot[trapped], tr.omega_sq[trapped], tr.omega0) / w

    gamma = path_length(tr, sigma2, quadrature)
    other = "trapezoid" if quadrature == "simpson" else "simpson"
    gamma_other = path_length(tr, sigma2, other)
    tau = tr.tau
    g_tau = float(gamma[-1])
    l_tau = float(bures[-1])
    delta = excess_bures(g_tau, l_tau) if strict else g_tau - l_tau
    mean_disp = g_tau / tau
    if l_tau > 0 and mean_disp == 0:
        raise NumericalError("nonzero Bures angle with vanishing energy dispersion")
    t_qsl = tau * l_tau / g_tau if g_tau > 0 else 0.0
    return QslReport(
        t=tr.t,
        b=tr.b,
        bdot=tr.bdot,
        omega_sq=tr.omega_sq,
        fidelity=np.exp(log_f),
        log_fidelity=log_f,
        bures=bures,
        q_star=qs,
        var_h=var_h,
        gamma_cum=gamma,
        sigma2=float(sigma2),
        delta_l=delta,
        tau_qsl=t_qsl,
        mean_dispersion=mean_disp,
        quadrature=quadrature,
        quadrature_error=abs(g_tau - float(gamma_other[-1])),
    )
