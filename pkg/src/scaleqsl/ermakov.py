"""
Scaling-factor dynamics from the Ermakov equation

    b'' + omega(t)^2 b = omega0^2 / b^3,    b(0) = 1, b'(0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import ConfigError, NumericalError
from .protocols import FrequencyProtocol

__all__ = [
    "Trajectory",
    "solve_ermakov",
    "analytic_tof",
    "tof_scaling_factor",
    "adiabatic_scaling",
    "ermakov_energy",
    "DEFAULT_NODES",
    "DEFAULT_RTOL",
    "DEFAULT_ATOL",
]

DEFAULT_NODES = 2001
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
COLLAPSE_B = 1e-8


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Scaling factor sampled on a uniform grid.

    Attributes
    ----------
    t : ndarray
        Uniform, strictly increasing times, ``t[0] == 0``.
    b, bdot : ndarray
        Scaling factor and its time derivative at each node.
    omega_sq : ndarray
        Protocol value omega(t)^2 at each node.
    omega0 : float
        Initial trap frequency.
    """

    t: np.ndarray
    b: np.ndarray
    bdot: np.ndarray
    omega_sq: np.ndarray
    omega0: float = 1.0

    def __post_init__(self):
        for name in ("t", "b", "bdot", "omega_sq"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = self.t.size
        if n < 2 or any(getattr(self, k).shape != (n,) for k in ("b", "bdot", "omega_sq")):
            raise ConfigError("trajectory arrays must be 1-D, equal length and >= 2 nodes")
        if not np.all(np.isfinite(self.b)) or np.any(self.b <= 0):
            raise NumericalError("trajectory has non-positive or non-finite b")
        dt = np.diff(self.t)
        if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            raise ConfigError("trajectory grid must be uniform and strictly increasing")

    @property
    def tau(self) -> float:
        return float(self.t[-1])

    def __len__(self):
        return self.t.size


def _uniform_grid(tau, num_nodes):
    if isinstance(num_nodes, bool) or not isinstance(num_nodes, (int, np.integer)) or num_nodes < 2:
        raise ConfigError(f"num_nodes must be an integer >= 2, got {num_nodes!r}")
    t = np.linspace(0.0, tau, int(num_nodes))
    t[-1] = tau
    return t


def solve_ermakov(
    protocol: FrequencyProtocol,
    num_nodes: int = DEFAULT_NODES,
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
) -> Trajectory:
    """Integrate the Ermakov equation for ``protocol`` and sample it uniformly.

    Uses the adaptive Dormand-Prince 5(4) pair with dense output; the
    output grid is independent of the internal steps.

    Raises
    ------
    NumericalError
        If the step size underflows or b collapses to zero.
    """
    for name, tol in (("rel_tol", rel_tol), ("abs_tol", abs_tol)):
        if not (0 < tol <= 1e-2):
            raise ConfigError(f"{name} must be in (0, 1e-2], got {tol!r}")
    tau = protocol.tau
    w0sq = protocol.omega0**2
    grid = _uniform_grid(tau, num_nodes)
    w2 = protocol._w2

    def rhs(t, y):
        b, bd = y
        return [bd, w0sq / b**3 - w2(min(t, tau)) * b]

    def collapse(t, y):
        return y[0] - COLLAPSE_B

    collapse.terminal = True
    collapse.direction = -1

    sol = solve_ivp(
        rhs,
        (0.0, tau),
        [1.0, 0.0],
        method="RK45",
        rtol=rel_tol,
        atol=abs_tol,
        dense_output=True,
        events=collapse,
    )
    if sol.status == 1:
        t_fail = float(sol.t_events[0][0])
        raise NumericalError(f"scaling factor collapsed (b <= {COLLAPSE_B:g}) at t = {t_fail:.6g}")
    if sol.status != 0:
        raise NumericalError(f"Ermakov integration failed at t = {sol.t[-1]:.6g}: {sol.message}")

    y = sol.sol(grid)
    b, bdot = y[0], y[1]
    b[0], bdot[0] = 1.0, 0.0
    if np.any(b <= COLLAPSE_B):
        raise NumericalError("scaling factor collapsed between integrator steps")
    return Trajectory(grid, b, bdot, protocol.omega_sq(grid), protocol.omega0)


def analytic_tof(omega0, t):
    """Free expansion b = sqrt(1 + omega0^2 t^2) and its derivative."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ConfigError("time must be >= 0")
    b = np.sqrt(1 + (omega0 * t) ** 2)
    bdot = omega0**2 * t / b
    if b.ndim == 0:
        return float(b), float(bdot)
    return b, bdot


def tof_scaling_factor(omega_tm, t_tof):
    """Extra expansion factor of a cloud released at frequency ``omega_tm`` after ``t_tof``.

    The cloud radius observed after time of flight is this factor times the
    radius at release.
    """
    return np.sqrt(1 + (np.asarray(omega_tm) * np.asarray(t_tof)) ** 2)


def adiabatic_scaling(protocol: FrequencyProtocol, num_nodes: int = DEFAULT_NODES) -> Trajectory:
    """Adiabatic reference b(t) = sqrt(omega0 / omega(t)), bdot by the chain rule.

    This is also the exact trajectory under counterdiabatic driving.
    """
    grid = _uniform_grid(protocol.tau, num_nodes)
    w = np.asarray(protocol.omega(grid), dtype=float)
    if np.any(w <= 0):
        raise ConfigError("adiabatic scaling needs omega(t) > 0 on the whole grid")
    wdot = np.asarray(protocol.omega_dot(grid), dtype=float)
    b = np.sqrt(protocol.omega0 / w)
    bdot = -0.5 * b * wdot / w
    return Trajectory(grid, b, bdot, w**2, protocol.omega0)


def ermakov_energy(b, bdot, omega_sq, omega0=1.0):
    """omega0^2/b^2 + bdot^2 + omega^2 b^2, conserved while omega is constant."""
    b = np.asarray(b)
    return omega0**2 / b**2 + np.asarray(bdot) ** 2 + np.asarray(omega_sq) * b**2

