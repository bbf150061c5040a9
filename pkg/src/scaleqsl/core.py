"""
Domain types shared by every other module.

All numerics run in natural units: hbar = m = 1 and time measured in units
of 1/omega0, so that omega0 = 1 unless a caller deliberately keeps it
general. ``UnitSystem`` is the only place where physical units appear.

Each physical system is reduced to a single dimensionless constant,
sigma2 = E(0)/(hbar omega0), which is all the metrics need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Any, ClassVar

__all__ = [
    "QslError",
    "ConfigError",
    "NumericalError",
    "SystemSpec",
    "SingleOscillator",
    "IdealBose",
    "PolarizedFermi",
    "TonksGirardeau",
    "CalogeroSutherland",
    "UnitaryFermi",
    "Custom",
    "sigma2_of",
    "system_from_dict",
    "CATALOG",
    "UnitSystem",
]


class QslError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(QslError, ValueError):
    """Invalid user input: parameters, configuration or data files."""


class NumericalError(QslError, ArithmeticError):
    """A computation failed or produced an inconsistent result."""


def _check_count(name, value):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")


def _check_dim(value):
    if isinstance(value, bool) or value not in (1, 2, 3):
        raise ConfigError(f"spatial dimension must be 1, 2 or 3, got {value!r}")


def _check_positive(name, value):
    if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ConfigError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class SystemSpec:
    """Base class of the system catalog.

    Subclasses validate their parameters on construction and cache the
    derived ``sigma2``. Downstream code only ever reads ``sigma2``.
    """

    kind: ClassVar[str] = ""
    sigma2: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._validate()
        s2 = float(self._sigma2())
        if not (math.isfinite(s2) and s2 > 0):
            raise ConfigError(f"{type(self).__name__} yields non-positive sigma2={s2}")
        object.__setattr__(self, "sigma2", s2)

    def _validate(self):
        pass

    def _sigma2(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        for f in fields(self):
            if f.init:
                out[_JSON_NAMES.get(f.name, f.name)] = getattr(self, f.name)
        return out


@dataclass(frozen=True)
class SingleOscillator(SystemSpec):
    kind: ClassVar[str] = "single_oscillator"
    dim: int = 1

    def _validate(self):
        _check_dim(self.dim)

    def _sigma2(self):
        return self.dim / 2


@dataclass(frozen=True)
class IdealBose(SystemSpec):
    kind: ClassVar[str] = "ideal_bose"
    n: int = 1
    dim: int = 1

    def _validate(self):
        _check_count("n", self.n)
        _check_dim(self.dim)

    def _sigma2(self):
        return self.n * self.dim / 2


@dataclass(frozen=True)
class PolarizedFermi(SystemSpec):
    kind: ClassVar[str] = "polarized_fermi"
    n: int = 1
    dim: int = 1

    def _validate(self):
        _check_count("n", self.n)
        _check_dim(self.dim)

    def _sigma2(self):
        return self.n**2 * self.dim / 2


@dataclass(frozen=True)
class TonksGirardeau(SystemSpec):
    """Hard-core bosons in one dimension; same sigma2 as 1D polarized fermions."""

    kind: ClassVar[str] = "tonks_girardeau"
    n: int = 1

    def _validate(self):
        _check_count("n", self.n)

    def _sigma2(self):
        return self.n**2 / 2


@dataclass(frozen=True)
class CalogeroSutherland(SystemSpec):
    """Rational Calogero-Sutherland gas with inverse-square coupling ``coupling``.

    ``coupling = 0`` reduces to the 1D ideal Bose gas and ``coupling = 1``
    to the Tonks-Girardeau gas.
    """

    kind: ClassVar[str] = "calogero_sutherland"
    n: int = 1
    coupling: float = 0.0

    def _validate(self):
        _check_count("n", self.n)
        c = self.coupling
        if not isinstance(c, (int, float)) or not math.isfinite(c) or c < 0:
            raise ConfigError(f"coupling must be finite and >= 0, got {c!r}")

    def _sigma2(self):
        return self.n * (1 + self.coupling * (self.n - 1)) / 2


@dataclass(frozen=True)
class UnitaryFermi(SystemSpec):
    """Unitary Fermi gas; the ground-state energy E(0)/(hbar omega0) is the input."""

    kind: ClassVar[str] = "unitary_fermi"
    e0_over_hw0: float = 1.5

    def _validate(self):
        _check_positive("e0_over_hw0", self.e0_over_hw0)

    def _sigma2(self):
        return self.e0_over_hw0


@dataclass(frozen=True)
class Custom(SystemSpec):
    kind: ClassVar[str] = "custom"
    value: float = 1.0

    def _validate(self):
        _check_positive("sigma2", self.value)

    def _sigma2(self):
        return self.value


# JSON key <-> dataclass field where they differ ("lambda" is a keyword).
_JSON_NAMES = {"coupling": "lambda", "value": "sigma2"}
_FIELD_NAMES = {v: k for k, v in _JSON_NAMES.items()}

_KINDS: dict[str, type[SystemSpec]] = {
    cls.kind: cls
    for cls in (
        SingleOscillator,
        IdealBose,
        PolarizedFermi,
        TonksGirardeau,
        CalogeroSutherland,
        UnitaryFermi,
        Custom,
    )
}


def sigma2_of(spec: SystemSpec) -> float:
    """Return the dimensionless scale constant sigma2 of a system."""
    return spec.sigma2


def system_from_dict(data: dict[str, Any]) -> SystemSpec:
    """Build a system from its JSON form, e.g. ``{"kind": "tonks_girardeau", "n": 5}``.

    Unknown kinds and unknown fields are rejected with ``ConfigError``.
    """
    if not isinstance(data, dict):
        raise ConfigError(f"system must be a JSON object, got {type(data).__name__}")
    data = dict(data)
    kind = data.pop("kind", None)
    try:
        cls = _KINDS[kind]
    except KeyError:
        raise ConfigError(
            f"unknown system kind {kind!r}; expected one of {sorted(_KINDS)}"
        ) from None
    allowed = {f.name for f in fields(cls) if f.init}
    kwargs = {}
    for key, val in data.items():
        name = _FIELD_NAMES.get(key, key)
        if name not in allowed or (key == name and name in _JSON_NAMES):
            raise ConfigError(f"unknown field {key!r} for system kind {kind!r}")
        kwargs[name] = val
    return cls(**kwargs)


# (kind, JSON fields, sigma2 formula, example spec)
CATALOG = [
    ("single_oscillator", "dim", "D/2", SingleOscillator(dim=3)),
    ("ideal_bose", "n, dim", "ND/2", IdealBose(n=10, dim=3)),
    ("polarized_fermi", "n, dim", "N²D/2", PolarizedFermi(n=5, dim=1)),
    ("tonks_girardeau", "n", "N²/2", TonksGirardeau(n=5)),
    ("calogero_sutherland", "n, lambda", "N[1+λ(N−1)]/2", CalogeroSutherland(n=3, coupling=2.0)),
    ("unitary_fermi", "e0_over_hw0", "E(0)/(ħω₀)", UnitaryFermi(e0_over_hw0=100.0)),
    ("custom", "sigma2", "σ² (given)", Custom(value=1.0)),
]


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between physical units and the natural units used internally.

    Parameters
    ----------
    omega0 : float
        Initial trap angular frequency in rad/s.
    hbar, mass : float
        Fixed to 1 in natural units; kept for completeness of the I/O layer.
    """

    omega0: float = 1.0
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        _check_positive("omega0", self.omega0)

    @classmethod
    def from_hz(cls, f0: float) -> UnitSystem:
        """Units for a trap with initial frequency ``f0`` in Hz (omega0 = 2 pi f0)."""
        _check_positive("f0", f0)
        return cls(omega0=2 * math.pi * f0)

    def time_to_natural(self, t):
        return t * self.omega0

    def time_from_natural(self, t):
        return t / self.omega0

    def freq_to_natural(self, omega):
        return omega / self.omega0

    def hz_to_natural(self, f):
        return 2 * math.pi * f / self.omega0
