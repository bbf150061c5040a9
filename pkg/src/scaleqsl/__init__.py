"""
Quantum speed limits for scale-invariant driving of trapped quantum gases.

A trap-frequency protocol omega(t)^2 drives the scaling factor b(t) through
the Ermakov equation. From b and its derivative the package evaluates the
fidelity to the initial state, the Bures angle, the energy dispersion, the
path length gamma and the resulting speed-limit time. Many-body systems
enter only through the scalar sigma2.
"""

__version__ = "0.1.0"

from .core import (
    CATALOG,
    CalogeroSutherland,
    ConfigError,
    Custom,
    IdealBose,
    NumericalError,
    PolarizedFermi,
    QslError,
    SingleOscillator,
    SystemSpec,
    TonksGirardeau,
    UnitaryFermi,
    UnitSystem,
    sigma2_of,
    system_from_dict,
)
from .ermakov import Trajectory, adiabatic_scaling, analytic_tof, solve_ermakov, tof_scaling_factor
from .experiment import (
    MeasuredSeries,
    SolverSettings,
    metrics_from_data,
    propagate_all,
    propagate_uncertainty,
    run_protocol,
    sweep,
    tqd_sweep,
)
from .metrics import (
    QslReport,
    bures_angle,
    dispersion_rate,
    energy_variance,
    excess_bures,
    fidelity,
    path_length,
    q_star,
    qsl_report,
    qsl_time,
    squeezing_moments,
    tqd_alpha,
    tqd_excess_bures,
    tqd_fidelity,
    tqd_gamma,
)
from .protocols import (
    FrequencyProtocol,
    constant_protocol,
    linear_ramp,
    protocol_from_dict,
    sta_protocol,
    tabulated_protocol,
    tof_protocol,
    tqd_reference,
)
