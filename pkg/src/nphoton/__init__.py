"""Frequency-filtered, time-resolved N-photon correlations.

Weakly coupled two-level sensors turn filtered photon correlations of an
open quantum system into steady-state intensity correlations; an
independent integral-method implementation cross-checks the one- and
two-filter cases.
"""

from .hilbert import (
    CompositeSpace,
    FactorSpec,
    Operator,
    annihilator,
    boson,
    identity,
    make_space,
    number,
    qubit,
)
from .liouville import (
    DensityMatrix,
    Dissipator,
    Liouvillian,
    MasterEquation,
    build_liouvillian,
    expectation,
    steady_state,
)
from .models import JCParams, Transition, driven_cavity, jaynes_cummings, jc_ladder, thermal_cavity
from .oracle import FilterSpec, eigendecompose, filtered_spectrum, resolvent_apply, s2_tau, s2_zero_delay
from .regression import DelayGrid, LiouvilleVector, colorblind_g2, propagate, two_time_sandwich
from .sensors import (
    CorrelationResult,
    SensedSystem,
    SensorSpec,
    attach_sensors,
    converge_epsilon,
    gn_delays,
    gn_zero_delay,
    sensor_spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "CompositeSpace",
    "CorrelationResult",
    "DelayGrid",
    "DensityMatrix",
    "Dissipator",
    "FactorSpec",
    "FilterSpec",
    "JCParams",
    "Liouvillian",
    "LiouvilleVector",
    "MasterEquation",
    "Operator",
    "SensedSystem",
    "SensorSpec",
    "Transition",
    "annihilator",
    "attach_sensors",
    "boson",
    "build_liouvillian",
    "colorblind_g2",
    "converge_epsilon",
    "driven_cavity",
    "eigendecompose",
    "expectation",
    "filtered_spectrum",
    "gn_delays",
    "gn_zero_delay",
    "identity",
    "jaynes_cummings",
    "jc_ladder",
    "make_space",
    "number",
    "propagate",
    "qubit",
    "resolvent_apply",
    "s2_tau",
    "s2_zero_delay",
    "sensor_spectrum",
    "steady_state",
    "thermal_cavity",
    "two_time_sandwich",
    "__version__",
]
