"""Simulation and verification tools for quantum hydrodynamics and its
nonlinear Schroedinger twin."""
from .errors import (
    AssumptionError,
    ConfigError,
    InstabilityError,
    NonFiniteError,
    QhdError,
    StencilError,
    VacuumError,
)
from .numerics import BoundaryKind, Grid1D, TensorGrid, derivative, integrate
from .physics import (
    FluidState,
    MadelungGauge,
    PressureLaw,
    WaveState,
    bohm,
    law_assumption_check,
    law_eval,
    madelung_forward,
    madelung_inverse,
)

__version__ = "0.1.0"
