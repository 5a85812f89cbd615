"""Electro-elastic PANN constitutive models, calibration, and simulation."""

from .core import EnergyOutput, MaterialState
from .errors import (
    ConfigError,
    EepannError,
    HomogenizationFailure,
    InvalidDeformation,
    LegendreFailure,
    NewtonFailure,
    ParseError,
    PathFailure,
    StabilityError,
    StepFailure,
)
from .ground_truth import (
    HomogenizedLaminate,
    LaminateParams,
    LaminatePhase,
    MooneyRivlin,
    MooneyRivlinParams,
)
from .invariants import ConvexityMode, Isotropic, TransverselyIsotropic
from .pann import PannModel, PannParams, init_pann_params, load_pann, save_pann

__version__ = "0.1.0"

__all__ = [
    "MaterialState",
    "EnergyOutput",
    "Isotropic",
    "TransverselyIsotropic",
    "ConvexityMode",
    "PannModel",
    "PannParams",
    "init_pann_params",
    "save_pann",
    "load_pann",
    "MooneyRivlin",
    "MooneyRivlinParams",
    "LaminatePhase",
    "LaminateParams",
    "HomogenizedLaminate",
    "EepannError",
    "ConfigError",
    "InvalidDeformation",
    "ParseError",
    "HomogenizationFailure",
    "LegendreFailure",
    "StabilityError",
    "NewtonFailure",
    "StepFailure",
    "PathFailure",
]
