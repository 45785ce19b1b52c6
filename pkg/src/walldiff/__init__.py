"""Thermal diffusivity estimation for building walls.

A finite-difference heat model with its Fo-sensitivity, a learned diagonal
reduced model, Fisher-information window selection and a Gauss estimator.
"""
from .errors import InputError, NumericalError, WallDiffError
from .estimator import EstimationConfig, EstimationTrace, estimate
from .model import (
    BoundaryForcing,
    DimensionlessScaling,
    InitialProfile,
    SensorLayout,
    StateSpaceSystem,
    WallProblem,
    assemble_lom,
    fourier_number,
    integrate_lom,
    nondimensionalize,
    redimensionalize,
    sensitivity_check,
)
from .rom import LearningSet, ReducedSystem, init_from_modal, integrate_rom, j_rom, learn
from .swarm import SwarmConfig

__version__ = "0.1.0"

__all__ = [
    "BoundaryForcing", "DimensionlessScaling", "EstimationConfig", "EstimationTrace",
    "InitialProfile", "InputError", "LearningSet", "NumericalError", "ReducedSystem",
    "SensorLayout", "StateSpaceSystem", "SwarmConfig", "WallDiffError", "WallProblem",
    "assemble_lom", "estimate", "fourier_number", "init_from_modal", "integrate_lom",
    "integrate_rom", "j_rom", "learn", "nondimensionalize", "redimensionalize",
    "sensitivity_check",
]
