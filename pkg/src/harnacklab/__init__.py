"""Numerical laboratory for differential Harnack estimates of nonlinear heat equations with
potential along the geometric flow dg/dt = -2 S_ij."""

from .errors import (ConfigError, HarnackLabError, HypothesisViolation, NumericalFailure,
                     SingularTimeError)
from .evolution import GammaSchedule, HeatProblem, Trajectory, integrate
from .geometry import Geometry, ScalarField, make_geometry
from .harnack import THEOREM_A, THEOREM_B, THEOREM_C, HarnackCoefficients

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "GammaSchedule", "Geometry", "HarnackCoefficients", "HarnackLabError",
    "HeatProblem", "HypothesisViolation", "NumericalFailure", "ScalarField", "SingularTimeError",
    "THEOREM_A", "THEOREM_B", "THEOREM_C", "Trajectory", "integrate", "make_geometry",
]
