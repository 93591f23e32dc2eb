"""Pseudospectral gKdV simulator with a time-oscillating nonlinearity coefficient."""

from .errors import ConfigurationError, ExperimentError, InsufficientDataError
from .forcing import CoefficientSpec, eval_coefficient, mean
from .spectral import (
    DealiasPolicy,
    Field,
    Grid1D,
    airy_propagate,
    dealias,
    make_grid,
    spectral_derivative,
    to_physical,
    to_spectral,
)
from .dynamics import (
    Checkpoint,
    RunStatus,
    SolverConfig,
    Trajectory,
    detect_blowup,
    evolve,
    nonlinear_tendency,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "Checkpoint", "CoefficientSpec", "ConfigurationError", "DealiasPolicy", "ExperimentError",
    "Field", "Grid1D", "InsufficientDataError", "RunStatus", "SolverConfig", "Trajectory",
    "airy_propagate", "dealias", "detect_blowup", "eval_coefficient", "evolve", "make_grid",
    "mean", "nonlinear_tendency", "spectral_derivative", "step", "to_physical", "to_spectral",
]
