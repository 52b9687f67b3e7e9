"""Network completion by degree-prior regularized matrix tri-factorization."""

__version__ = "0.1.0"

from .admm_solver import FitResult, SolverConfig, fit, solve_step_two
from .degree_prior import DegreeTarget, PriorConfig, coefficients, evaluate_prior, rearrange
from .graph_data import Network, ObservationMask, SamplingSpec
from .pipeline import HyperGrid, Hyperparameters, PredictionSet, cross_validate, infer

__all__ = [
    "DegreeTarget",
    "FitResult",
    "HyperGrid",
    "Hyperparameters",
    "Network",
    "ObservationMask",
    "PredictionSet",
    "PriorConfig",
    "SamplingSpec",
    "SolverConfig",
    "coefficients",
    "cross_validate",
    "evaluate_prior",
    "fit",
    "infer",
    "rearrange",
    "solve_step_two",
]
