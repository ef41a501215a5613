"""Douglas-Rachford for l1 least squares, with an asymptotic MSE predictor."""

__version__ = "0.1.0"

from .cgmt import SaddlePoint, ScalarSample, SearchOptions, predicted_mse, scalar_objective, solve_saddle
from .dr import dr_run, dr_step, ista_reference, objective_value, optimality_residual
from .model import BernoulliGaussian, CustomPrior, ProblemInstance, SystemConfig, empirical_mse, sample_instance, sample_prior
from .prox import L1, CustomRegularizer, SquaredLossProx, prox_separable, soft_threshold
from .state_evolution import init_ensemble, ks_distance, se_run, se_step

__all__ = [
    "BernoulliGaussian",
    "CustomPrior",
    "CustomRegularizer",
    "L1",
    "ProblemInstance",
    "SaddlePoint",
    "ScalarSample",
    "SearchOptions",
    "SquaredLossProx",
    "SystemConfig",
    "dr_run",
    "dr_step",
    "empirical_mse",
    "init_ensemble",
    "ista_reference",
    "ks_distance",
    "objective_value",
    "optimality_residual",
    "predicted_mse",
    "prox_separable",
    "sample_instance",
    "sample_prior",
    "scalar_objective",
    "se_run",
    "se_step",
    "soft_threshold",
    "solve_saddle",
]
