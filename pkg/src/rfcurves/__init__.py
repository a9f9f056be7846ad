"""Exact asymptotic learning curves for random-features generalised linear
models, with a finite-size Monte-Carlo validator."""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .channels import (
    LOGISTIC_CLASSIFICATION,
    RIDGE_REGRESSION,
    SQUARE_CLASSIFICATION,
    LinearGaussian,
    LossModel,
    Sign,
)
from .observables import (
    TheoryPoint,
    generalisation_error,
    optimize_lambda,
    separability_threshold,
    solve_theory_point,
    training_loss,
)
from .saddle import (
    Hats,
    ModelParams,
    Overlaps,
    SolverReport,
    kappa_coefficients,
    solve_fixed_point,
)
from .spectral import (
    SpectralLaw,
    empirical_atoms,
    marchenko_pastur,
    orthogonal_projection,
    stieltjes,
    stieltjes_derivative,
)

__all__ = [
    "KERNEL_BACKEND",
    "LinearGaussian",
    "Sign",
    "LossModel",
    "RIDGE_REGRESSION",
    "SQUARE_CLASSIFICATION",
    "LOGISTIC_CLASSIFICATION",
    "SpectralLaw",
    "marchenko_pastur",
    "orthogonal_projection",
    "empirical_atoms",
    "stieltjes",
    "stieltjes_derivative",
    "ModelParams",
    "Overlaps",
    "Hats",
    "SolverReport",
    "kappa_coefficients",
    "solve_fixed_point",
    "TheoryPoint",
    "solve_theory_point",
    "generalisation_error",
    "training_loss",
    "optimize_lambda",
    "separability_threshold",
]
