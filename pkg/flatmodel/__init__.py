"""
The flat boundary model: profile, rescalings, Grushin operator, Liouville fits.
"""

from .grushin import (
    ConvergenceStudy,
    GrushinConvergenceError,
    GrushinProblem,
    GrushinSolution,
    KernelPolynomial,
    grushin_apply,
    grushin_convergence,
    grushin_solve,
    kernel_polynomial,
    kernel_residual_order,
)
from .liouville import LiouvilleFit, liouville_check, model_coefficients, rescaled_residuals
from .profile import (
    HolderExponents,
    ModelProfile,
    RenormalizedProfile,
    determinant_normalized,
    gamma_of,
    holder_exponents,
    lambda_max,
    normalized_diagonal,
    profile_eval,
    renormalize,
    verify_ma_identity,
)
from .scaling import (
    Cylinder,
    Rescaling,
    discrete_ma_residual,
    lambda_bar,
    lambda_under,
    rescale,
    sample_profile,
)

__all__ = [
    "ConvergenceStudy",
    "Cylinder",
    "GrushinConvergenceError",
    "GrushinProblem",
    "GrushinSolution",
    "HolderExponents",
    "KernelPolynomial",
    "LiouvilleFit",
    "ModelProfile",
    "RenormalizedProfile",
    "Rescaling",
    "determinant_normalized",
    "discrete_ma_residual",
    "gamma_of",
    "grushin_apply",
    "grushin_convergence",
    "grushin_solve",
    "holder_exponents",
    "kernel_polynomial",
    "kernel_residual_order",
    "lambda_bar",
    "lambda_max",
    "lambda_under",
    "liouville_check",
    "model_coefficients",
    "normalized_diagonal",
    "profile_eval",
    "renormalize",
    "rescale",
    "rescaled_residuals",
    "sample_profile",
    "verify_ma_identity",
]
