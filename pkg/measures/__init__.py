"""
Power-of-distance densities, cell quadrature and doubling estimates.
"""

from .density import COEFF_KINDS, Coefficient, HolderData, PowerDensity, eval_density
from .doubling import (
    CHAIN_POWER,
    ChainCheck,
    DoublingEstimate,
    corollary_chain_check,
    doubling_constant,
    doubling_ratio,
    sample_ellipsoid,
)
from .quadrature import QuadratureResult, cell_moments, integrate

__all__ = [
    "CHAIN_POWER",
    "COEFF_KINDS",
    "ChainCheck",
    "Coefficient",
    "DoublingEstimate",
    "HolderData",
    "PowerDensity",
    "QuadratureResult",
    "cell_moments",
    "corollary_chain_check",
    "doubling_constant",
    "doubling_ratio",
    "eval_density",
    "integrate",
    "sample_ellipsoid",
]
