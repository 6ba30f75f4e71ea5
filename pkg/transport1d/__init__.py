"""
Exact one-dimensional transport between power densities on [0, 1].
"""

from .solver import (
    Density1D,
    MonotoneMap,
    dyadic_points,
    fit_exponent,
    knot_set,
    mass_balance_error,
    solve_1d,
)

__all__ = [
    "Density1D",
    "MonotoneMap",
    "dyadic_points",
    "fit_exponent",
    "knot_set",
    "mass_balance_error",
    "solve_1d",
]
