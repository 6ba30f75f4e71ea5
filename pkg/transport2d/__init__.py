"""
Discrete planar transport: measures, solvers, potentials and certificates.
"""

from .checks import (
    PushforwardReport,
    cyclical_monotonicity_violation,
    dual_feasibility,
    duality_gap,
    marginal_violation,
    pushforward_check,
)
from .discrete import DiscreteMeasure, discretize
from .potentials import PotentialField, brenier_potential, fenchel_young_gap, legendre_transform
from .solvers import (
    CONVENTIONS,
    DEFAULT_LP_CAP,
    HALF_SQ,
    SQ,
    LPCapExceeded,
    SinkhornConvergenceError,
    TransportSolution,
    cost_matrix,
    default_schedule,
    solve_entropic,
    solve_lp,
)

__all__ = [
    "CONVENTIONS",
    "DEFAULT_LP_CAP",
    "DiscreteMeasure",
    "HALF_SQ",
    "LPCapExceeded",
    "PotentialField",
    "PushforwardReport",
    "SQ",
    "SinkhornConvergenceError",
    "TransportSolution",
    "brenier_potential",
    "cost_matrix",
    "cyclical_monotonicity_violation",
    "default_schedule",
    "discretize",
    "dual_feasibility",
    "duality_gap",
    "fenchel_young_gap",
    "legendre_transform",
    "marginal_violation",
    "pushforward_check",
    "solve_entropic",
    "solve_lp",
]
