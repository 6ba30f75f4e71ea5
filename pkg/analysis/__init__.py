"""
Section extraction and empirical regularity diagnostics.
"""

from .diagnostics import (
    ExpansionFit,
    ObliquenessResult,
    OscillationReport,
    TangentialHessianReport,
    boundary_expansion_fit,
    normal_ratio,
    obliqueness,
    oscillation_decay,
    section_extents,
    tangential_hessian_bound,
)
from .fits import ExponentFit, fit_loglog
from .sections import (
    BoundaryFits,
    SectionError,
    SectionStats,
    boundary_frame,
    dyadic_heights,
    extract_section,
    fit_boundary_exponents,
    mass_balance_ratio,
    profile_section,
    section_mask,
)
from .suite import SectionPropertyRecord, SectionPropertyReport, section_property_suite

__all__ = [
    "BoundaryFits",
    "ExpansionFit",
    "ExponentFit",
    "ObliquenessResult",
    "OscillationReport",
    "SectionError",
    "SectionPropertyRecord",
    "SectionPropertyReport",
    "SectionStats",
    "TangentialHessianReport",
    "boundary_expansion_fit",
    "boundary_frame",
    "dyadic_heights",
    "extract_section",
    "fit_boundary_exponents",
    "fit_loglog",
    "mass_balance_ratio",
    "normal_ratio",
    "obliqueness",
    "oscillation_decay",
    "profile_section",
    "section_extents",
    "section_mask",
    "section_property_suite",
    "tangential_hessian_bound",
]
