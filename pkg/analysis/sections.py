"""
analysis/sections.py

Sections S_h(u, x0, p) = {z : u(z) < u(x0) + p.(z - x0) + h} of sampled
potentials, their extents in the boundary frame at x0, the mass-balance ratio
and the boundary exponent fits.

The section polygon is the hull of the nodes satisfying the inequality, clipped
to the body. Extents are measured on the interpolant by bisection along rays
from x0: d_h along the inner normal, r_h and l_h along the two tangent
directions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from analysis.fits import ExponentFit, fit_loglog
from flatmodel import ModelProfile
from geometry import ConvexBody, barycenter, boundary_distance, intersect
from transport2d import PotentialField

logger = logging.getLogger("analysis.sections")

CENTERING_GAIN = 0.5
CENTERING_MAX_ITER = 200
CENTERING_TOL = 0.02
MIN_FIT_STATS = 6
RAY_SAMPLES = 64


class SectionError(RuntimeError):
    """Centered-section slope iteration did not settle."""

    def __init__(self, message: str, slope: np.ndarray, offset: float, iterations: int):
        super().__init__(message)
        self.slope = slope
        self.offset = offset
        self.iterations = iterations


@dataclass
class SectionStats:
    h: float
    d_h: float
    l_h: float
    r_h: float
    w_h: float
    centered: bool = False
    truncated: bool = False
    resolved: bool = True
    polygon: Optional[ConvexBody] = None
    slope: np.ndarray = field(default_factory=lambda: np.zeros(2))
    base_point: np.ndarray = field(default_factory=lambda: np.zeros(2))
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))

    @property
    def usable(self) -> bool:
        return self.resolved and not self.truncated

    def to_dict(self) -> dict[str, Any]:
        return {
            "h": self.h,
            "d_h": self.d_h,
            "l_h": self.l_h,
            "r_h": self.r_h,
            "w_h": self.w_h,
            "centered": self.centered,
            "truncated": self.truncated,
            "resolved": self.resolved,
            "area": self.polygon.area if self.polygon is not None else 0.0,
        }


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def boundary_frame(normal: Optional[Sequence[float]]) -> tuple[np.ndarray, np.ndarray]:
    nu = np.array([0.0, 1.0]) if normal is None else np.asarray(normal, dtype=float)
    norm = float(np.linalg.norm(nu))
    if norm == 0:
        raise ValueError("normal must be nonzero")
    nu = nu / norm
    # tangent chosen so that (tau, nu) is positively oriented
    return nu, np.array([nu[1], -nu[0]])


def _domain(u: PotentialField) -> tuple[ConvexBody, ConvexBody]:
    """(window, window clipped to the body) for a sampled field."""
    window = u.window if u.window is not None else ConvexBody.from_points(u.points)
    if u.body is None:
        return window, window
    dom = intersect(window, u.body)
    if dom is None:
        raise ValueError("sampling window does not meet the body")
    return window, dom


def _ray_exit(body: ConvexBody, x: np.ndarray, e: np.ndarray) -> float:
    """Largest s >= 0 with x + s e in the body (x in the body)."""
    ne = body.normals @ e
    gap = body.offsets - body.normals @ x
    ahead = ne > 1e-15
    if not ahead.any():
        return float("inf")
    return max(0.0, float((gap[ahead] / ne[ahead]).min()))


def section_mask(u: PotentialField, x0: np.ndarray, p: np.ndarray, h: float) -> np.ndarray:
    """Nodes strictly below the raised plane through (x0, u(x0)) with slope p."""
    x0 = np.asarray(x0, dtype=float)
    u0 = float(u.evaluate(x0)[0])
    return u.values < u0 + (u.points - x0) @ np.asarray(p, dtype=float) + h


def _section_polygon(u: PotentialField, mask: np.ndarray) -> Optional[ConvexBody]:
    if mask.sum() < 3:
        return None
    try:
        hull = ConvexBody.from_points(u.points[mask])
    except ValueError:
        return None
    return intersect(hull, u.body) if u.body is not None else hull


def _extent(u: PotentialField, x0: np.ndarray, p: np.ndarray, h: float, u0: float,
            e: np.ndarray, dom: ConvexBody) -> tuple[float, bool]:
    """(extent along e, whether the ray left the domain while still inside the section)."""
    s_max = _ray_exit(dom, x0, e)
    if not np.isfinite(s_max) or s_max <= 0:
        return 0.0, False

    def phi(s: np.ndarray) -> np.ndarray:
        q = x0[None, :] + np.atleast_1d(s)[:, None] * e[None, :]
        return u.evaluate(q) - u0 - (q - x0) @ p - h

    s = np.linspace(0.0, s_max, RAY_SAMPLES + 1)
    vals = phi(s)
    above = np.flatnonzero(vals >= 0)
    if len(above) == 0:
        return s_max, True
    k = int(above[0])
    if k == 0:
        return 0.0, False
    root = brentq(lambda t: float(phi(np.array([t]))[0]), s[k - 1], s[k], xtol=1e-14 * max(s_max, 1.0))
    return float(root), False


def _touches_window(u: PotentialField, mask: np.ndarray, window: ConvexBody) -> bool:
    """Some section node sits on the window edge away from the body's boundary."""
    pts = u.points[mask]
    near_window = boundary_distance(window, pts) <= 0.5 * u.spacing
    if not near_window.any():
        return False
    if u.body is None:
        return True
    near_body = boundary_distance(u.body, pts[near_window]) <= 0.5 * u.spacing
    return bool((~near_body).any())


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def _classical(u: PotentialField, x0: np.ndarray, p: np.ndarray, h: float,
               nu: np.ndarray, tau: np.ndarray, centered: bool) -> SectionStats:
    window, dom = _domain(u)
    u0 = float(u.evaluate(x0)[0])
    mask = section_mask(u, x0, p, h)
    polygon = _section_polygon(u, mask)
    d_h, cut_d = _extent(u, x0, p, h, u0, nu, dom)
    r_h, cut_r = _extent(u, x0, p, h, u0, tau, dom)
    l_h, cut_l = _extent(u, x0, p, h, u0, -tau, dom)

    truncated = _touches_window(u, mask, window) if mask.any() else False
    for cut, e, s in ((cut_d, nu, d_h), (cut_r, tau, r_h), (cut_l, -tau, l_h)):
        if cut:
            exit_point = x0 + s * e
            on_body = u.body is not None and boundary_distance(u.body, exit_point) <= 1e-9 * u.body.diameter
            # an exit through the body's own boundary is part of the section
            truncated |= not on_body and boundary_distance(window, exit_point) <= 1e-9 * window.diameter
    resolved = polygon is not None and min(d_h, l_h + r_h) >= u.spacing
    return SectionStats(h=float(h), d_h=d_h, l_h=l_h, r_h=r_h, w_h=l_h + r_h, centered=centered,
                        truncated=bool(truncated), resolved=bool(resolved), polygon=polygon,
                        slope=np.asarray(p, dtype=float), base_point=x0, normal=nu)


def extract_section(
    u: PotentialField,
    x0: Sequence[float],
    p: Optional[Sequence[float]] = None,
    h: float = 0.1,
    centered: bool = False,
    normal: Optional[Sequence[float]] = None,
    tol: float = CENTERING_TOL,
    max_iter: int = CENTERING_MAX_ITER,
) -> SectionStats:
    """
    Section of u at x0 with height h.

    The slope defaults to the interpolated gradient at x0. ``normal`` is the
    inner normal of the boundary frame (default e_n). In centered mode the slope
    is iterated, p <- p + 0.5 (x0 - barycenter), until the barycenter lies
    within ``tol * diam`` of x0; SectionError when it does not.
    """
    if not h > 0:
        raise ValueError(f"section height must be positive, got {h}")
    x0 = np.asarray(x0, dtype=float)
    nu, tau = boundary_frame(normal)
    slope = u.gradient(x0)[0] if p is None else np.asarray(p, dtype=float)
    if not centered:
        return _classical(u, x0, slope, h, nu, tau, centered=False)

    offset = float("inf")
    for it in range(max_iter):
        mask = section_mask(u, x0, slope, h)
        polygon = _section_polygon(u, mask)
        if polygon is None:
            raise SectionError(f"centered section at {x0.tolist()} with h={h} holds too few nodes",
                               slope, offset, it)
        shift = x0 - barycenter(polygon)
        offset = float(np.linalg.norm(shift))
        if offset <= tol * polygon.diameter:
            stats = _classical(u, x0, slope, h, nu, tau, centered=True)
            logger.debug(f"extract_section: centered at {x0.tolist()} h={h} after {it} steps")
            return stats
        slope = slope + CENTERING_GAIN * shift
    raise SectionError(
        f"centered section at {x0.tolist()} with h={h} off by {offset:.3e} after {max_iter} steps",
        slope, offset, max_iter,
    )


def profile_section(P: ModelProfile, h: float) -> SectionStats:
    """Closed-form section of the model profile at 0: d_h = (h/c_U)^(1/(1+γ)), l_h = r_h = sqrt(2h)."""
    if not h > 0:
        raise ValueError(f"section height must be positive, got {h}")
    d = (h / P.c_u) ** (1.0 / (1.0 + P.gamma))
    half = float(np.sqrt(2.0 * h))
    return SectionStats(h=float(h), d_h=float(d), l_h=half, r_h=half, w_h=2.0 * half)


def dyadic_heights(h_max: float, count: int) -> list[float]:
    return [h_max * 2.0 ** (-k) for k in range(count)]


# ---------------------------------------------------------------------------
# Mass balance and exponent fits
# ---------------------------------------------------------------------------

def mass_balance_ratio(stats: SectionStats, alpha: float, beta: float) -> float:
    """m_h = d_h^(2+α+β) w_h² / h^(2+β)."""
    if stats.truncated:
        raise ValueError(f"section at h={stats.h} is truncated")
    return stats.d_h ** (2.0 + alpha + beta) * stats.w_h ** 2 / stats.h ** (2.0 + beta)


@dataclass(frozen=True)
class BoundaryFits:
    d_fit: ExponentFit
    w_fit: ExponentFit
    n_used: int
    n_excluded: int

    def to_dict(self) -> dict[str, Any]:
        return {"d_fit": self.d_fit.to_dict(), "w_fit": self.w_fit.to_dict(),
                "n_used": self.n_used, "n_excluded": self.n_excluded}


def fit_boundary_exponents(
    stats_seq: Sequence[SectionStats],
    h_floor: float = 0.0,
    min_points: int = MIN_FIT_STATS,
) -> BoundaryFits:
    """
    Log-log slopes of d_h and w_h against h over usable sections with h >= h_floor.

    The model predicts slope(d_h) = 1/(1+γ) and slope(w_h) = 1/2.
    """
    used = [s for s in stats_seq if s.usable and s.h >= h_floor]
    excluded = len(stats_seq) - len(used)
    if excluded:
        logger.warning(f"fit_boundary_exponents: excluding {excluded} truncated, unresolved or sub-floor sections")
    if len(used) < min_points:
        raise ValueError(f"need at least {min_points} usable sections, got {len(used)}")
    hs = [s.h for s in used]
    d_fit = fit_loglog(hs, [s.d_h for s in used], min_points=min_points)
    w_fit = fit_loglog(hs, [s.w_h for s in used], min_points=min_points)
    return BoundaryFits(d_fit, w_fit, len(used), excluded)
