"""
analysis/diagnostics.py

Boundary diagnostics of a sampled Brenier potential: obliqueness of the map at
the source boundary, the normal-derivative ratio u_n / xn^γ and its decay over
nested cylinders, the tangential Pogorelov quantity on boundary sections and the
boundary expansion fit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from analysis.sections import SectionStats, boundary_frame, extract_section, section_mask
from flatmodel import Cylinder, LiouvilleFit, ModelProfile, liouville_check
from geometry import ConvexBody, boundary_points, nearest_boundary
from transport2d import PotentialField

logger = logging.getLogger("analysis.diagnostics")


# ---------------------------------------------------------------------------
# Obliqueness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObliquenessResult:
    theta: float
    n_used: int
    n_skipped: int
    values: tuple[float, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"theta": self.theta, "n_used": self.n_used, "n_skipped": self.n_skipped}


def obliqueness(
    u: PotentialField,
    X: ConvexBody,
    Y: ConvexBody,
    boundary_samples: int = 64,
    tol: Optional[float] = None,
) -> ObliquenessResult:
    """
    min over sampled x in the boundary of X of nu_X(x) . nu_Y(grad u(x)), both inner normals.

    Samples whose image lands farther than ``tol`` from the boundary of Y are
    skipped and counted (default tol: max(4 spacing, 2% of diam Y)).
    """
    if boundary_samples < 1:
        raise ValueError("boundary_samples must be >= 1")
    tol = max(4.0 * u.spacing, 0.02 * Y.diameter) if tol is None else tol
    xs, nu_x = boundary_points(X, boundary_samples, phase=0.5)
    ys = u.gradient(xs)
    closest, outward = nearest_boundary(Y, ys)
    dist = np.linalg.norm(ys - closest, axis=1)
    ok = dist <= tol
    if not ok.any():
        raise ValueError(f"no boundary sample maps within {tol:.3e} of the target boundary")
    dots = np.einsum("ij,ij->i", nu_x[ok], -outward[ok])
    skipped = int((~ok).sum())
    if skipped:
        logger.warning(f"obliqueness: skipped {skipped}/{boundary_samples} samples off the target boundary")
    theta = float(dots.min())
    logger.info(f"obliqueness: theta={theta:.4f} over {int(ok.sum())} samples")
    return ObliquenessResult(theta, int(ok.sum()), skipped, tuple(float(d) for d in dots))


# ---------------------------------------------------------------------------
# Normal derivative ratio
# ---------------------------------------------------------------------------

def _normal_derivative(u: PotentialField, q: np.ndarray, step: float) -> np.ndarray:
    e = np.array([0.0, step])
    return (u.evaluate(q + e) - u.evaluate(q - e)) / (2.0 * step)


def _ratio(u: PotentialField, P: ModelProfile, q: np.ndarray, step: Optional[float]) -> np.ndarray:
    step = 0.5 * u.spacing if step is None else step
    if np.any(q[:, 1] <= step):
        raise ValueError(f"probes must satisfy xn > step = {step:.3e}")
    return _normal_derivative(u, q, step) / q[:, 1] ** P.gamma


def normal_ratio(
    u: PotentialField,
    P: ModelProfile,
    probe_points: np.ndarray,
    step: Optional[float] = None,
) -> tuple[float, float]:
    """(min, max) of u_n / xn^γ with u_n by central differences."""
    q = np.atleast_2d(np.asarray(probe_points, dtype=float))
    r = _ratio(u, P, q, step)
    return float(r.min()), float(r.max())


@dataclass(frozen=True)
class OscillationReport:
    scales: tuple[float, ...]
    oscillations: tuple[float, ...]
    factors: tuple[float, ...]

    @property
    def monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.oscillations, self.oscillations[1:]))

    def to_dict(self) -> dict[str, Any]:
        return {"scales": list(self.scales), "oscillations": list(self.oscillations),
                "factors": list(self.factors), "monotone": self.monotone}


def oscillation_decay(
    u: PotentialField,
    P: ModelProfile,
    scales: Sequence[float],
    center: Sequence[float] = (0.0, 0.0),
    n_probe: int = 9,
    step: Optional[float] = None,
) -> OscillationReport:
    """Oscillation of u_n / xn^γ over the upper half of each cylinder C_r(center)."""
    if len(scales) < 2:
        raise ValueError("oscillation_decay needs at least two scales")
    step = 0.5 * u.spacing if step is None else step
    osc = []
    for r in scales:
        cyl = Cylinder((float(center[0]), float(center[1])), float(r), P.gamma)
        lo = max(cyl.half_height / 8.0, 2.0 * step)
        if lo >= cyl.half_height:
            raise ValueError(f"cylinder r={r} too thin for the sampling step")
        x1 = np.linspace(center[0] - cyl.half_width, center[0] + cyl.half_width, n_probe)
        xn = np.linspace(center[1] + lo, center[1] + cyl.half_height, n_probe)
        X1, XN = np.meshgrid(x1, xn)
        q = np.column_stack([X1.ravel(), XN.ravel()])
        ratio = _ratio(u, P, q, step)
        osc.append(float(ratio.max() - ratio.min()))
    factors = tuple(b / a if a > 0 else float("nan") for a, b in zip(osc, osc[1:]))
    return OscillationReport(tuple(float(s) for s in scales), tuple(osc), factors)


# ---------------------------------------------------------------------------
# Tangential second derivatives on boundary sections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TangentialHessianReport:
    heights: tuple[float, ...]
    bounds: tuple[float, ...]

    @property
    def spread(self) -> float:
        finite = [b for b in self.bounds if np.isfinite(b) and b > 0]
        return max(finite) / min(finite) if finite else float("nan")


def tangential_hessian_bound(
    u: PotentialField,
    x0: Sequence[float],
    heights: Sequence[float],
    normal: Optional[Sequence[float]] = None,
    step: Optional[float] = None,
) -> TangentialHessianReport:
    """
    max of u_ee |u - l - h| over nodes of S_h(u, x0), e the boundary tangent.

    l is the supporting plane at x0; nodes whose difference stencil leaves the
    sampled hull are ignored.
    """
    x0 = np.asarray(x0, dtype=float)
    _, tau = boundary_frame(normal)
    step = u.spacing if step is None else step
    slope = u.gradient(x0)[0]
    u0 = float(u.evaluate(x0)[0])
    bounds = []
    for h in heights:
        mask = section_mask(u, x0, slope, h)
        q = u.points[mask]
        if len(q) == 0:
            bounds.append(float("nan"))
            continue
        plus = u.interpolate(q + step * tau)
        minus = u.interpolate(q - step * tau)
        center = u.interpolate(q)
        ok = np.isfinite(plus) & np.isfinite(minus) & np.isfinite(center)
        if not ok.any():
            bounds.append(float("nan"))
            continue
        u_ee = (plus[ok] - 2.0 * center[ok] + minus[ok]) / step ** 2
        gap = np.abs(center[ok] - u0 - (q[ok] - x0) @ slope - h)
        bounds.append(float((u_ee * gap).max()))
    return TangentialHessianReport(tuple(float(h) for h in heights), tuple(bounds))


# ---------------------------------------------------------------------------
# Boundary expansion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionFit:
    p1: float
    p2: float
    remainder: float
    n_points: int
    fit: LiouvilleFit

    def to_dict(self) -> dict[str, Any]:
        return {"p1": self.p1, "p2": self.p2, "remainder": self.remainder,
                "n_points": self.n_points, "fit": self.fit.to_dict()}


def boundary_expansion_fit(
    u: PotentialField,
    x0: Sequence[float],
    normal: Optional[Sequence[float]],
    P: ModelProfile,
    radius: float,
) -> ExpansionFit:
    """
    Fit u - u(x0) - grad u(x0).(x - x0) ~ p1 y1² + p2 yn^(1+γ) in the boundary frame at x0.

    ``remainder`` is the fit residual relative to the largest sampled value.
    """
    x0 = np.asarray(x0, dtype=float)
    nu, tau = boundary_frame(normal)
    rel = u.points - x0
    y = np.column_stack([rel @ tau, rel @ nu])
    near = (np.linalg.norm(y, axis=1) <= radius) & (y[:, 1] >= 0)
    if near.sum() < 6:
        raise ValueError(f"only {int(near.sum())} nodes within radius {radius} of the boundary point")
    slope = u.gradient(x0)[0]
    w = u.values[near] - float(u.evaluate(x0)[0]) - rel[near] @ slope
    g = u.gradients[near] - slope
    frame = PotentialField(y[near], w, np.column_stack([g @ tau, g @ nu]), spacing=u.spacing)
    fit = liouville_check(frame, P)
    scale = max(float(np.abs(w).max()), 1e-300)
    return ExpansionFit(fit.P_prime, fit.p_n, fit.residual_max / scale, int(near.sum()), fit)


def section_extents(
    u: PotentialField,
    x0: Sequence[float],
    heights: Sequence[float],
    normal: Optional[Sequence[float]] = None,
) -> list[SectionStats]:
    """Classical sections at x0 for each height, slope fixed at grad u(x0)."""
    x0 = np.asarray(x0, dtype=float)
    slope = u.gradient(x0)[0]
    return [extract_section(u, x0, slope, h, normal=normal) for h in heights]
