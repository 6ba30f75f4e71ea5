"""
measures/quadrature.py

Adaptive cell quadrature for power densities over convex regions.

Cells of a rectangular grid over the region's bounding box are clipped to the
region (Sutherland-Hodgman against the halfplanes that can cut them) and
integrated with the centroid rule. A cell is refined into four children until
the children's sum agrees with the parent estimate to a local tolerance
proportional to the cell's share of the bounding box, which grades the grid
geometrically (ratio 2 per level) toward the boundary where d^alpha is rough.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from geometry import ConvexBody, clip_box, intersect, polygon_area_centroid
from measures.density import PowerDensity

logger = logging.getLogger("measures.quadrature")

DEFAULT_TOL = 1e-5
DEFAULT_MAX_LEVEL = 14
DEFAULT_MAX_CELLS = 400_000
INITIAL_GRID = 8
_CHUNK = 2048


@dataclass(frozen=True)
class QuadratureResult:
    mass: float
    error_estimate: float
    converged: bool
    n_cells: int
    levels: int
    moment: Optional[np.ndarray] = None

    def __float__(self) -> float:
        return self.mass


def cell_moments(
    f: PowerDensity,
    domain: ConvexBody,
    x0: np.ndarray,
    y0: np.ndarray,
    hx: float,
    hy: float,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Centroid-rule mass and first moment of equal boxes clipped to ``domain``.

    Boxes are [x0, x0+hx] x [y0, y0+hy]. Returns (mass (n,), moment (n, 2)).
    """
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if len(x0) > _CHUNK:
        parts = [cell_moments(f, domain, x0[s:s + _CHUNK], y0[s:s + _CHUNK], hx, hy)
                 for s in range(0, len(x0), _CHUNK)]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    centers = np.column_stack([x0 + 0.5 * hx, y0 + 0.5 * hy])
    half_diag = 0.5 * math.hypot(hx, hy)
    gaps = centers @ domain.normals.T - domain.offsets      # (n, m)
    worst = gaps.max(axis=1)
    inside = worst <= -half_diag
    cut = np.flatnonzero((worst > -half_diag) & (worst < half_diag))

    mass = np.zeros(len(centers))
    moment = np.zeros((len(centers), 2))
    if inside.any():
        m = hx * hy * f(centers[inside])
        mass[inside] = m
        moment[inside] = m[:, None] * centers[inside]
    if len(cut):
        pts = np.empty((len(cut), 2))
        areas = np.empty(len(cut))
        for k, i in enumerate(cut):
            active = gaps[i] > -half_diag
            poly = clip_box(domain, x0[i], y0[i], hx, hy, active)
            areas[k], pts[k] = polygon_area_centroid(poly)
        m = areas * f(pts)
        m[areas <= 0] = 0.0
        mass[cut] = m
        moment[cut] = m[:, None] * pts
    return mass, moment


def _children(x0: np.ndarray, y0: np.ndarray, hx: float, hy: float) -> tuple[np.ndarray, np.ndarray]:
    cx = np.stack([x0, x0 + 0.5 * hx, x0, x0 + 0.5 * hx], axis=1).ravel()
    cy = np.stack([y0, y0, y0 + 0.5 * hy, y0 + 0.5 * hy], axis=1).ravel()
    return cx, cy


def integrate(
    f: PowerDensity,
    region: Optional[ConvexBody] = None,
    tol: float = DEFAULT_TOL,
    max_level: int = DEFAULT_MAX_LEVEL,
    max_cells: int = DEFAULT_MAX_CELLS,
    initial_grid: int = INITIAL_GRID,
) -> QuadratureResult:
    """
    Mass of f over region ∩ body to relative accuracy ``tol``.

    ``region=None`` integrates over the whole body. When the refinement budget
    (``max_level`` or ``max_cells``) runs out the achieved estimate is returned
    with ``converged=False``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    domain = f.body if region is None else intersect(region, f.body)
    if domain is None:
        return QuadratureResult(0.0, 0.0, True, 0, 0, np.zeros(2))

    xmin, ymin, xmax, ymax = domain.bounds
    hx = (xmax - xmin) / initial_grid
    hy = (ymax - ymin) / initial_grid
    box_area = (xmax - xmin) * (ymax - ymin)
    gx, gy = np.meshgrid(xmin + hx * np.arange(initial_grid), ymin + hy * np.arange(initial_grid))
    x0, y0 = gx.ravel(), gy.ravel()
    parent_mass, parent_moment = cell_moments(f, domain, x0, y0, hx, hy)
    scale = abs(parent_mass.sum())

    total = 0.0
    moment = np.zeros(2)
    error = 0.0
    n_cells = len(x0)
    converged = True
    level = 0

    # drop empty parents whose children cannot carry mass
    live = parent_mass > 0
    centers = np.column_stack([x0 + 0.5 * hx, y0 + 0.5 * hy])
    live |= domain.support_gap(centers) < 0.5 * math.hypot(hx, hy)
    x0, y0 = x0[live], y0[live]
    parent_mass, parent_moment = parent_mass[live], parent_moment[live]

    while len(x0):
        if level >= max_level or n_cells + 4 * len(x0) > max_cells:
            total += parent_mass.sum()
            moment += parent_moment.sum(axis=0)
            error += math.inf if level == 0 else float(np.abs(pending_diff).sum())
            converged = False
            break
        cx, cy = _children(x0, y0, hx, hy)
        hx, hy = 0.5 * hx, 0.5 * hy
        level += 1
        cm, cmom = cell_moments(f, domain, cx, cy, hx, hy)
        n_cells += len(cx)
        child_sum = cm.reshape(-1, 4).sum(axis=1)
        diff = np.abs(child_sum - parent_mass)
        local_tol = tol * max(scale, 1e-300) * (4.0 * hx * hy) / box_area
        done = diff <= local_tol
        total += child_sum[done].sum()
        moment += cmom.reshape(-1, 4, 2)[done].sum(axis=(0, 1))
        error += diff[done].sum()

        keep = np.repeat(~done, 4)
        x0, y0 = cx[keep], cy[keep]
        parent_mass, parent_moment = cm[keep], cmom[keep]
        pending_diff = np.repeat(diff[~done] / 4.0, 4)

    if not converged:
        logger.warning(
            f"integrate: refinement budget exhausted at level {level} "
            f"({n_cells} cells), estimate {total:.6g} +- {error:.2e}"
        )
    else:
        logger.debug(f"integrate: mass {total:.10g} in {n_cells} cells, {level} levels")
    return QuadratureResult(float(total), float(error), converged, n_cells, level, moment)
