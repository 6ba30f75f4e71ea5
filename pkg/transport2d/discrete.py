"""
transport2d/discrete.py

Atomic measures on the plane and their construction from power densities.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from geometry import ConvexBody
from measures import PowerDensity, cell_moments

logger = logging.getLogger("transport2d.discrete")

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray
    body: Optional[ConvexBody] = None
    spacing: Optional[float] = None

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) != len(w) or len(w) == 0:
            raise ValueError("DiscreteMeasure needs points (n, 2) and n weights, n >= 1")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("DiscreteMeasure weights must be positive and finite")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"DiscreteMeasure weights must sum to 1, got {w.sum():.15g}")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("DiscreteMeasure points must be pairwise distinct")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, points: np.ndarray, weights: np.ndarray, **kwargs) -> "DiscreteMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(points, w / w.sum(), **kwargs)

    @classmethod
    def uniform(cls, points: np.ndarray, **kwargs) -> "DiscreteMeasure":
        n = len(points)
        return cls(points, np.full(n, 1.0 / n), **kwargs)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def granularity(self) -> float:
        return float(self.weights.max())

    @property
    def diameter(self) -> float:
        lo, hi = self.points.min(axis=0), self.points.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def mass_in(self, region: ConvexBody) -> float:
        return float(self.weights[region.contains(self.points, tol=1e-12)].sum())

    def translate(self, shift: np.ndarray) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points + np.asarray(shift, dtype=float), self.weights,
                               spacing=self.spacing)


def discretize(
    f: PowerDensity,
    n_cells: int,
    shape: Optional[tuple[int, int]] = None,
    subcells: int = 4,
) -> DiscreteMeasure:
    """
    One atom per nonempty grid cell at the cell's f-weighted centroid.

    The grid covers the body's bounding box with about ``n_cells`` square-ish
    cells (or exactly ``shape = (nx, ny)``); each cell's mass and first moment
    come from a subcells x subcells centroid rule on the clipped sub-boxes.
    """
    if n_cells < 4:
        raise ValueError(f"n_cells must be >= 4, got {n_cells}")
    body = f.body
    xmin, ymin, xmax, ymax = body.bounds
    if shape is None:
        h = math.sqrt((xmax - xmin) * (ymax - ymin) / n_cells)
        nx = max(1, int(round((xmax - xmin) / h)))
        ny = max(1, int(round((ymax - ymin) / h)))
    else:
        nx, ny = shape
    hx, hy = (xmax - xmin) / nx, (ymax - ymin) / ny
    sx, sy = hx / subcells, hy / subcells

    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    cell = (iy * nx + ix).ravel()
    sub_i, sub_j = np.meshgrid(np.arange(subcells), np.arange(subcells), indexing="xy")
    x0 = (xmin + ix.ravel()[:, None] * hx + sub_i.ravel()[None, :] * sx).ravel()
    y0 = (ymin + iy.ravel()[:, None] * hy + sub_j.ravel()[None, :] * sy).ravel()
    owner = np.repeat(cell, subcells * subcells)

    mass, moment = cell_moments(f, body, x0, y0, sx, sy)
    cell_mass = np.bincount(owner, weights=mass, minlength=nx * ny)
    cell_mom = np.column_stack([
        np.bincount(owner, weights=moment[:, 0], minlength=nx * ny),
        np.bincount(owner, weights=moment[:, 1], minlength=nx * ny),
    ])
    keep = cell_mass > 0
    if not keep.any():
        raise ValueError("discretize: every grid cell is empty")
    pts = cell_mom[keep] / cell_mass[keep][:, None]
    logger.debug(f"discretize: {nx}x{ny} grid, {int(keep.sum())} atoms, alpha={f.alpha}")
    return DiscreteMeasure.normalized(pts, cell_mass[keep], body=body, spacing=max(hx, hy))
