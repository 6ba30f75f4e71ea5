"""
measures/density.py

Densities of the form a(x) * d(x)^alpha on a convex body, where d is the
distance to the boundary of a (possibly different) distance body and a is a
positive Hölder coefficient.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from geometry import ConvexBody, boundary_distance, nearest_boundary

logger = logging.getLogger("measures.density")

COEFF_KINDS = ("constant", "radial", "affine")


@dataclass(frozen=True)
class HolderData:
    """Declared regularity of a coefficient: a in C^exponent with bounds."""

    exponent: float
    seminorm: float
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not (0 < self.exponent <= 1):
            raise ValueError(f"Hölder exponent must be in (0, 1], got {self.exponent}")
        if self.seminorm < 0:
            raise ValueError("Hölder seminorm must be nonnegative")
        if not (0 < self.lower <= self.upper < math.inf):
            raise ValueError(
                f"Coefficient bounds must satisfy 0 < lower <= upper < inf, got [{self.lower}, {self.upper}]"
            )


@dataclass(frozen=True)
class Coefficient:
    """
    Scalar field a(x).

    constant: a = c
    radial:   a = c0 + c1 |x - z|^s   params (c0, c1, s, zx, zy), s in (0, 1]
    affine:   a = c0 + g . x          params (c0, gx, gy)
    """

    kind: str = "constant"
    params: tuple[float, ...] = (1.0,)

    def __post_init__(self) -> None:
        if self.kind not in COEFF_KINDS:
            raise ValueError(f"Unknown coefficient kind '{self.kind}'. Available: {COEFF_KINDS}")
        expected = {"constant": 1, "radial": 5, "affine": 3}[self.kind]
        params = tuple(float(p) for p in self.params)
        if self.kind == "radial" and len(params) == 3:
            params = params + (0.0, 0.0)
        if len(params) != expected:
            raise ValueError(f"'{self.kind}' coefficient takes {expected} params, got {len(params)}")
        if self.kind == "radial" and not (0 < params[2] <= 1):
            raise ValueError(f"radial coefficient power must be in (0, 1], got {params[2]}")
        object.__setattr__(self, "params", params)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        p = self.params
        if self.kind == "constant":
            return np.full(len(pts), p[0])
        if self.kind == "radial":
            r = np.linalg.norm(pts - np.array([p[3], p[4]]), axis=1)
            return p[0] + p[1] * r ** p[2]
        return p[0] + pts @ np.array([p[1], p[2]])

    def holder_data(self, body: ConvexBody) -> HolderData:
        p = self.params
        if self.kind == "constant":
            return HolderData(1.0, 0.0, p[0], p[0])
        if self.kind == "affine":
            vals = self(body.vertices)
            return HolderData(1.0, float(math.hypot(p[1], p[2])), float(vals.min()), float(vals.max()))
        z = np.array([[p[3], p[4]]])
        if body.contains(z)[0]:
            rmin = 0.0
        else:
            closest, _ = nearest_boundary(body, z)
            rmin = float(np.linalg.norm(closest[0] - z[0]))
        rmax = float(np.linalg.norm(body.vertices - z, axis=1).max())
        ends = (p[0] + p[1] * rmin ** p[2], p[0] + p[1] * rmax ** p[2])
        return HolderData(p[2], abs(p[1]), min(ends), max(ends))

    def to_dict(self) -> dict[str, Any]:
        return {"coeff": self.kind, "coeff_params": list(self.params)}


@dataclass(frozen=True, eq=False)
class PowerDensity:
    """
    f(x) = a(x) * d(x)^alpha on ``body``, zero outside.

    ``distance_body`` defaults to ``body``; a wider one models a window cut out
    of a domain whose boundary only partly meets the window.
    """

    body: ConvexBody
    alpha: float
    coeff: Coefficient = field(default_factory=Coefficient)
    distance_body: Optional[ConvexBody] = None
    holder: HolderData = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a finite number >= 0, got {self.alpha}")
        # validates positivity of the coefficient on the body
        object.__setattr__(self, "holder", self.coeff.holder_data(self.body))

    @property
    def dist_body(self) -> ConvexBody:
        return self.body if self.distance_body is None else self.distance_body

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = self.body.contains(pts)
        out = np.zeros(len(pts))
        if inside.any():
            d = boundary_distance(self.dist_body, pts[inside])
            out[inside] = self.coeff(pts[inside]) * d ** self.alpha
        return out

    def __repr__(self) -> str:
        return f"PowerDensity(alpha={self.alpha}, coeff={self.coeff.kind}, body={self.body!r})"


def eval_density(f: PowerDensity, x: np.ndarray) -> np.ndarray | float:
    """Density value at a point (float) or at each row of an (n, 2) array."""
    arr = np.asarray(x, dtype=float)
    vals = f(arr)
    return float(vals[0]) if arr.ndim == 1 else vals
