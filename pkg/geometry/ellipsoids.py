"""
geometry/ellipsoids.py

Ellipsoids (generator form) and the John ellipsoid of a convex body with the
center fixed at the barycenter.

The maximal inscribed ellipsoid centered at c is computed through its polar:
with the body written as n_i.(x - c) <= s_i, an ellipsoid c + E B lies in the
body iff |E a_i| <= 1 for a_i = n_i / s_i, so A = E^2 is the polar matrix of the
minimum-volume centered ellipsoid enclosing the points +-a_i. That problem is
solved with Khachiyan's first-order iteration plus away steps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from geometry.bodies import DEFAULT_RESOLUTION, ConvexBody, barycenter

logger = logging.getLogger("geometry.ellipsoids")

DIM = 2
# n^{3/2} for n = 2
JOHN_FACTOR = DIM ** 1.5


class JohnEllipsoidError(RuntimeError):
    """Raised when the iteration stalls; ``best`` is the best feasible iterate."""

    def __init__(self, message: str, best: "Ellipsoid", gap: float, iterations: int):
        super().__init__(message)
        self.best = best
        self.gap = gap
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """The set center + generator @ B(0, 1), generator symmetric positive definite."""

    center: np.ndarray
    generator: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.center, dtype=float).reshape(2)
        g = np.asarray(self.generator, dtype=float).reshape(2, 2)
        if not np.allclose(g, g.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(g).max()))):
            raise ValueError("Ellipsoid generator must be symmetric")
        g = 0.5 * (g + g.T)
        if np.linalg.eigvalsh(g).min() <= 0:
            raise ValueError("Ellipsoid generator must be positive definite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generator", g)

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> "Ellipsoid":
        return cls(np.asarray(center, dtype=float), radius * np.eye(2))

    @classmethod
    def from_axes(cls, center: Sequence[float], semi_axes: Sequence[float],
                  rotation: float = 0.0) -> "Ellipsoid":
        c, s = math.cos(rotation), math.sin(rotation)
        R = np.array([[c, -s], [s, c]])
        return cls(np.asarray(center, dtype=float), R @ np.diag(semi_axes) @ R.T)

    @property
    def area(self) -> float:
        return math.pi * float(np.linalg.det(self.generator))

    @property
    def semi_axes(self) -> tuple[float, float]:
        w = np.linalg.eigvalsh(self.generator)
        return float(w[1]), float(w[0])

    def dilate(self, r: float) -> "Ellipsoid":
        if r <= 0:
            raise ValueError(f"dilation factor must be positive, got {r}")
        return Ellipsoid(self.center, r * self.generator)

    def normalizing_map(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) with x -> A x + b sending the ellipsoid onto the unit disk."""
        inv = np.linalg.inv(self.generator)
        return inv, -inv @ self.center

    def gauge(self, points: np.ndarray) -> np.ndarray:
        """|E^{-1}(x - c)|: <= 1 exactly on the ellipsoid."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        local = np.linalg.solve(self.generator, (pts - self.center).T).T
        return np.linalg.norm(local, axis=1)

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return self.gauge(points) <= 1.0 + tol

    def to_body(self, resolution: int = DEFAULT_RESOLUTION) -> ConvexBody:
        """Inscribed polygonalization as a ConvexBody of ellipse kind."""
        w, V = np.linalg.eigh(self.generator)
        # major axis first
        major = V[:, 1]
        rotation = math.atan2(major[1], major[0])
        return ConvexBody.ellipse(self.center, (float(w[1]), float(w[0])), rotation, resolution)


def _polar_points(body: ConvexBody, center: np.ndarray) -> np.ndarray:
    slack = body.offsets - body.normals @ center
    if np.any(slack <= 0):
        raise ValueError("Ellipsoid center must lie in the interior of the body")
    return body.normals / slack[:, None]


def _feasible(points: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Scale A so that max_i a_i^T A a_i = 1 (largest inscribed multiple)."""
    m = np.einsum("ij,jk,ik->i", points, A, points).max()
    return A / m


def _sqrt_spd(A: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(A)
    return (V * np.sqrt(np.maximum(w, 0.0))) @ V.T


def john_ellipsoid(
    body: ConvexBody,
    center: Optional[np.ndarray] = None,
    tol: float = 1e-9,
    max_iter: int = 20000,
) -> Ellipsoid:
    """
    Maximum-area ellipsoid centered at the barycenter (or ``center``) inside the body.

    Satisfies E subset body subset 2*sqrt(2)*E. Raises JohnEllipsoidError with the
    best feasible iterate when the duality gap does not close within max_iter.
    """
    c = barycenter(body) if center is None else np.asarray(center, dtype=float)
    a = _polar_points(body, c)
    m = len(a)
    u = np.full(m, 1.0 / m)
    gap = math.inf
    for it in range(1, max_iter + 1):
        X = np.einsum("i,ij,ik->jk", u, a, a)
        M = np.einsum("ij,jk,ik->i", a, np.linalg.inv(X), a)
        j = int(M.argmax())
        gap = M[j] / DIM - 1.0
        if gap <= tol:
            break
        support = np.flatnonzero(u > 0)
        k = int(support[M[support].argmin()])
        if M[j] - DIM >= DIM - M[k]:
            step = (M[j] - DIM) / (DIM * (M[j] - 1.0))
            u *= 1.0 - step
            u[j] += step
        else:
            # away step, clipped so that u_k stays nonnegative
            step = min((DIM - M[k]) / (DIM * (M[k] - 1.0)) if M[k] > 1.0 else math.inf,
                       u[k] / (1.0 - u[k]))
            u *= 1.0 + step
            u[k] -= step
            u[k] = max(u[k], 0.0)
    else:
        X = np.einsum("i,ij,ik->jk", u, a, a)
        best = Ellipsoid(c, _sqrt_spd(_feasible(a, np.linalg.inv(X) / DIM)))
        raise JohnEllipsoidError(
            f"John ellipsoid iteration did not converge in {max_iter} steps (gap {gap:.3e})",
            best=best, gap=gap, iterations=max_iter,
        )
    A = _feasible(a, np.linalg.inv(X) / DIM)
    logger.debug(f"john_ellipsoid: {it} iterations, gap {gap:.2e}, {m} facets")
    return Ellipsoid(c, _sqrt_spd(A))


def containment_factor(body: ConvexBody, ellipsoid: Ellipsoid) -> float:
    """Smallest r with body subset r*E (about the ellipsoid's center)."""
    return float(ellipsoid.gauge(body.vertices).max())
