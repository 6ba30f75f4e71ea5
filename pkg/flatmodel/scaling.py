"""
flatmodel/scaling.py

Anisotropic rescalings D_t = diag(t^(1/2), t^(1/(1+γ))), the cylinders they
generate, and the rescaling of sampled potentials u_t(x) = u(D_t x) / t.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from geometry import ConvexBody, affine_image
from transport2d import PotentialField

logger = logging.getLogger("flatmodel.scaling")

HALFPLANE_SCALE = 1e3


def lambda_bar(lam: float, gamma: float) -> float:
    """λ + 2/(1+γ): boundary flatness exponent on the source side."""
    return lam + 2.0 / (1.0 + gamma)


def lambda_under(lam: float, gamma: float) -> float:
    """λ + 2γ/(1+γ): boundary flatness exponent on the target side."""
    return lam + 2.0 * gamma / (1.0 + gamma)


@dataclass(frozen=True)
class Rescaling:
    t: float
    gamma: float

    def __post_init__(self) -> None:
        if not self.t > 0:
            raise ValueError(f"rescaling parameter must be positive, got {self.t}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def diagonal(self) -> tuple[float, float]:
        return self.t ** 0.5, self.t ** (1.0 / (1.0 + self.gamma))

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.atleast_2d(np.asarray(points, dtype=float)) * np.array(self.diagonal)

    def inverse_apply(self, points: np.ndarray) -> np.ndarray:
        return np.atleast_2d(np.asarray(points, dtype=float)) / np.array(self.diagonal)

    def compose(self, other: "Rescaling") -> "Rescaling":
        if not math.isclose(self.gamma, other.gamma, rel_tol=1e-15):
            raise ValueError("cannot compose rescalings with different gamma")
        return Rescaling(self.t * other.t, self.gamma)


@dataclass(frozen=True)
class Cylinder:
    """
    B'_{r^(1/2)}(z') x (zn - r^e, zn + r^e) with e = 1/(1+γ), or γ/(1+γ) for
    the dual cylinder on the target side.
    """

    center: tuple[float, float]
    r: float
    gamma: float
    dual: bool = False

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValueError(f"cylinder height must be positive, got {self.r}")

    @property
    def half_width(self) -> float:
        return self.r ** 0.5

    @property
    def half_height(self) -> float:
        e = self.gamma / (1.0 + self.gamma) if self.dual else 1.0 / (1.0 + self.gamma)
        return self.r ** e

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return ((np.abs(pts[:, 0] - self.center[0]) < self.half_width)
                & (np.abs(pts[:, 1] - self.center[1]) < self.half_height))

    def to_body(self, upper_only: bool = False) -> ConvexBody:
        cx, cy = self.center
        lo = cy if upper_only else cy - self.half_height
        return ConvexBody.box(cx - self.half_width, lo, cx + self.half_width, cy + self.half_height)


def rescale(
    u: PotentialField,
    t: float,
    gamma: float,
    points: Optional[np.ndarray] = None,
) -> PotentialField:
    """
    u_t(x) = u(D_t x) / t.

    Without ``points`` the nodes themselves are mapped (x -> D_t^-1 x) and the
    result is exact; with ``points`` u is interpolated at D_t(points), which must
    lie in the sampled hull.
    """
    D = Rescaling(t, gamma)
    d = np.array(D.diagonal)
    inv = np.diag(1.0 / d)
    body = affine_image(u.body, inv) if u.body is not None else None
    window = affine_image(u.window, inv) if u.window is not None else None
    meta = dict(u.meta, rescaled_by=t)
    if points is None:
        return PotentialField(u.points / d, u.values / t, u.gradients * d / t, body, window,
                              None, meta)
    q = np.atleast_2d(np.asarray(points, dtype=float))
    images = q * d
    values = u.interpolate(images)
    if not np.all(np.isfinite(values)):
        raise ValueError("rescale: D_t(points) leaves the sampled domain")
    grads = u.gradient(images) * d / t
    return PotentialField(q, values / t, grads, body, window, None, meta)


ScalarField = Union[PotentialField, Callable[[np.ndarray], np.ndarray]]


def _values(u: ScalarField, q: np.ndarray) -> np.ndarray:
    if isinstance(u, PotentialField):
        return u.evaluate(q)
    return np.asarray(u(q), dtype=float)


def discrete_ma_residual(
    u: ScalarField,
    points: np.ndarray,
    alpha: float,
    beta: float,
    step: float,
) -> np.ndarray:
    """
    det D²u · u_n^β - xn^α by central differences of width ``step``.

    Satisfies residual(u_t)(x) = t^(-α/(1+γ)) residual(u)(D_t x) up to
    interpolation and difference error.
    """
    q = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(q[:, 1] <= step):
        raise ValueError("difference stencil reaches {xn <= 0}")
    e1, e2 = np.array([step, 0.0]), np.array([0.0, step])
    c = _values(u, q)
    u_pp = _values(u, q + e1)
    u_mm = _values(u, q - e1)
    u_np = _values(u, q + e2)
    u_nm = _values(u, q - e2)
    u11 = (u_pp - 2.0 * c + u_mm) / step ** 2
    u22 = (u_np - 2.0 * c + u_nm) / step ** 2
    u12 = (_values(u, q + e1 + e2) - _values(u, q + e1 - e2)
           - _values(u, q - e1 + e2) + _values(u, q - e1 - e2)) / (4.0 * step ** 2)
    un = (u_np - u_nm) / (2.0 * step)
    return (u11 * u22 - u12 ** 2) * np.maximum(un, 0.0) ** beta - q[:, 1] ** alpha


def sample_profile(
    evaluate: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]],
    half_width: float,
    height: float,
    n: int,
    body: Optional[ConvexBody] = None,
) -> PotentialField:
    """
    PotentialField of a closed-form profile on an n x n grid over [-a, a] x [0, b].

    The default body is a large box sharing the bottom edge, standing in for the
    half-plane {xn >= 0}: sections reaching the grid sides count as truncated,
    sections reaching {xn = 0} do not.
    """
    x1 = np.linspace(-half_width, half_width, n)
    xn = np.linspace(0.0, height, n)
    X1, XN = np.meshgrid(x1, xn)
    pts = np.column_stack([X1.ravel(), XN.ravel()])
    v, g, _ = evaluate(pts)
    window = ConvexBody.box(-half_width, 0.0, half_width, height)
    if body is None:
        body = ConvexBody.box(-HALFPLANE_SCALE * half_width, 0.0,
                              HALFPLANE_SCALE * half_width, HALFPLANE_SCALE * height)
    return PotentialField(pts, v, g, body=body, window=window,
                          spacing=max(2.0 * half_width, height) / (n - 1))
