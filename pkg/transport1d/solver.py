"""
transport1d/solver.py

Exact optimal transport on [0, 1] by CDF inversion, T = G^{-1} o F.

CDFs are tabulated on a knot set that is the union of a uniform grid and the
dyadic points 2^-k (mirrored for two-sided densities), each piece integrated
with adaptive Gauss-Kronrod; pieces touching a vanishing endpoint use the
algebraic weight so the t^alpha singularity is integrated exactly.
"""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

from analysis.fits import ExponentFit, fit_loglog

logger = logging.getLogger("transport1d.solver")

DYADIC_DEPTH = 30
MIN_GRID = 16
MIN_FIT_POINTS = 8
_QUAD_OPTS = dict(epsabs=0.0, epsrel=1e-13, limit=200)


def _unit(t: float) -> float:
    return 1.0


@dataclass(eq=False)
class Density1D:
    """
    Normalized density on [0, 1] proportional to a(t) * t^alpha.

    With ``two_sided`` the weight is the distance to both ends, min(t, 1-t)^alpha.
    """

    alpha: float
    coeff: Callable[[float], float] = _unit
    two_sided: bool = False
    grid_n: int = 256
    knots: np.ndarray = field(init=False, repr=False)
    cdf_table: np.ndarray = field(init=False, repr=False)
    total: float = field(init=False)

    def __post_init__(self) -> None:
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a finite number >= 0, got {self.alpha}")
        probe = np.array([self.coeff(float(t)) for t in np.linspace(0.0, 1.0, 1025)])
        if not np.all(np.isfinite(probe)) or probe.min() <= 0:
            raise ValueError("Density1D coefficient must be positive and finite on [0, 1]")
        self.knots = knot_set(self.grid_n, self.two_sided)
        pieces = np.array([self._piece(a, b) for a, b in zip(self.knots[:-1], self.knots[1:])])
        cum = np.concatenate([[0.0], np.cumsum(pieces)])
        self.total = float(cum[-1])
        self.cdf_table = cum / self.total
        self.cdf_table[-1] = 1.0

    @classmethod
    def power(cls, alpha: float, slope: float = 0.0, two_sided: bool = False,
              grid_n: int = 256) -> "Density1D":
        """a(t) = 1 + slope * t."""
        if slope == 0.0:
            return cls(alpha, _unit, two_sided, grid_n)
        return cls(alpha, lambda t: 1.0 + slope * t, two_sided, grid_n)

    def weight(self, t: float) -> float:
        d = min(t, 1.0 - t) if self.two_sided else t
        return self.coeff(t) * max(d, 0.0) ** self.alpha

    def pdf(self, t: np.ndarray) -> np.ndarray:
        return np.array([self.weight(float(s)) for s in np.atleast_1d(t)]) / self.total

    def _piece(self, a: float, b: float) -> float:
        """Unnormalized mass of [a, b]; [a, b] never straddles 1/2."""
        if self.alpha == 0:
            return integrate.quad(self.coeff, a, b, **_QUAD_OPTS)[0]
        if self.two_sided and a >= 0.5:
            if b == 1.0:
                return integrate.quad(self.coeff, a, b, weight="alg", wvar=(0.0, self.alpha), **_QUAD_OPTS)[0]
            return integrate.quad(lambda t: self.coeff(t) * (1.0 - t) ** self.alpha, a, b, **_QUAD_OPTS)[0]
        if a == 0.0:
            return integrate.quad(self.coeff, a, b, weight="alg", wvar=(self.alpha, 0.0), **_QUAD_OPTS)[0]
        return integrate.quad(lambda t: self.coeff(t) * t ** self.alpha, a, b, **_QUAD_OPTS)[0]

    def cdf(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        if t >= 1.0:
            return 1.0
        k = bisect.bisect_right(self.knots, t) - 1
        a = float(self.knots[k])
        if t == a:
            return float(self.cdf_table[k])
        return float(self.cdf_table[k] + self._piece(a, t) / self.total)

    def quantile(self, y: float) -> float:
        """G^{-1}(y) by Brent's method on the bracketing knot piece."""
        if y <= 0.0:
            return 0.0
        if y >= 1.0:
            return 1.0
        k = int(np.searchsorted(self.cdf_table, y, side="right")) - 1
        k = min(max(k, 0), len(self.knots) - 2)
        if self.cdf_table[k] == y:
            return float(self.knots[k])
        a, b = float(self.knots[k]), float(self.knots[k + 1])
        return optimize.brentq(lambda s: self.cdf(s) - y, a, b, xtol=1e-300, rtol=1e-15, maxiter=200)


def knot_set(grid_n: int, two_sided: bool = False) -> np.ndarray:
    """Uniform grid plus dyadic points 2^-k (and 1 - 2^-k when two-sided)."""
    dyadic = 2.0 ** -np.arange(1, DYADIC_DEPTH + 1)
    parts = [np.linspace(0.0, 1.0, grid_n + 1), dyadic]
    if two_sided:
        parts.append(1.0 - dyadic)
    return np.unique(np.concatenate(parts))


@dataclass(eq=False)
class MonotoneMap:
    """Nondecreasing map of [0, 1] onto itself, queried by monotone cubic interpolation."""

    t: np.ndarray
    values: np.ndarray
    _interp: Optional[PchipInterpolator] = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1 or len(t) < 2:
            raise ValueError("MonotoneMap needs matching 1-D grids with at least 2 nodes")
        if np.any(np.diff(t) <= 0):
            raise ValueError("MonotoneMap grid must be strictly increasing")
        if t[0] != 0.0 or t[-1] != 1.0:
            raise ValueError("MonotoneMap grid must span [0, 1]")
        v = np.maximum.accumulate(np.clip(v, 0.0, 1.0))
        v[0], v[-1] = 0.0, 1.0
        self.t, self.values = t, v
        self._interp = PchipInterpolator(t, v, extrapolate=False)

    def __call__(self, s: np.ndarray | float) -> np.ndarray | float:
        arr = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
        out = self._interp(arr)
        # exact node values where queried on the grid
        idx = np.searchsorted(self.t, arr)
        idx = np.clip(idx, 0, len(self.t) - 1)
        hit = self.t[idx] == arr
        out = np.where(hit, self.values[idx], out)
        return float(out) if np.ndim(out) == 0 else out

    def compose(self, inner: "MonotoneMap") -> "MonotoneMap":
        """self o inner, sampled on inner's grid."""
        return MonotoneMap(inner.t, np.asarray(self(inner.values)))

    def inverse(self) -> "MonotoneMap":
        v, idx = np.unique(self.values, return_index=True)
        return MonotoneMap(v, self.t[idx])


def solve_1d(f: Density1D, g: Density1D, grid_n: int = 256) -> MonotoneMap:
    """
    Optimal map T = G^{-1} o F on a uniform grid of ``grid_n`` cells plus dyadic nodes.

    Mass balance F(t_i) = G(T(t_i)) holds at every node to quadrature accuracy.
    """
    if grid_n < MIN_GRID:
        raise ValueError(f"grid_n must be >= {MIN_GRID}, got {grid_n}")
    nodes = knot_set(grid_n, f.two_sided or g.two_sided)
    values = np.empty_like(nodes)
    for i, t in enumerate(nodes):
        values[i] = g.quantile(f.cdf(float(t)))
    values[0], values[-1] = 0.0, 1.0
    logger.debug(f"solve_1d: alpha={f.alpha} beta={g.alpha} on {len(nodes)} nodes")
    return MonotoneMap(nodes, values)


def mass_balance_error(T: MonotoneMap, f: Density1D, g: Density1D) -> float:
    """max_i |F(t_i) - G(T(t_i))| over the map's nodes."""
    return max(abs(f.cdf(float(t)) - g.cdf(float(v))) for t, v in zip(T.t, T.values))


def dyadic_points(window: tuple[float, float]) -> np.ndarray:
    lo, hi = window
    k = np.arange(1, DYADIC_DEPTH + 1)
    pts = 2.0 ** -k.astype(float)
    return pts[(pts >= lo) & (pts <= hi)][::-1]


def fit_exponent(T: MonotoneMap, window: tuple[float, float] = (1e-4, 1e-1)) -> ExponentFit:
    """Least-squares slope of log T against log t over dyadic points in ``window``."""
    lo, hi = window
    if not (0 < lo < hi <= 0.5):
        raise ValueError(f"window must satisfy 0 < t_min < t_max <= 1/2, got {window}")
    pts = dyadic_points(window)
    if len(pts) < MIN_FIT_POINTS:
        raise ValueError(f"window {window} holds {len(pts)} dyadic points, need >= {MIN_FIT_POINTS}")
    vals = np.asarray(T(pts))
    return fit_loglog(pts, vals, window=(lo, hi), min_points=MIN_FIT_POINTS)
