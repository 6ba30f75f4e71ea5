"""
transport2d/potentials.py

Sampled convex potentials: Brenier potential recovery from a transport
solution and the discrete Legendre transform.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Optional

import numpy as np
from scipy.interpolate import CloughTocher2DInterpolator, LinearNDInterpolator
from scipy.sparse.csgraph import csgraph_from_dense, dijkstra

from geometry import ConvexBody
from transport2d.discrete import DiscreteMeasure
from transport2d.solvers import TransportSolution

logger = logging.getLogger("transport2d.potentials")

_CHUNK = 1024
POTENTIAL_KINDS = ("duals", "midrange")


@dataclass(eq=False)
class PotentialField:
    """
    Values u(x_i) and gradient samples T(x_i) = grad u(x_i) on scattered nodes.

    ``body`` is the domain the nodes sample; ``window`` an optional sampling
    window (sections touching its edge away from the body are truncated).
    """

    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    body: Optional[ConvexBody] = None
    window: Optional[ConvexBody] = None
    spacing: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.gradients = np.asarray(self.gradients, dtype=float)
        n = len(self.points)
        if self.points.shape != (n, 2) or self.values.shape != (n,) or self.gradients.shape != (n, 2):
            raise ValueError("PotentialField needs points (n, 2), values (n,), gradients (n, 2)")
        if n < 3:
            raise ValueError("PotentialField needs at least 3 nodes")
        if self.spacing is None:
            self.spacing = _typical_spacing(self.points)

    def __len__(self) -> int:
        return len(self.values)

    @cached_property
    def _value_interp(self) -> CloughTocher2DInterpolator:
        return CloughTocher2DInterpolator(self.points, self.values, fill_value=np.nan)

    @cached_property
    def _gradient_interp(self) -> LinearNDInterpolator:
        return LinearNDInterpolator(self.points, self.gradients, fill_value=np.nan)

    def interpolate(self, q: np.ndarray) -> np.ndarray:
        """C1 interpolant inside the node hull, NaN outside."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        return np.asarray(self._value_interp(q), dtype=float).reshape(len(q))

    def evaluate(self, q: np.ndarray) -> np.ndarray:
        """C1 interpolant inside the node hull, supporting-plane envelope outside it."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        out = np.asarray(self._value_interp(q), dtype=float).reshape(len(q))
        miss = ~np.isfinite(out)
        if miss.any():
            out[miss] = self.support_value(q[miss])
        return out

    def gradient(self, q: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(np.asarray(q, dtype=float))
        out = np.asarray(self._gradient_interp(q), dtype=float).reshape(len(q), 2)
        miss = ~np.isfinite(out).all(axis=1)
        if miss.any():
            out[miss] = self.gradients[self.support_index(q[miss])]
        return out

    def support_index(self, q: np.ndarray) -> np.ndarray:
        """Index of the supporting plane attaining the envelope at each query."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        c = self.values - np.einsum("ij,ij->i", self.gradients, self.points)
        out = np.empty(len(q), dtype=int)
        for s in range(0, len(q), _CHUNK):
            planes = q[s:s + _CHUNK] @ self.gradients.T + c
            out[s:s + _CHUNK] = planes.argmax(axis=1)
        return out

    def support_value(self, q: np.ndarray) -> np.ndarray:
        """max_i u_i + T_i . (q - x_i): the largest convex minorant of the data."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        c = self.values - np.einsum("ij,ij->i", self.gradients, self.points)
        out = np.empty(len(q))
        for s in range(0, len(q), _CHUNK):
            out[s:s + _CHUNK] = (q[s:s + _CHUNK] @ self.gradients.T + c).max(axis=1)
        return out

    def convexity_violation(self, n_pairs: Optional[int] = None, seed: int = 0) -> float:
        """
        max over node pairs of u_i + T_i.(x_j - x_i) - u_j (0 when discretely convex).

        All pairs by default; ``n_pairs`` samples random pairs instead.
        """
        if n_pairs is None:
            return max(0.0, float((self.support_value(self.points) - self.values).max()))
        rng = np.random.default_rng(seed)
        i = rng.integers(0, len(self), n_pairs)
        j = rng.integers(0, len(self), n_pairs)
        gap = self.values[i] + np.einsum("ij,ij->i", self.gradients[i], self.points[j] - self.points[i]) - self.values[j]
        return max(0.0, float(gap.max()))

    def add_affine(self, slope: np.ndarray, constant: float = 0.0) -> "PotentialField":
        slope = np.asarray(slope, dtype=float)
        return PotentialField(self.points, self.values + self.points @ slope + constant,
                              self.gradients + slope, self.body, self.window, self.spacing, dict(self.meta))

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "points": self.points.tolist(),
            "values": self.values.tolist(),
            "gradients": self.gradients.tolist(),
            "spacing": self.spacing,
            "meta": self.meta,
        }
        if self.body is not None:
            d["body"] = self.body.to_dict()
        if self.window is not None:
            d["window"] = self.window.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PotentialField":
        body = ConvexBody.from_dict(d["body"]) if d.get("body") else None
        window = ConvexBody.from_dict(d["window"]) if d.get("window") else None
        return cls(np.asarray(d["points"]), np.asarray(d["values"]), np.asarray(d["gradients"]),
                   body, window, d.get("spacing"), dict(d.get("meta") or {}))


def _typical_spacing(points: np.ndarray) -> float:
    lo, hi = points.min(axis=0), points.max(axis=0)
    area = max(float(np.prod(hi - lo)), 1e-300)
    return float(np.sqrt(area / len(points)))


def _midrange_values(points: np.ndarray, values: np.ndarray, gradients: np.ndarray, root: int) -> np.ndarray:
    """
    Midpoint of the smallest and largest u with u_j >= u_i + T_i.(x_j - x_i)
    for all pairs, both pinned to ``values[root]`` at the root node.

    Both extremes are shortest-path distances on the complete graph with edge
    weights -T_i.(x_j - x_i), reweighted by ``values`` to be nonnegative.
    """
    c = values - np.einsum("ij,ij->i", gradients, points)
    # w_ij = u_j - u_i - T_i.(x_j - x_i)
    w = values[None, :] - c[:, None] - gradients @ points.T
    negative = float(w.min())
    if negative < -1e-9 * max(1.0, float(np.abs(values).max())):
        logger.warning(f"brenier_potential: gradient samples not cyclically monotone (gap {negative:.3e})")
    graph = csgraph_from_dense(np.maximum(w, 0.0), null_value=np.inf)
    outward = dijkstra(graph, indices=root)
    inward = dijkstra(graph.T.tocsr(), indices=root)
    return values + 0.5 * (inward - outward)


def brenier_potential(
    sol: TransportSolution,
    mu: Optional[DiscreteMeasure] = None,
    anchor: Optional[np.ndarray] = None,
    flatten: bool = False,
    window: Optional[ConvexBody] = None,
    potential: str = "duals",
) -> PotentialField:
    """
    u(x_i) = ½|x_i|² - phi_i with T(x_i) the barycentric projection of row i.

    Rows without mass are dropped. With ``anchor`` the field is shifted so that
    its envelope vanishes there; ``flatten`` also subtracts the supporting plane
    at the anchor so that grad u(anchor) = 0.

    ``potential="midrange"`` replaces the dual values by the midrange of all
    potentials consistent with the gradient samples. It does not depend on
    which optimal duals the solver returned, which matters when the coupling
    splits into blocks with no mass between them.
    """
    if potential not in POTENTIAL_KINDS:
        raise ValueError(f"unknown potential '{potential}'. Available: {', '.join(POTENTIAL_KINDS)}")
    mu = sol.source if mu is None else mu
    if len(mu) != sol.coupling.shape[0]:
        raise ValueError("measure does not match the solution's source")
    phi, _ = sol.half_sq_duals
    row_mass = np.asarray(sol.coupling.sum(axis=1)).ravel()
    keep = row_mass > 0
    if not keep.all():
        logger.warning(f"brenier_potential: dropping {int((~keep).sum())} empty rows")
    bary = (sol.coupling @ sol.target.points)[keep] / row_mass[keep][:, None]
    pts = mu.points[keep]
    values = 0.5 * (pts ** 2).sum(axis=1) - phi[keep]
    if potential == "midrange":
        root = 0
        if anchor is not None:
            dual_field = PotentialField(pts, values, bary)
            root = int(dual_field.support_index(np.asarray(anchor, dtype=float)[None, :])[0])
        values = _midrange_values(pts, values, bary, root)
    field_ = PotentialField(pts, values, bary, body=mu.body, window=window, spacing=mu.spacing,
                            meta={"epsilon": sol.epsilon, "convention": sol.cost_convention,
                                  "potential": potential})
    if anchor is not None:
        a = np.asarray(anchor, dtype=float)[None, :]
        k = field_.support_index(a)[0]
        slope = field_.gradients[k] if flatten else np.zeros(2)
        level = field_.support_value(a)[0] - float(slope @ a[0])
        field_ = field_.add_affine(-slope, -level)
        field_.meta["anchor"] = a[0].tolist()
    return field_


def legendre_transform(
    u: PotentialField,
    grid: Optional[np.ndarray] = None,
    body: Optional[ConvexBody] = None,
) -> PotentialField:
    """
    v(y_j) = max_i x_i . y_j - u_i on ``grid`` (default: the gradient samples).

    The maximizing node is the gradient of v at y_j.
    """
    y = u.gradients if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))
    values = np.empty(len(y))
    arg = np.empty(len(y), dtype=int)
    for s in range(0, len(y), _CHUNK):
        scores = y[s:s + _CHUNK] @ u.points.T - u.values
        arg[s:s + _CHUNK] = scores.argmax(axis=1)
        values[s:s + _CHUNK] = scores.max(axis=1)
    if grid is None:
        # duplicate gradient samples collapse to one node
        y, first = np.unique(y, axis=0, return_index=True)
        values, arg = values[first], arg[first]
    return PotentialField(y, values, u.points[arg], body=body, meta={"legendre_of": len(u)})


def fenchel_young_gap(u: PotentialField, v: PotentialField) -> float:
    """max |u(x_i) + v(T_i) - x_i . T_i| over u's matched pairs, v read by envelope."""
    vy = v.support_value(u.gradients)
    return float(np.abs(u.values + vy - np.einsum("ij,ij->i", u.points, u.gradients)).max())
