"""
geometry/bodies.py

Planar convex bodies stored as strictly convex CCW polygons.

Smooth kinds (ellipse, superellipse) keep their generating parameters and are
polygonalized at ``resolution`` vertices; every exact statement downstream
(areas, clipping, distances) is made relative to that polygon.

All bodies are immutable. Operations that can produce an empty set return
``None`` as the explicit empty marker.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

logger = logging.getLogger("geometry.bodies")

POLYGON = "polygon"
ELLIPSE = "ellipse"
SUPERELLIPSE = "superellipse"
KINDS = (POLYGON, ELLIPSE, SUPERELLIPSE)

DEFAULT_RESOLUTION = 512

# Clip results below this fraction of the parent area count as empty.
EMPTY_AREA_FRACTION = 1e-14

# Chunk size for (points x edges) distance tables.
_CHUNK = 4096


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _shoelace(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _clean_polygon(v: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Drop repeated and collinear vertices (clipping leaves both behind)."""
    if len(v) < 3:
        return v
    scale = max(float(np.ptp(v[:, 0])), float(np.ptp(v[:, 1])), 1e-300)
    keep = np.linalg.norm(v - np.roll(v, 1, axis=0), axis=1) > rel_tol * scale
    v = v[keep]
    changed = True
    while changed and len(v) >= 3:
        prev_e = v - np.roll(v, 1, axis=0)
        next_e = np.roll(v, -1, axis=0) - v
        cross = prev_e[:, 0] * next_e[:, 1] - prev_e[:, 1] * next_e[:, 0]
        keep = cross > rel_tol * scale * scale
        changed = not keep.all()
        v = v[keep]
    return v


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """A bounded planar convex body with nonempty interior."""

    kind: str
    vertices: np.ndarray
    center: Optional[np.ndarray] = None
    generator: Optional[np.ndarray] = None     # ellipse: image of the unit disk
    semi_axes: Optional[tuple[float, float]] = None
    exponent: Optional[float] = None           # superellipse only, p >= 2
    rotation: float = 0.0
    resolution: int = DEFAULT_RESOLUTION
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"Unknown body kind '{self.kind}'. Available: {KINDS}")
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("A body needs at least 3 vertices of shape (n, 2)")
        if not np.all(np.isfinite(v)):
            raise ValueError("Body vertices must be finite")
        edges = np.roll(v, -1, axis=0) - v
        nxt = np.roll(edges, -1, axis=0)
        cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
        if not np.all(cross > 0):
            raise ValueError("Polygon vertices must be strictly convex and counter-clockwise")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------

    @classmethod
    def polygon(cls, vertices: Sequence[Sequence[float]]) -> "ConvexBody":
        """Polygon from vertices already in strictly convex CCW order."""
        return cls(kind=POLYGON, vertices=np.asarray(vertices, dtype=float))

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]]) -> "ConvexBody":
        """Convex hull of a point cloud."""
        pts = np.asarray(points, dtype=float)
        try:
            hull = ConvexHull(pts)
        except QhullError as exc:
            raise ValueError(f"Degenerate point set, no 2D hull: {exc}") from None
        return cls(kind=POLYGON, vertices=_clean_polygon(pts[hull.vertices]))

    @classmethod
    def box(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> "ConvexBody":
        if not (xmax > xmin and ymax > ymin):
            raise ValueError(f"Empty box [{xmin},{xmax}]x[{ymin},{ymax}]")
        return cls.polygon([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]])

    @classmethod
    def ellipse(
        cls,
        center: Sequence[float] = (0.0, 0.0),
        semi_axes: Sequence[float] = (1.0, 1.0),
        rotation: float = 0.0,
        resolution: int = DEFAULT_RESOLUTION,
    ) -> "ConvexBody":
        a, b = (float(s) for s in semi_axes)
        if a <= 0 or b <= 0:
            raise ValueError("Ellipse semi-axes must be positive")
        if resolution < 8:
            raise ValueError("resolution must be at least 8")
        c = np.asarray(center, dtype=float)
        gen = _rotation(rotation) @ np.diag([a, b])
        theta = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
        verts = c + np.column_stack([np.cos(theta), np.sin(theta)]) @ gen.T
        return cls(kind=ELLIPSE, vertices=verts, center=c, generator=gen,
                   semi_axes=(a, b), rotation=float(rotation), resolution=resolution)

    @classmethod
    def disk(cls, center: Sequence[float] = (0.0, 0.0), radius: float = 1.0,
             resolution: int = DEFAULT_RESOLUTION) -> "ConvexBody":
        return cls.ellipse(center, (radius, radius), 0.0, resolution)

    @classmethod
    def superellipse(
        cls,
        center: Sequence[float] = (0.0, 0.0),
        semi_axes: Sequence[float] = (1.0, 1.0),
        exponent: float = 4.0,
        rotation: float = 0.0,
        resolution: int = DEFAULT_RESOLUTION,
    ) -> "ConvexBody":
        """|x/a|^p + |y/b|^p <= 1 with p >= 2, rotated about its center."""
        if exponent < 2:
            raise ValueError(f"superellipse exponent must be >= 2, got {exponent}")
        a, b = (float(s) for s in semi_axes)
        if a <= 0 or b <= 0:
            raise ValueError("Superellipse semi-axes must be positive")
        c = np.asarray(center, dtype=float)
        theta = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
        ct, st = np.cos(theta), np.sin(theta)
        local = np.column_stack([
            a * np.sign(ct) * np.abs(ct) ** (2.0 / exponent),
            b * np.sign(st) * np.abs(st) ** (2.0 / exponent),
        ])
        verts = c + _clean_polygon(local) @ _rotation(rotation).T
        return cls(kind=SUPERELLIPSE, vertices=verts, center=c, semi_axes=(a, b),
                   exponent=float(exponent), rotation=float(rotation),
                   resolution=resolution)

    # ------------------------------------------------------------------
    # halfplane representation  n_i . x <= b_i, n_i outward unit normals
    # ------------------------------------------------------------------

    @cached_property
    def normals(self) -> np.ndarray:
        e = np.roll(self.vertices, -1, axis=0) - self.vertices
        n = np.column_stack([e[:, 1], -e[:, 0]])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.normals, self.vertices)

    @cached_property
    def area(self) -> float:
        return _shoelace(self.vertices)

    @cached_property
    def perimeter(self) -> float:
        e = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.linalg.norm(e, axis=1).sum())

    @cached_property
    def diameter(self) -> float:
        v = self.vertices
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def support_gap(self, points: np.ndarray) -> np.ndarray:
        """max_i (n_i . x - b_i): negative inside, exact signed distance inside."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(len(pts))
        for s in range(0, len(pts), _CHUNK):
            chunk = pts[s:s + _CHUNK]
            out[s:s + _CHUNK] = (chunk @ self.normals.T - self.offsets).max(axis=1)
        return out

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return self.support_gap(points) <= tol

    def polygonalization_error(self, oversample: int = 8) -> float:
        """Hausdorff distance between the generating curve and the polygon."""
        if self.kind == POLYGON:
            return 0.0
        n = self.resolution * oversample
        theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        ct, st = np.cos(theta), np.sin(theta)
        if self.kind == ELLIPSE:
            curve = self.center + np.column_stack([ct, st]) @ self.generator.T
        else:
            a, b = self.semi_axes
            p = self.exponent
            local = np.column_stack([a * np.sign(ct) * np.abs(ct) ** (2.0 / p),
                                     b * np.sign(st) * np.abs(st) ** (2.0 / p)])
            curve = self.center + local @ _rotation(self.rotation).T
        gap = self.support_gap(curve)
        # curve points lie outside or on the inscribed polygon
        closest, _ = nearest_boundary(self, curve)
        return float(max(np.abs(gap).max(), np.linalg.norm(curve - closest, axis=1).max()))

    # ------------------------------------------------------------------
    # serialization (config literals)
    # ------------------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        if self.kind == POLYGON:
            return {"kind": POLYGON, "vertices": self.vertices.tolist()}
        d: dict[str, Any] = {
            "kind": self.kind,
            "center": self.center.tolist(),
            "semi_axes": list(self.semi_axes),
            "rotation": self.rotation,
            "resolution": self.resolution,
        }
        if self.kind == SUPERELLIPSE:
            d["exponent"] = self.exponent
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ConvexBody":
        kind = d.get("kind", POLYGON)
        if kind == POLYGON:
            return cls.polygon(d["vertices"])
        if kind == ELLIPSE:
            return cls.ellipse(d.get("center", (0.0, 0.0)), d["semi_axes"],
                               d.get("rotation", 0.0), d.get("resolution", DEFAULT_RESOLUTION))
        if kind == SUPERELLIPSE:
            return cls.superellipse(d.get("center", (0.0, 0.0)), d["semi_axes"],
                                    d.get("exponent", 4.0), d.get("rotation", 0.0),
                                    d.get("resolution", DEFAULT_RESOLUTION))
        raise ValueError(f"Unknown body kind '{kind}'")

    def __repr__(self) -> str:
        return f"ConvexBody(kind={self.kind}, n_vertices={len(self.vertices)}, area={self.area:.6g})"


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def barycenter(body: ConvexBody) -> np.ndarray:
    """Area centroid of the body's polygon."""
    v = body.vertices
    w = np.roll(v, -1, axis=0)
    cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
    a = 0.5 * cross.sum()
    if not abs(a) > 0:
        raise ValueError("Degenerate body: zero area has no barycenter")
    cx = ((v[:, 0] + w[:, 0]) * cross).sum() / (6.0 * a)
    cy = ((v[:, 1] + w[:, 1]) * cross).sum() / (6.0 * a)
    return np.array([cx, cy])


def boundary_distance(body: ConvexBody, x: np.ndarray) -> np.ndarray | float:
    """
    Distance to the boundary for interior points, 0 on and outside the body.

    Accepts a single point (returns float) or an array of shape (n, 2).
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    d = np.maximum(-body.support_gap(np.atleast_2d(pts)), 0.0)
    return float(d[0]) if single else d


def nearest_boundary(body: ConvexBody, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closest boundary point and the outward normal of the edge it lies on."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = body.vertices
    e = np.roll(a, -1, axis=0) - a
    ee = np.einsum("ij,ij->i", e, e)
    closest = np.empty_like(pts)
    normals = np.empty_like(pts)
    for s in range(0, len(pts), _CHUNK):
        p = pts[s:s + _CHUNK]
        rel = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("pij,ij->pi", rel, e) / ee, 0.0, 1.0)
        proj = a[None, :, :] + t[..., None] * e[None, :, :]
        dist = ((p[:, None, :] - proj) ** 2).sum(-1)
        k = dist.argmin(axis=1)
        closest[s:s + _CHUNK] = proj[np.arange(len(p)), k]
        normals[s:s + _CHUNK] = body.normals[k]
    return closest, normals


def boundary_points(body: ConvexBody, n: int, phase: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """n points equally spaced in arclength with their inner unit normals."""
    v = body.vertices
    e = np.roll(v, -1, axis=0) - v
    lengths = np.linalg.norm(e, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    s = (np.arange(n) + phase) / n * cum[-1]
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(v) - 1)
    t = (s - cum[k]) / lengths[k]
    pts = v[k] + t[:, None] * e[k]
    return pts, -body.normals[k]


def clip_halfplane(body: ConvexBody, normal: Sequence[float], offset: float) -> Optional[ConvexBody]:
    """
    Intersection of the body with {x : x . normal <= offset}.

    Returns the body itself when it lies in the halfplane and ``None`` when the
    intersection is empty (or below EMPTY_AREA_FRACTION of the body's area).
    """
    n = np.asarray(normal, dtype=float)
    vals = body.vertices @ n - offset
    if np.all(vals <= 0):
        return body
    if np.all(vals >= 0):
        return None
    clipped = _clip_vertices(body.vertices, n, float(offset))
    clipped = _clean_polygon(clipped)
    if len(clipped) < 3 or _shoelace(clipped) < EMPTY_AREA_FRACTION * body.area:
        return None
    return ConvexBody(kind=POLYGON, vertices=clipped)


def _clip_vertices(v: np.ndarray, n: np.ndarray, offset: float) -> np.ndarray:
    """One Sutherland-Hodgman pass against a single halfplane."""
    out = []
    vals = v @ n - offset
    m = len(v)
    for i in range(m):
        j = (i + 1) % m
        pi, pj, si, sj = v[i], v[j], vals[i], vals[j]
        if si <= 0:
            out.append(pi)
        if (si < 0 < sj) or (sj < 0 < si):
            t = si / (si - sj)
            out.append(pi + t * (pj - pi))
    return np.asarray(out) if out else np.empty((0, 2))


def clip_box(body: ConvexBody, x0: float, y0: float, hx: float, hy: float,
             active: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Vertices of the box [x0, x0+hx] x [y0, y0+hy] clipped to the body.

    ``active`` restricts clipping to a subset of the body's edges (the ones that
    can cut the box). Returns an empty array for an empty intersection.
    """
    v = np.array([[x0, y0], [x0 + hx, y0], [x0 + hx, y0 + hy], [x0, y0 + hy]])
    idx = range(len(body.normals)) if active is None else np.flatnonzero(active)
    for i in idx:
        v = _clip_vertices(v, body.normals[i], body.offsets[i])
        if len(v) < 3:
            return np.empty((0, 2))
    return v


def polygon_area_centroid(v: np.ndarray) -> tuple[float, np.ndarray]:
    """Area and centroid of a CCW vertex array (zero area -> vertex mean)."""
    if len(v) < 3:
        return 0.0, (v.mean(axis=0) if len(v) else np.zeros(2))
    w = np.roll(v, -1, axis=0)
    cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
    a = 0.5 * cross.sum()
    if a <= 0:
        return 0.0, v.mean(axis=0)
    c = np.array([((v[:, 0] + w[:, 0]) * cross).sum(), ((v[:, 1] + w[:, 1]) * cross).sum()]) / (6.0 * a)
    return float(a), c


def intersect(body: ConvexBody, other: ConvexBody) -> Optional[ConvexBody]:
    """Intersection of two convex bodies, ``None`` when empty."""
    if np.all(other.contains(body.vertices, tol=1e-14)):
        return body
    if np.all(body.contains(other.vertices, tol=1e-14)):
        return other
    current: Optional[ConvexBody] = body
    for n, b in zip(other.normals, other.offsets):
        current = clip_halfplane(current, n, b)
        if current is None:
            return None
    return current


def dilate(body: ConvexBody, r: float, about: Optional[np.ndarray] = None) -> ConvexBody:
    """r*S: dilation by r about ``about`` (default: the barycenter)."""
    if r <= 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    c = barycenter(body) if about is None else np.asarray(about, dtype=float)
    return ConvexBody(kind=POLYGON, vertices=c + r * (body.vertices - c))


def affine_image(body: ConvexBody, matrix: np.ndarray, shift: Sequence[float] = (0.0, 0.0)) -> ConvexBody:
    """Image of the body under x -> A x + b (orientation restored if det A < 0)."""
    A = np.asarray(matrix, dtype=float)
    det = float(np.linalg.det(A))
    if abs(det) == 0:
        raise ValueError("Affine map must be invertible")
    v = body.vertices @ A.T + np.asarray(shift, dtype=float)
    if det < 0:
        v = v[::-1]
    return ConvexBody(kind=POLYGON, vertices=v)


def contains_body(outer: ConvexBody, inner: ConvexBody, tol: float = 1e-12) -> bool:
    scale = max(outer.diameter, 1e-300)
    return bool(np.all(outer.contains(inner.vertices, tol=tol * scale)))


def random_convex_polygon(rng: np.random.Generator, n_vertices: int = 7,
                          center: Sequence[float] = (0.0, 0.0), radius: float = 1.0) -> ConvexBody:
    """Hull of n points at random angles and radii in [radius/2, radius]."""
    while True:
        theta = np.sort(rng.uniform(0.0, 2.0 * np.pi, n_vertices))
        r = rng.uniform(0.5 * radius, radius, n_vertices)
        pts = np.asarray(center, dtype=float) + np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        try:
            body = ConvexBody.from_points(pts)
        except ValueError:
            continue
        if len(body.vertices) >= 3:
            return body
