"""
analysis/suite.py

Measured constants of the section geometry for a Legendre pair (u, v):
engulfing, the Aleksandrov-type decay near the section boundary, volume
products, the dual-section inclusion and centered versus classical sections.
Every quantity is reported; none is compared against a fixed constant here.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from analysis.sections import SectionError, extract_section, section_mask
from geometry import (
    ConvexBody,
    JohnEllipsoidError,
    affine_image,
    boundary_distance,
    contains_body,
    dilate,
    john_ellipsoid,
)
from transport2d import PotentialField

logger = logging.getLogger("analysis.suite")

DYADIC_STEPS = 10
ENGULF_DILATION = 2.0
ENGULF_TEST_POINTS = 8


@dataclass
class SectionPropertyRecord:
    probe: tuple[float, float]
    h: float
    truncated: bool = False
    t0: Optional[float] = None
    amp_constant: Optional[float] = None
    volume_product: Optional[float] = None
    duality_c: Optional[float] = None
    centered_c: Optional[float] = None


@dataclass
class SectionPropertyReport:
    records: list[SectionPropertyRecord] = field(default_factory=list)

    def _values(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.records
                if not r.truncated and getattr(r, name) is not None]

    @property
    def min_t0(self) -> Optional[float]:
        vals = self._values("t0")
        return min(vals) if vals else None

    @property
    def max_amp_constant(self) -> Optional[float]:
        vals = self._values("amp_constant")
        return max(vals) if vals else None

    @property
    def volume_range(self) -> Optional[tuple[float, float]]:
        vals = self._values("volume_product")
        return (min(vals), max(vals)) if vals else None

    @property
    def volume_r(self) -> Optional[float]:
        """Largest r with every volume product in [r², r^-2]."""
        rng = self.volume_range
        if rng is None:
            return None
        return math.sqrt(min(rng[0], 1.0 / rng[1], 1.0))

    @property
    def min_duality_c(self) -> Optional[float]:
        vals = self._values("duality_c")
        return min(vals) if vals else None

    @property
    def min_centered_c(self) -> Optional[float]:
        vals = self._values("centered_c")
        return min(vals) if vals else None

    def summary(self) -> dict[str, Any]:
        return {
            "n_records": len(self.records),
            "n_truncated": sum(r.truncated for r in self.records),
            "min_t0": self.min_t0,
            "max_amp_constant": self.max_amp_constant,
            "volume_range": self.volume_range,
            "volume_r": self.volume_r,
            "min_duality_c": self.min_duality_c,
            "min_centered_c": self.min_centered_c,
        }

    def to_dict(self) -> dict[str, Any]:
        return {"summary": self.summary(), "records": [asdict(r) for r in self.records]}


def _dyadic() -> list[float]:
    return [2.0 ** (-k) for k in range(DYADIC_STEPS + 1)]


def _node_section(u: PotentialField, x: np.ndarray, h: float) -> tuple[np.ndarray, Optional[ConvexBody]]:
    mask = section_mask(u, x, u.gradient(x)[0], h)
    if mask.sum() < 3:
        return mask, None
    try:
        return mask, ConvexBody.from_points(u.points[mask])
    except ValueError:
        return mask, None


def _centered_section(u: PotentialField, x: np.ndarray, h: float) -> Optional[ConvexBody]:
    try:
        stats = extract_section(u, x, h=h, centered=True)
    except SectionError:
        return None
    return None if stats.truncated else stats.polygon


def _engulfing_t0(u: PotentialField, x: np.ndarray, h: float) -> Optional[float]:
    """Largest dyadic t with S^c_{th}(z) inside 2 S^c_h(x) for test points z of S^c_h(x)."""
    S = _centered_section(u, x, h)
    if S is None:
        return None
    outer = dilate(S, ENGULF_DILATION, about=x)
    step = max(1, len(S.vertices) // ENGULF_TEST_POINTS)
    zs = x + 0.5 * (S.vertices[::step] - x)
    tol = u.spacing / max(outer.diameter, 1e-300)
    for t in _dyadic():
        ok = True
        for z in zs:
            Sz = _centered_section(u, z, t * h)
            if Sz is None or not contains_body(outer, Sz, tol=tol):
                ok = False
                break
        if ok:
            return t
    return None


def _amp_constant(u: PotentialField, x: np.ndarray, h: float, mask: np.ndarray, S: ConvexBody) -> Optional[float]:
    """max |u - l - h| / (h d^(1/2)) on the John-normalized section, d the normalized boundary distance."""
    try:
        E = john_ellipsoid(S)
    except (JohnEllipsoidError, ValueError):
        return None
    inv, shift = E.normalizing_map()
    normalized = affine_image(S, inv, shift)
    pts = u.points[mask]
    d = boundary_distance(normalized, pts @ inv.T + shift)
    depth = np.abs(u.values[mask] - float(u.evaluate(x)[0]) - (pts - x) @ u.gradient(x)[0] - h) / h
    inside = d > 0
    if not inside.any():
        return None
    return float((depth[inside] / np.sqrt(d[inside])).max())


def _gradient_image(u: PotentialField, mask: np.ndarray) -> Optional[ConvexBody]:
    try:
        return ConvexBody.from_points(u.gradients[mask])
    except ValueError:
        return None


def _duality_c(u: PotentialField, v: PotentialField, x: np.ndarray, h: float,
               image: ConvexBody) -> Optional[float]:
    """Largest dyadic c with S_{ch}(v, grad u(x)) inside grad u(S_h(u, x))."""
    y = u.gradient(x)[0]
    tol = v.spacing / max(image.diameter, 1e-300)
    for c in _dyadic():
        mask = section_mask(v, y, x, c * h)
        if mask.sum() == 0:
            continue
        if np.all(image.contains(v.points[mask], tol=tol * image.diameter)):
            return c
    return None


def _centered_c(u: PotentialField, x: np.ndarray, h: float, S: ConvexBody) -> Optional[float]:
    """Largest dyadic c with the centered section at height ch inside S_h(x)."""
    tol = u.spacing
    for c in _dyadic():
        try:
            stats = extract_section(u, x, h=c * h, centered=True)
        except SectionError:
            continue
        if stats.polygon is not None and contains_body(S, stats.polygon, tol=tol / max(S.diameter, 1e-300)):
            return c
    return None


def section_property_suite(
    u: PotentialField,
    v: PotentialField,
    probes: Sequence[Sequence[float]],
    heights: Sequence[float],
    centered: bool = True,
) -> SectionPropertyReport:
    """
    Section properties of u (and its transform v) at each probe and height.

    Sections reaching the edge of u's sampling window are recorded as truncated
    and carry no measurements.
    """
    report = SectionPropertyReport()
    for probe in probes:
        x = np.asarray(probe, dtype=float)
        for h in heights:
            rec = SectionPropertyRecord((float(x[0]), float(x[1])), float(h))
            report.records.append(rec)
            stats = extract_section(u, x, h=h)
            mask, S = _node_section(u, x, h)
            if stats.truncated or S is None:
                rec.truncated = True
                continue
            rec.t0 = _engulfing_t0(u, x, h)
            rec.amp_constant = _amp_constant(u, x, h, mask, S)
            image = _gradient_image(u, mask)
            if image is not None:
                rec.volume_product = S.area * image.area / h ** 2
                rec.duality_c = _duality_c(u, v, x, h, image)
            if centered:
                rec.centered_c = _centered_c(u, x, h, S)
    logger.info(f"section_property_suite: {len(report.records)} records, summary {report.summary()}")
    return report
