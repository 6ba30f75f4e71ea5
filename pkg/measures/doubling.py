"""
measures/doubling.py

Empirical doubling constant of a power density on ellipsoids, and the chain
inequality it implies on convex sets through John's containment.

Ellipsoids are sampled with log-uniform semi-axes in [1e-3 diam, diam], uniform
orientation and centers split evenly between a collar along the boundary and
the interior, so both ellipsoids inside the body and ellipsoids sticking out of
it are exercised. Each sample draws from its own child seed so results do not
depend on evaluation order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from geometry import (
    JOHN_FACTOR,
    ConvexBody,
    Ellipsoid,
    barycenter,
    boundary_points,
    contains_body,
    dilate,
)
from measures.density import PowerDensity
from measures.quadrature import integrate

logger = logging.getLogger("measures.doubling")

MIN_RADIUS_FRACTION = 1e-3
COLLAR_FRACTION = 0.05
ELLIPSE_RESOLUTION = 64
DOUBLING_TOL = 1e-4

# k such that f(S) <= D^k f(S/2) for convex S: ceil(log(n^{3/2}) / log 2) + 1 with n = 2
CHAIN_POWER = math.ceil(math.log(JOHN_FACTOR) / math.log(2.0)) + 1


@dataclass
class DoublingEstimate:
    constant: float
    worst: Optional[Ellipsoid]
    n_evaluated: int
    n_skipped: int
    n_inside: int
    n_crossing: int
    ratios: np.ndarray = field(repr=False)


@dataclass
class ChainCheck:
    power: int
    bound: float
    worst_ratio: float
    n_checked: int
    n_violations: int

    @property
    def holds(self) -> bool:
        return self.n_violations == 0


def sample_ellipsoid(body: ConvexBody, rng: np.random.Generator) -> Ellipsoid:
    """One ellipsoid centered in the closure of the body."""
    diam = body.diameter
    log_lo, log_hi = math.log(MIN_RADIUS_FRACTION * diam), math.log(diam)
    axes = np.exp(rng.uniform(log_lo, log_hi, size=2))
    rotation = rng.uniform(0.0, math.pi)
    if rng.random() < 0.5:
        p, inner = boundary_points(body, 1, phase=rng.random())
        center = p[0] + rng.uniform(0.0, COLLAR_FRACTION * diam) * inner[0]
        if not body.contains(center[None, :])[0]:
            center = p[0]
    else:
        xmin, ymin, xmax, ymax = body.bounds
        while True:
            center = rng.uniform((xmin, ymin), (xmax, ymax))
            if body.contains(center[None, :])[0]:
                break
    return Ellipsoid.from_axes(center, axes, rotation)


def doubling_ratio(
    f: PowerDensity,
    ellipsoid: Ellipsoid,
    tol: float = DOUBLING_TOL,
    resolution: int = ELLIPSE_RESOLUTION,
) -> Optional[float]:
    """f(E) / f(E/2) on polygonized ellipsoids; None when f(E/2) vanishes."""
    full = integrate(f, ellipsoid.to_body(resolution), tol=tol).mass
    half = integrate(f, ellipsoid.dilate(0.5).to_body(resolution), tol=tol).mass
    if not half > 0:
        return None
    return full / half


def doubling_constant(
    f: PowerDensity,
    n_samples: int,
    seed: int,
    tol: float = DOUBLING_TOL,
    resolution: int = ELLIPSE_RESOLUTION,
) -> DoublingEstimate:
    """Largest sampled f(E)/f(E/2); zero-mass half ellipsoids are skipped and counted."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    children = np.random.SeedSequence(seed).spawn(n_samples)
    ratios = []
    worst: Optional[Ellipsoid] = None
    best_ratio = -math.inf
    skipped = inside = crossing = 0
    for child in children:
        rng = np.random.default_rng(child)
        ell = sample_ellipsoid(f.body, rng)
        r = doubling_ratio(f, ell, tol, resolution)
        if r is None:
            skipped += 1
            continue
        if contains_body(f.body, ell.to_body(resolution)):
            inside += 1
        else:
            crossing += 1
        ratios.append(r)
        if r > best_ratio:
            best_ratio, worst = r, ell
    if skipped:
        logger.warning(f"doubling_constant: skipped {skipped}/{n_samples} zero-mass samples")
    if not ratios:
        raise RuntimeError("doubling_constant: every sampled ellipsoid had zero mass")
    logger.info(
        f"doubling_constant: alpha={f.alpha} max ratio {best_ratio:.4f} over {len(ratios)} "
        f"ellipsoids ({inside} inside, {crossing} crossing)"
    )
    return DoublingEstimate(
        constant=float(best_ratio), worst=worst, n_evaluated=len(ratios),
        n_skipped=skipped, n_inside=inside, n_crossing=crossing, ratios=np.asarray(ratios),
    )


def corollary_chain_check(
    f: PowerDensity,
    doubling: float,
    sets: Sequence[ConvexBody],
    tol: float = DOUBLING_TOL,
    slack: float = 1e-9,
) -> ChainCheck:
    """
    Check f(S) <= D^k f(S/2) for convex sets S with barycenter in the support.

    Sets whose barycenter falls outside the body are not counted.
    """
    bound = doubling ** CHAIN_POWER
    worst = 0.0
    checked = violations = 0
    for s in sets:
        half = dilate(s, 0.5)
        if not f.body.contains(barycenter(s)[None, :])[0]:
            continue
        num = integrate(f, s, tol=tol).mass
        den = integrate(f, half, tol=tol).mass
        if not den > 0:
            continue
        ratio = num / den
        checked += 1
        worst = max(worst, ratio)
        if ratio > bound * (1.0 + slack):
            violations += 1
    return ChainCheck(CHAIN_POWER, float(bound), float(worst), checked, violations)
