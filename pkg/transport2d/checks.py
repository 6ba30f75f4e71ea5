"""
transport2d/checks.py

Certificates for discrete transport solutions: marginals, duality gap,
cyclical monotonicity of the support and push-forward mass balance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from geometry import ConvexBody, boundary_distance
from transport2d.discrete import DiscreteMeasure
from transport2d.solvers import TransportSolution, cost_matrix

logger = logging.getLogger("transport2d.checks")

_CHUNK = 1024


def marginal_violation(sol: TransportSolution) -> tuple[float, float]:
    """L1 distances of the coupling's row and column sums to the marginals."""
    rows = np.asarray(sol.coupling.sum(axis=1)).ravel()
    cols = np.asarray(sol.coupling.sum(axis=0)).ravel()
    return (float(np.abs(rows - sol.source.weights).sum()),
            float(np.abs(cols - sol.target.weights).sum()))


def dual_feasibility(sol: TransportSolution) -> float:
    """max_ij phi_i + psi_j - c_ij (<= 0 for feasible duals)."""
    worst = -np.inf
    y = sol.target.points
    for s in range(0, len(sol.phi), _CHUNK):
        C = cost_matrix(sol.source.points[s:s + _CHUNK], y, sol.cost_convention)
        worst = max(worst, float((sol.phi[s:s + _CHUNK, None] + sol.psi[None, :] - C).max()))
    return worst


def duality_gap(sol: TransportSolution) -> float:
    """Primal cost minus dual value; zero at optimality for exact solutions."""
    return sol.cost - sol.dual_value()


def _support_pairs(sol: TransportSolution) -> tuple[np.ndarray, np.ndarray]:
    coo = sol.coupling.tocoo()
    return sol.source.points[coo.row], sol.target.points[coo.col]


def cyclical_monotonicity_violation(
    sol: TransportSolution,
    n_triples: int = 10000,
    seed: int = 0,
) -> float:
    """
    Largest cost decrease obtainable by permuting targets along a 2- or 3-cycle
    of support pairs (0 for a cyclically monotone support).

    2-cycles are checked exhaustively, 3-cycles on ``n_triples`` random triples.
    """
    x, y = _support_pairs(sol)
    n = len(x)
    worst = 0.0
    # 2-cycles: c(x1,y1) + c(x2,y2) - c(x1,y2) - c(x2,y1) = -(x1 - x2).(y1 - y2) for ½|x-y|²
    for s in range(0, n, _CHUNK):
        dx = x[s:s + _CHUNK, None, :] - x[None, :, :]
        dy = y[s:s + _CHUNK, None, :] - y[None, :, :]
        worst = max(worst, float(-(dx * dy).sum(axis=-1).max()))
    if n >= 3 and n_triples > 0:
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, n, size=(n_triples, 3))
        a, b, c = idx[:, 0], idx[:, 1], idx[:, 2]

        def dot(i, j):
            return np.einsum("ij,ij->i", x[i], y[j])

        base = dot(a, a) + dot(b, b) + dot(c, c)
        forward = dot(a, b) + dot(b, c) + dot(c, a)
        backward = dot(a, c) + dot(b, a) + dot(c, b)
        worst = max(worst, float((forward - base).max()), float((backward - base).max()))
    if sol.cost_convention == "sq":
        worst *= 2.0
    return max(worst, 0.0)


@dataclass(frozen=True)
class PushforwardReport:
    """
    Image-mass discrepancy of the worst test set against its own bound.

    ``band_atoms`` counts the source atoms within one spacing of the part of
    ∂B inside the source body; only target atoms fed from both sides of that
    cut can be misassigned by a map-like coupling.
    """

    discrepancy: float
    granularity: float
    band_atoms: int
    violation: float
    row_discrepancy: float
    n_sets: int

    @property
    def bound(self) -> float:
        return self.granularity * (1.0 + 0.5 * self.band_atoms) + self.violation

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.bound


def _cut_band(mu: DiscreteMeasure, B: ConvexBody, spacing: float) -> int:
    near_cut = np.abs(B.support_gap(mu.points)) <= spacing
    if mu.body is not None:
        near_cut &= boundary_distance(mu.body, mu.points) > spacing
    return int(near_cut.sum())


def pushforward_check(sol: TransportSolution, test_sets: Sequence[ConvexBody]) -> PushforwardReport:
    """
    Worst |mu(B) - nu(image of B)| over test sets B.

    A target atom is in the image of B when it receives at least half of its
    mass from atoms in B. Each set is held to granularity * (1 + band/2) plus
    the marginal violations; the set with the least slack is reported. The
    row-side |mu(B) - pi(B x Y)| is kept as ``row_discrepancy``.
    """
    if not test_sets:
        raise ValueError("pushforward_check needs at least one test set")
    mu, nu = sol.source, sol.target
    coupling = sol.coupling.tocsr()
    row_mass = np.asarray(coupling.sum(axis=1)).ravel()
    col_mass = np.asarray(coupling.sum(axis=0)).ravel()
    rows_err, cols_err = marginal_violation(sol)
    granularity = max(mu.granularity, nu.granularity)
    spacing = mu.spacing if mu.spacing is not None else math.sqrt(_bbox_area(mu.points) / len(mu))

    worst: Optional[PushforwardReport] = None
    worst_rows = 0.0
    for B in test_sets:
        inside = B.contains(mu.points, tol=1e-12)
        mass_b = float(mu.weights[inside].sum())
        worst_rows = max(worst_rows, abs(mass_b - float(row_mass[inside].sum())))
        from_b = np.asarray(coupling[inside.nonzero()[0], :].sum(axis=0)).ravel()
        image = from_b >= 0.5 * col_mass
        image &= col_mass > 0
        report = PushforwardReport(abs(mass_b - float(nu.weights[image].sum())), granularity,
                                   _cut_band(mu, B, spacing), rows_err + cols_err, 0.0, len(test_sets))
        if worst is None or report.bound - report.discrepancy < worst.bound - worst.discrepancy:
            worst = report
    if not worst.passed:
        logger.info(f"pushforward_check: image discrepancy {worst.discrepancy:.3e} "
                    f"above bound {worst.bound:.3e} ({worst.band_atoms} atoms along the cut)")
    return replace(worst, row_discrepancy=worst_rows)


def _bbox_area(points: np.ndarray) -> float:
    lo, hi = points.min(axis=0), points.max(axis=0)
    return max(float(np.prod(hi - lo)), 1e-300)
