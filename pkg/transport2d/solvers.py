"""
transport2d/solvers.py

Discrete optimal transport between atomic measures for the quadratic cost.

- ``solve_lp``: exact network simplex (POT ``ot.emd``) with optimal duals.
- ``solve_entropic``: log-domain Sinkhorn with epsilon scaling, finished by a
  hard c-transform so the returned duals are feasible for the unregularized
  problem.

Internally the cost is ½|x - y|² so that the optimal map is the gradient of
u = ½|x|² - phi; the ``sq`` convention (|x - y|²) only rescales the duals.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import ot
from scipy import sparse
from scipy.special import logsumexp

from transport2d.discrete import DiscreteMeasure

logger = logging.getLogger("transport2d.solvers")

HALF_SQ = "half_sq"
SQ = "sq"
CONVENTIONS = (HALF_SQ, SQ)

DEFAULT_LP_CAP = 2000
LP_MAX_ITER = 10_000_000
ENTROPIC_TOL = 1e-8
MIN_EPS_RATIO = 1e-4
VIOLATION_FLOOR = 1e-11
DROP_TOL = 1e-15


class LPCapExceeded(ValueError):
    """Instance too large for the exact solver."""


class SinkhornConvergenceError(RuntimeError):
    def __init__(self, message: str, violation: float, epsilon: float, history: list[float]):
        super().__init__(message)
        self.violation = violation
        self.epsilon = epsilon
        self.history = history


def cost_matrix(x: np.ndarray, y: np.ndarray, convention: str = HALF_SQ) -> np.ndarray:
    if convention not in CONVENTIONS:
        raise ValueError(f"Unknown cost convention '{convention}'. Available: {CONVENTIONS}")
    M = ot.dist(x, y, metric="sqeuclidean")
    return 0.5 * M if convention == HALF_SQ else M


@dataclass(eq=False)
class TransportSolution:
    source: DiscreteMeasure
    target: DiscreteMeasure
    coupling: sparse.csr_matrix
    phi: np.ndarray
    psi: np.ndarray
    cost_convention: str = HALF_SQ
    epsilon: float = 0.0
    violation_history: list[float] = field(default_factory=list)
    stage_costs: list[float] = field(default_factory=list)
    iterations: int = 0

    @property
    def cost(self) -> float:
        """<pi, c> under the solution's cost convention."""
        coo = self.coupling.tocoo()
        d = self.source.points[coo.row] - self.target.points[coo.col]
        c = (d ** 2).sum(axis=1)
        if self.cost_convention == HALF_SQ:
            c = 0.5 * c
        return float(coo.data @ c)

    @property
    def half_sq_duals(self) -> tuple[np.ndarray, np.ndarray]:
        """Duals rescaled to the ½|x - y|² convention."""
        if self.cost_convention == SQ:
            return 0.5 * self.phi, 0.5 * self.psi
        return self.phi, self.psi

    @property
    def is_exact(self) -> bool:
        return self.epsilon == 0.0

    def dual_value(self) -> float:
        return float(self.source.weights @ self.phi + self.target.weights @ self.psi)


def _check_sizes(mu: DiscreteMeasure, nu: DiscreteMeasure, cap: int) -> None:
    if max(len(mu), len(nu)) > cap:
        raise LPCapExceeded(
            f"LP cap is {cap} atoms per side, got {len(mu)} x {len(nu)}; use solve_entropic"
        )


def solve_lp(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    cap: int = DEFAULT_LP_CAP,
    convention: str = HALF_SQ,
) -> TransportSolution:
    """Exact optimal coupling and duals (complementary slackness on the support)."""
    _check_sizes(mu, nu, cap)
    M = cost_matrix(mu.points, nu.points, convention)
    G, log = ot.emd(np.asarray(mu.weights), np.asarray(nu.weights), M,
                    numItermax=LP_MAX_ITER, log=True)
    if log.get("warning"):
        raise RuntimeError(f"network simplex did not reach optimality: {log['warning']}")
    coupling = sparse.csr_matrix(np.where(G > 0, G, 0.0))
    sol = TransportSolution(
        source=mu, target=nu, coupling=coupling,
        phi=np.asarray(log["u"], dtype=float), psi=np.asarray(log["v"], dtype=float),
        cost_convention=convention, epsilon=0.0,
    )
    logger.info(f"solve_lp: {len(mu)}x{len(nu)} cost {float(log['cost']):.10g}, support {coupling.nnz}")
    return sol


def default_schedule(mu: DiscreteMeasure, nu: DiscreteMeasure, final_ratio: float = MIN_EPS_RATIO,
                     factor: float = 0.5) -> list[float]:
    """Geometric schedule from diam² down to final_ratio * diam²."""
    d2 = _joint_diameter(mu, nu) ** 2
    n = int(math.ceil(math.log(final_ratio) / math.log(factor)))
    sched = [d2 * factor ** k for k in range(n)] + [d2 * final_ratio]
    return sorted(set(sched), reverse=True)


def _joint_diameter(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    pts = np.vstack([mu.points, nu.points])
    return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


def _row_update(g: np.ndarray, C: np.ndarray, log_b: np.ndarray, eps: float) -> np.ndarray:
    return -eps * logsumexp(log_b[None, :] + (g[None, :] - C) / eps, axis=1)


def _col_update(f: np.ndarray, C: np.ndarray, log_a: np.ndarray, eps: float) -> np.ndarray:
    return -eps * logsumexp(log_a[:, None] + (f[:, None] - C) / eps, axis=0)


def solve_entropic(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    eps_schedule: Optional[Sequence[float]] = None,
    max_iter: int = 20000,
    tol: float = ENTROPIC_TOL,
    convention: str = HALF_SQ,
) -> TransportSolution:
    """
    Log-domain Sinkhorn along a decreasing epsilon schedule.

    Each stage stops once the column-marginal L1 violation drops below both the
    tolerance and the previous stage's final violation, so the recorded
    violations are nonincreasing. Raises SinkhornConvergenceError when a stage
    exhausts ``max_iter``.
    """
    schedule = list(eps_schedule) if eps_schedule is not None else default_schedule(mu, nu)
    if not schedule or any(e <= 0 for e in schedule):
        raise ValueError("eps_schedule must be a nonempty sequence of positive numbers")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("eps_schedule must be strictly decreasing")
    floor = MIN_EPS_RATIO * _joint_diameter(mu, nu) ** 2
    if schedule[-1] < floor * (1.0 - 1e-12):
        raise ValueError(f"final epsilon {schedule[-1]:.3e} below 1e-4 * diam^2 = {floor:.3e}")

    C = cost_matrix(mu.points, nu.points, convention)
    a, b = np.asarray(mu.weights), np.asarray(nu.weights)
    log_a, log_b = np.log(a), np.log(b)
    f = np.zeros(len(a))
    g = np.zeros(len(b))
    history: list[float] = []
    stage_costs: list[float] = []
    total_iter = 0

    for stage, eps in enumerate(schedule):
        target = tol if not history else max(min(tol, history[-1]), VIOLATION_FLOOR)
        f = _row_update(g, C, log_b, eps)
        violation = math.inf
        for it in range(max_iter):
            g_next = _col_update(f, C, log_a, eps)
            violation = float(b @ np.abs(np.expm1((g - g_next) / eps)))
            if violation <= target:
                break
            g = g_next
            f = _row_update(g, C, log_b, eps)
        else:
            raise SinkhornConvergenceError(
                f"Sinkhorn stage {stage} (eps={eps:.3e}) stalled at violation {violation:.3e}",
                violation=violation, epsilon=eps, history=history,
            )
        total_iter += it + 1
        history.append(violation)
        plan = np.exp(log_a[:, None] + log_b[None, :] + (f[:, None] + g[None, :] - C) / eps)
        stage_costs.append(float((plan * C).sum()))
        logger.debug(f"solve_entropic: stage {stage} eps={eps:.3e} iters={it + 1} violation={violation:.2e}")

    plan[plan < DROP_TOL * plan.max()] = 0.0
    # hard c-transform pair: feasible for the unregularized dual
    phi = (C - g[None, :]).min(axis=1)
    psi = (C - phi[:, None]).min(axis=0)
    sol = TransportSolution(
        source=mu, target=nu, coupling=sparse.csr_matrix(plan), phi=phi, psi=psi,
        cost_convention=convention, epsilon=float(schedule[-1]),
        violation_history=history, stage_costs=stage_costs, iterations=total_iter,
    )
    logger.info(
        f"solve_entropic: {len(mu)}x{len(nu)} eps={schedule[-1]:.3e} cost {sol.cost:.10g} "
        f"violation {history[-1]:.2e} in {total_iter} iterations"
    )
    return sol
