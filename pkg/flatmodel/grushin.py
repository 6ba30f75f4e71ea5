"""
flatmodel/grushin.py

The linearized flat operator

    L w = γ^(β/(1+β)) xn^(γ-1) w_11 + w_nn + βγ w_n / xn

on the rectangle [-a, a] x [0, b] with Dirichlet data on the top and sides and
the Neumann condition w_n = 0 on {xn = 0}, plus its polynomial kernel.

The discrete system is a five-point scheme on the node grid x1_i = -a + i hx,
xn_j = j hy. The bottom row is eliminated with the ghost relation w_0 = w_1,
which turns the first interior row into (1 + βγ/2)(w_2 - w_1)/hy² in the normal
direction. Further rows use the centered drift while βγ/(2j) <= 1 and the
forward difference otherwise, so the matrix of -L is an M-matrix.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from flatmodel.profile import ModelProfile

logger = logging.getLogger("flatmodel.grushin")

BoundaryData = Callable[[np.ndarray, np.ndarray], np.ndarray]


class GrushinConvergenceError(RuntimeError):
    def __init__(self, message: str, residual_history: list[float]):
        super().__init__(message)
        self.residual_history = residual_history


@dataclass(frozen=True)
class KernelPolynomial:
    """w = p' x1 + ½ p11 x1² + C_γ p_n xn^(1+γ) with p_n = -p11/(1+β)."""

    p11: float
    p_prime: float
    profile: ModelProfile

    @property
    def p_n(self) -> float:
        return -self.p11 / (1.0 + self.profile.beta)

    @property
    def c_gamma(self) -> float:
        return self.profile.c_u

    def __call__(self, x1: np.ndarray, xn: np.ndarray) -> np.ndarray:
        g = self.profile.gamma
        x1 = np.asarray(x1, dtype=float)
        xn = np.asarray(xn, dtype=float)
        return self.p_prime * x1 + 0.5 * self.p11 * x1 ** 2 + self.c_gamma * self.p_n * xn ** (1.0 + g)

    def normal_derivative(self, x1: np.ndarray, xn: np.ndarray) -> np.ndarray:
        g = self.profile.gamma
        return self.c_gamma * self.p_n * (1.0 + g) * np.asarray(xn, dtype=float) ** g + 0.0 * np.asarray(x1)


def kernel_polynomial(p11: float, p_prime: float, P: ModelProfile) -> KernelPolynomial:
    return KernelPolynomial(float(p11), float(p_prime), P)


@dataclass(frozen=True)
class GrushinProblem:
    alpha: float
    beta: float
    half_width: float = 1.0
    height: float = 1.0
    nx: int = 64
    ny: int = 64
    dirichlet: Optional[BoundaryData] = None

    def __post_init__(self) -> None:
        ModelProfile(self.alpha, self.beta)
        if self.half_width <= 0 or self.height <= 0:
            raise ValueError("rectangle dimensions must be positive")
        if self.nx < 2 or self.ny < 3:
            raise ValueError(f"grid too coarse: nx={self.nx}, ny={self.ny}")

    @property
    def profile(self) -> ModelProfile:
        return ModelProfile(self.alpha, self.beta)

    @property
    def hx(self) -> float:
        return 2.0 * self.half_width / self.nx

    @property
    def hy(self) -> float:
        return self.height / self.ny

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates X1, XN of shape (ny + 1, nx + 1), indexed [j, i]."""
        x1 = -self.half_width + self.hx * np.arange(self.nx + 1)
        xn = self.hy * np.arange(self.ny + 1)
        return np.meshgrid(x1, xn)

    def refined(self, factor: int = 2) -> "GrushinProblem":
        return GrushinProblem(self.alpha, self.beta, self.half_width, self.height,
                              self.nx * factor, self.ny * factor, self.dirichlet)


@dataclass
class GrushinSolution:
    problem: GrushinProblem
    w: np.ndarray
    residual: float
    residual_history: list[float] = field(default_factory=list)
    iterations: int = 0

    def error_against(self, exact: BoundaryData) -> float:
        X1, XN = self.problem.grid()
        return float(np.abs(self.w - exact(X1, XN)).max())


def grushin_apply(w: np.ndarray, problem: GrushinProblem) -> np.ndarray:
    """
    L w at interior nodes (j = 1..ny-1, i = 1..nx-1) of a full node array.

    Centered differences throughout, except w_n on the first interior row which
    uses the one-sided stencil (-3 w_1 + 4 w_2 - w_3) / (2 hy).
    """
    w = np.asarray(w, dtype=float)
    ny, nx = problem.ny, problem.nx
    if w.shape != (ny + 1, nx + 1):
        raise ValueError(f"field must have shape {(ny + 1, nx + 1)}, got {w.shape}")
    P = problem.profile
    g, bg = P.gamma, P.beta * P.gamma
    hx, hy = problem.hx, problem.hy
    xn = hy * np.arange(1, ny)[:, None]
    c = w[1:-1, 1:-1]
    w11 = (w[1:-1, 2:] - 2.0 * c + w[1:-1, :-2]) / hx ** 2
    wnn = (w[2:, 1:-1] - 2.0 * c + w[:-2, 1:-1]) / hy ** 2
    wn = (w[2:, 1:-1] - w[:-2, 1:-1]) / (2.0 * hy)
    if ny >= 4:
        wn[0] = (-3.0 * w[1, 1:-1] + 4.0 * w[2, 1:-1] - w[3, 1:-1]) / (2.0 * hy)
    return P.tangential_coeff * xn ** (g - 1.0) * w11 + wnn + bg * wn / xn


def _assemble(problem: GrushinProblem) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Matrix of -L on unknowns (j = 1..ny-1, i = 1..nx-1) and the Dirichlet right side."""
    P = problem.profile
    g, bg = P.gamma, P.beta * P.gamma
    nx, ny, hx, hy = problem.nx, problem.ny, problem.hx, problem.hy
    if problem.dirichlet is None:
        raise ValueError("GrushinProblem needs Dirichlet data")
    X1, XN = problem.grid()
    data = np.asarray(problem.dirichlet(X1, XN), dtype=float)
    if data.shape != X1.shape:
        data = np.broadcast_to(data, X1.shape).astype(float)

    mi, mj = nx - 1, ny - 1
    idx = lambda j, i: (j - 1) * mi + (i - 1)  # noqa: E731
    rows, cols, vals = [], [], []
    rhs = np.zeros(mi * mj)

    def couple(k: int, j: int, i: int, coef: float) -> None:
        # coef multiplies w[j, i] in L; the matrix stores -L
        if coef == 0.0:
            return
        if j == ny or i == 0 or i == nx:
            rhs[k] += coef * data[j, i]
        else:
            rows.append(k)
            cols.append(idx(j, i))
            vals.append(-coef)

    for j in range(1, ny):
        t = P.tangential_coeff * (j * hy) ** (g - 1.0) / hx ** 2
        if j == 1:
            up, mid, down = 1.0 + 0.5 * bg, -(1.0 + 0.5 * bg), 0.0
        elif bg / (2.0 * j) <= 1.0:
            up, mid, down = 1.0 + bg / (2.0 * j), -2.0, 1.0 - bg / (2.0 * j)
        else:
            up, mid, down = 1.0 + bg / j, -(2.0 + bg / j), 1.0
        up, mid, down = up / hy ** 2, mid / hy ** 2, down / hy ** 2
        for i in range(1, nx):
            k = idx(j, i)
            rows.append(k)
            cols.append(k)
            vals.append(2.0 * t - mid)
            couple(k, j, i - 1, t)
            couple(k, j, i + 1, t)
            couple(k, j + 1, i, up)
            if j > 1:
                couple(k, j - 1, i, down)
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(mi * mj, mi * mj))
    return A, rhs


def grushin_solve(
    problem: GrushinProblem,
    method: str = "direct",
    tol: float = 1e-10,
    maxiter: int = 2000,
) -> GrushinSolution:
    """
    Discrete solution of L w = 0 with the problem's boundary conditions.

    ``method`` is ``direct`` (sparse LU) or ``gmres`` (ILU-preconditioned,
    raising GrushinConvergenceError with the residual history on failure).
    """
    A, b = _assemble(problem)
    history: list[float] = []
    iterations = 0
    if method == "direct":
        sol = spla.spsolve(A.tocsc(), b)
    elif method == "gmres":
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-6, fill_factor=20)
        M = spla.LinearOperator(A.shape, ilu.solve)

        def record(r: float) -> None:
            history.append(float(r))

        sol, info = spla.gmres(A, b, M=M, rtol=tol, atol=0.0, restart=200, maxiter=maxiter,
                               callback=record, callback_type="pr_norm")
        iterations = len(history)
        if info != 0:
            raise GrushinConvergenceError(
                f"gmres stopped with info={info} after {iterations} iterations", history
            )
    else:
        raise ValueError(f"Unknown method '{method}'. Available: direct, gmres")
    norm_b = float(np.linalg.norm(b)) or 1.0
    residual = float(np.linalg.norm(A @ sol - b)) / norm_b

    X1, XN = problem.grid()
    w = np.asarray(problem.dirichlet(X1, XN), dtype=float)
    w = np.array(np.broadcast_to(w, X1.shape), dtype=float)
    w[1:problem.ny, 1:problem.nx] = sol.reshape(problem.ny - 1, problem.nx - 1)
    w[0, 1:problem.nx] = w[1, 1:problem.nx]
    logger.debug(
        f"grushin_solve: {problem.nx}x{problem.ny} alpha={problem.alpha} beta={problem.beta} "
        f"method={method} residual {residual:.2e}"
    )
    return GrushinSolution(problem, w, residual, history, iterations)


@dataclass
class ConvergenceStudy:
    grids: list[int]
    errors: list[float]
    ratios: list[float]
    kernel_residuals: list[float]

    @property
    def spacings(self) -> list[float]:
        return [1.0 / n for n in self.grids]

    @property
    def kernel_orders(self) -> list[float]:
        """Observed order of the kernel residual between successive grids."""
        return [math.log(r0 / r1) / math.log(n1 / n0) if r0 > 0 and r1 > 0 else float("nan")
                for (n0, r0), (n1, r1) in zip(zip(self.grids, self.kernel_residuals),
                                              zip(self.grids[1:], self.kernel_residuals[1:]))]


def kernel_residual_order(P: ModelProfile) -> float:
    """
    Order in h of max |L_h w| on a kernel polynomial when α != β.

    The xn^(1+γ) term is a power law, so the stencils at row j scale exactly
    like h^(γ-1) R(j). R decreases in j for γ < 3 and the first row dominates;
    from γ = 3 on the centered O(h²) error of the far rows takes over.
    """
    return min(P.gamma - 1.0, 2.0)


def grushin_convergence(
    alpha: float,
    beta: float,
    p11: float = 1.0,
    p_prime: float = 0.25,
    grids: Sequence[int] = (64, 128, 256),
    half_width: float = 1.0,
    height: float = 1.0,
) -> ConvergenceStudy:
    """
    Reproduce a kernel polynomial from its boundary data on successively
    refined grids; ratios are successive max-error quotients.
    """
    P = ModelProfile(alpha, beta)
    kp = kernel_polynomial(p11, p_prime, P)
    errors = []
    kernel_residuals = []
    for n in grids:
        problem = GrushinProblem(alpha, beta, half_width, height, n, n, kp)
        X1, XN = problem.grid()
        lw = grushin_apply(kp(X1, XN), problem)
        kernel_residuals.append(float(np.abs(lw).max()))
        errors.append(grushin_solve(problem).error_against(kp))
    ratios = [e0 / e1 if e1 > 0 else float("inf") for e0, e1 in zip(errors, errors[1:])]
    logger.info(f"grushin_convergence: alpha={alpha} beta={beta} errors={errors} ratios={ratios}")
    return ConvergenceStudy(list(grids), errors, ratios, kernel_residuals)
