"""
flatmodel/profile.py

The flat model profile

    U(x) = x1²/2 + c_U xn^(1+γ),   c_U = γ^(β/(1+β)) / ((1+γ)γ),   γ = (1+α)/(1+β)

which solves det D²u = xn^α / u_n^β in {xn > 0} with u_n = 0 on {xn = 0},
its tilted variants, diagonal renormalizations and the admissible Hölder
exponents of the coefficients.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

logger = logging.getLogger("flatmodel.profile")


def gamma_of(alpha: float, beta: float) -> float:
    return (1.0 + alpha) / (1.0 + beta)


def _check_exponents(alpha: float, beta: float) -> None:
    for name, v in (("alpha", alpha), ("beta", beta)):
        if not (v >= 0 and math.isfinite(v)):
            raise ValueError(f"{name} must be a finite number >= 0, got {v}")


@dataclass(frozen=True)
class ModelProfile:
    alpha: float
    beta: float
    tilt: float = 0.0

    def __post_init__(self) -> None:
        _check_exponents(self.alpha, self.beta)

    @property
    def gamma(self) -> float:
        return gamma_of(self.alpha, self.beta)

    @property
    def tangential_coeff(self) -> float:
        """γ^(β/(1+β)), the weight of Δ_x' in the linearized operator."""
        return self.gamma ** (self.beta / (1.0 + self.beta))

    @property
    def c_u(self) -> float:
        g = self.gamma
        return self.tangential_coeff / ((1.0 + g) * g)

    @property
    def normal_constant(self) -> float:
        """U_n / xn^γ, identically γ^(-1/(1+β))."""
        return self.gamma ** (-1.0 / (1.0 + self.beta))

    def tilted(self, tilt: float) -> "ModelProfile":
        return ModelProfile(self.alpha, self.beta, tilt)

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(values, gradients (n, 2), hessians (n, 2, 2)) at points with xn >= 0."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x1, xn = pts[:, 0], pts[:, 1]
        if np.any(xn < 0):
            raise ValueError("the model profile is defined on {xn >= 0}")
        g = self.gamma
        cu = self.c_u
        values = 0.5 * x1 ** 2 + cu * xn ** (1.0 + g) + self.tilt * x1
        grads = np.column_stack([x1 + self.tilt, cu * (1.0 + g) * xn ** g])
        hess = np.zeros((len(pts), 2, 2))
        hess[:, 0, 0] = 1.0
        with np.errstate(divide="ignore"):
            hess[:, 1, 1] = cu * (1.0 + g) * g * xn ** (g - 1.0)
        return values, grads, hess

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate(points)[0]

    def ma_residual(self, points: np.ndarray) -> np.ndarray:
        return _ma_residual(self.evaluate(points), points, self.alpha, self.beta)


def _ma_residual(evaluated, points: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    _, grads, hess = evaluated
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    det = hess[:, 0, 0] * hess[:, 1, 1] - hess[:, 0, 1] * hess[:, 1, 0]
    return det * grads[:, 1] ** beta - pts[:, 1] ** alpha


def profile_eval(P: ModelProfile, x: Sequence[float]) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of U_τ' at a single point with xn >= 0."""
    v, g, h = P.evaluate(np.asarray(x, dtype=float)[None, :])
    return float(v[0]), g[0], h[0]


def verify_ma_identity(P: ModelProfile, points: np.ndarray) -> float:
    """max |det D²U · U_n^β - xn^α| over points in {xn > 0}."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(pts[:, 1] <= 0):
        raise ValueError("verify_ma_identity needs points with xn > 0")
    return float(np.abs(P.ma_residual(pts)).max())


# ---------------------------------------------------------------------------
# Diagonal renormalizations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RenormalizedProfile:
    """x -> U(Q x) for Q = diag(q1, qn) with positive entries."""

    profile: ModelProfile
    q: tuple[float, float]

    def __post_init__(self) -> None:
        if min(self.q) <= 0:
            raise ValueError(f"renormalization entries must be positive, got {self.q}")

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.q)

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        Q = self.matrix
        v, g, h = self.profile.evaluate(pts @ Q.T)
        return v, g @ Q.T, np.einsum("ij,njk,kl->nil", Q, h, Q)

    def ma_residual(self, points: np.ndarray) -> np.ndarray:
        return _ma_residual(self.evaluate(points), points, self.profile.alpha, self.profile.beta)


def renormalize(profile: ModelProfile, q: Sequence[float]) -> RenormalizedProfile:
    return RenormalizedProfile(profile, (float(q[0]), float(q[1])))


def determinant_normalized(q: Sequence[float], alpha: float, beta: float, tol: float = 1e-12) -> bool:
    """q_n^(α+β) (det Q)² = 1 for Q = diag(q1, qn)."""
    q1, qn = float(q[0]), float(q[1])
    return abs(qn ** (alpha + beta) * (q1 * qn) ** 2 - 1.0) <= tol


def normalized_diagonal(q1: float, alpha: float, beta: float) -> tuple[float, float]:
    """The qn > 0 making diag(q1, qn) determinant-normalized."""
    if q1 <= 0:
        raise ValueError("q1 must be positive")
    # qn^(2+α+β) = q1^-2
    return q1, q1 ** (-2.0 / (2.0 + alpha + beta))


# ---------------------------------------------------------------------------
# Hölder exponents of the coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HolderExponents:
    lam: float
    mu: float
    omega: float
    lam_max: float
    map_regularity: float
    expansion_order: float

    @property
    def map_class(self) -> str:
        return f"C^{self.map_regularity:.6g}"


def lambda_max(alpha: float, beta: float) -> float:
    """Largest admissible λ; terms carrying a vanishing exponent are dropped."""
    _check_exponents(alpha, beta)
    g = gamma_of(alpha, beta)
    if alpha >= beta:
        terms = [2.0 / (1.0 + g)]
        if alpha > 0:
            terms.append(2.0 * alpha / (1.0 + g))
        if beta > 0:
            terms.append(beta)
    else:
        terms = [2.0 * g / (1.0 + g)]
        if alpha > 0:
            terms.append(alpha)
        if beta > 0:
            terms.append(2.0 * g * beta / (1.0 + g))
    return min(terms)


def holder_exponents(alpha: float, beta: float, lam: float) -> HolderExponents:
    """
    Coefficient exponents (μ, ω) for a ∈ C^μ, b ∈ C^ω paired with λ, and the
    resulting map regularity: C^(1+λ) when γ >= 1, C^(γ(1+ω)) when γ < 1.
    """
    lmax = lambda_max(alpha, beta)
    g = gamma_of(alpha, beta)
    if not (0 < lam <= lmax):
        raise ValueError(f"lambda must lie in (0, {lmax:.6g}] for alpha={alpha}, beta={beta}; got {lam}")
    if alpha == beta and lam >= 1:
        raise ValueError("lambda must be < 1 when alpha == beta")
    if alpha >= beta:
        mu, omega = lam * (1.0 + g) / 2.0, lam
    else:
        mu, omega = lam, lam * (1.0 + g) / (2.0 * g)
    regularity = 1.0 + lam if g >= 1 else g * (1.0 + omega)
    return HolderExponents(lam, mu, omega, lmax, regularity, 1.0 + lam / 2.0)
