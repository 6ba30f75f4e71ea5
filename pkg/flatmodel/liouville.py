"""
flatmodel/liouville.py

Least-squares fit of a sampled potential against the Liouville family

    p0 + p' x1 + P' x1² + p_n xn^(1+γ)

with γ fixed by (α, β), and the trend of the fit residual under rescaling.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any, Optional, Sequence

import numpy as np

from flatmodel.profile import ModelProfile
from flatmodel.scaling import rescale
from transport2d import PotentialField

logger = logging.getLogger("flatmodel.liouville")


@dataclass(frozen=True)
class LiouvilleFit:
    p0: float
    p_prime: float
    P_prime: float
    p_n: float
    residual_max: float
    residual_rms: float

    @property
    def pn_positive(self) -> bool:
        return self.p_n > 0

    @property
    def P_positive_definite(self) -> bool:
        # P' is 1x1 in the plane
        return self.P_prime > 0

    def coefficients(self) -> np.ndarray:
        return np.array([self.p0, self.p_prime, self.P_prime, self.p_n])

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["pn_positive"] = self.pn_positive
        d["P_positive_definite"] = self.P_positive_definite
        return d


def _design(points: np.ndarray, gamma: float) -> np.ndarray:
    x1, xn = points[:, 0], points[:, 1]
    return np.column_stack([np.ones(len(points)), x1, x1 ** 2, xn ** (1.0 + gamma)])


def liouville_check(u_samples: PotentialField, P: ModelProfile) -> LiouvilleFit:
    """
    Fit u against the Liouville family on its nodes (all in {xn >= 0}).

    For u = U the fit is exact: P' = 1/2 and p_n = c_U.
    """
    pts = u_samples.points
    if np.any(pts[:, 1] < 0):
        raise ValueError("liouville_check needs samples in {xn >= 0}")
    A = _design(pts, P.gamma)
    coef, *_ = np.linalg.lstsq(A, u_samples.values, rcond=None)
    res = A @ coef - u_samples.values
    fit = LiouvilleFit(
        p0=float(coef[0]),
        p_prime=float(coef[1]),
        P_prime=float(coef[2]),
        p_n=float(coef[3]),
        residual_max=float(np.abs(res).max()),
        residual_rms=float(np.sqrt(np.mean(res ** 2))),
    )
    logger.debug(f"liouville_check: n={len(pts)} P'={fit.P_prime:.6g} p_n={fit.p_n:.6g} "
                 f"residual {fit.residual_max:.2e}")
    return fit


def model_coefficients(P: ModelProfile) -> np.ndarray:
    """(p0, p', P', p_n) of the tilted model profile."""
    return np.array([0.0, P.tilt, 0.5, P.c_u])


def rescaled_residuals(
    u_samples: PotentialField,
    P: ModelProfile,
    ts: Sequence[float],
    points: Optional[np.ndarray] = None,
) -> list[tuple[float, LiouvilleFit]]:
    """
    Liouville fits of u_t(x) = u(D_t x)/t for each t.

    With ``points`` every u_t is sampled on the same probe set (which D_t must
    map into u's hull); otherwise the nodes themselves are rescaled.
    """
    out = []
    for t in ts:
        ut = rescale(u_samples, t, P.gamma, points=points)
        out.append((float(t), liouville_check(ut, P)))
    return out
