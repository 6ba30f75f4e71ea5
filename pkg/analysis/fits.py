"""
analysis/fits.py

Log-log least-squares slope fits used for every exponent estimate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

logger = logging.getLogger("analysis.fits")


@dataclass(frozen=True)
class ExponentFit:
    estimate: float
    stderr: float
    window: tuple[float, float]
    n_points: int
    intercept: float = 0.0

    def within(self, target: float, rel_tol: float) -> bool:
        return abs(self.estimate - target) <= rel_tol * abs(target)

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "window": list(self.window),
            "n_points": self.n_points,
            "intercept": self.intercept,
        }


def fit_loglog(
    x: Sequence[float],
    y: Sequence[float],
    window: Optional[tuple[float, float]] = None,
    min_points: int = 2,
) -> ExponentFit:
    """
    Slope of log y against log x over points with x inside ``window``.

    Nonpositive or non-finite samples are dropped before the window is applied.
    """
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    keep = np.isfinite(xa) & np.isfinite(ya) & (xa > 0) & (ya > 0)
    if window is not None:
        lo, hi = window
        keep &= (xa >= lo) & (xa <= hi)
    xa, ya = xa[keep], ya[keep]
    if len(xa) < max(min_points, 2):
        raise ValueError(f"need at least {max(min_points, 2)} usable points for a fit, got {len(xa)}")
    lx, ly = np.log(xa), np.log(ya)
    if np.ptp(lx) == 0:
        raise ValueError("fit abscissae are all equal")
    res = stats.linregress(lx, ly)
    stderr = float(res.stderr) if np.isfinite(res.stderr) else 0.0
    fit_window = window if window is not None else (float(xa.min()), float(xa.max()))
    return ExponentFit(float(res.slope), stderr, (float(fit_window[0]), float(fit_window[1])),
                       int(len(xa)), float(res.intercept))
