"""
harness/plots.py

Log-log SVG plots of exponent fits. The Agg backend and a fixed SVG hash salt
make the files byte-stable across runs.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger("harness.plots")

matplotlib.rcParams["svg.hashsalt"] = "otlab"
matplotlib.rcParams["svg.fonttype"] = "none"


def plot_loglog(
    x: Sequence[float],
    y: Sequence[float],
    slope: float,
    intercept: float,
    save_path: str | Path,
    title: str = "",
    xlabel: str = "h",
    ylabel: str = "",
    predicted: Optional[float] = None,
) -> Path:
    """Scatter of (x, y) on log axes with the fitted line y = e^b x^slope."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    keep = (xa > 0) & (ya > 0) & np.isfinite(xa) & np.isfinite(ya)
    xa, ya = xa[keep], ya[keep]

    plt.figure(figsize=(6, 4.5))
    plt.loglog(xa, ya, "o", color="darkblue", label="measured")
    if len(xa):
        grid = np.geomspace(xa.min(), xa.max(), 50)
        plt.loglog(grid, np.exp(intercept) * grid ** slope, "-", color="crimson",
                   label=f"fit slope {slope:.4f}")
        if predicted is not None:
            anchor = np.exp(intercept) * xa.max() ** slope
            plt.loglog(grid, anchor * (grid / xa.max()) ** predicted, "--", color="gray",
                       label=f"predicted {predicted:.4f}")
    plt.xlabel(xlabel)
    plt.ylabel(ylabel)
    plt.title(title)
    plt.grid(which="both", linestyle="--", alpha=0.5)
    plt.legend()
    plt.tight_layout()

    save_path = Path(save_path)
    save_path.parent.mkdir(parents=True, exist_ok=True)
    plt.savefig(save_path, format="svg", metadata={"Date": None})
    plt.close()
    logger.debug(f"plot_loglog: wrote {save_path}")
    return save_path
