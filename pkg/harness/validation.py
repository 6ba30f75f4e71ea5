# harness/validation.py
"""
Validation of experiment configuration values.

Every validator is pure and returns ``(is_valid, error_message)``; the config
layer turns a failure into a ConfigError naming the key.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Any, Iterator, Optional, Sequence, Tuple

from measures import COEFF_KINDS, Coefficient

if TYPE_CHECKING:
    from harness.config import DomainSpec

Result = Tuple[bool, Optional[str]]

# Exponent ceiling: beyond it the 1D quadrature and the flat profile lose accuracy
MAX_EXPONENT = 20.0
MIN_RESOLUTION = 8
UNIFORMLY_CONVEX_KINDS = ("disk", "ellipse", "superellipse")


def validate_exponent(value: float, name: str) -> Result:
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        return False, f"{name} must be a finite number, got {value!r}"
    if value < 0:
        return False, f"{name} must be >= 0, got {value}"
    if value > MAX_EXPONENT:
        return False, f"{name} would exceed limit: {value} > {MAX_EXPONENT}"
    return True, None


def validate_choice(value: str, choices: Sequence[str]) -> Result:
    if value not in choices:
        return False, f"'{value}' is not one of {', '.join(choices)}"
    return True, None


def validate_seed(seed: int) -> Result:
    if not isinstance(seed, int) or seed < 0:
        return False, f"seed must be a nonnegative integer, got {seed!r}"
    return True, None


def validate_at_least(value: int, floor: int, name: str) -> Result:
    if value < floor:
        return False, f"{name} would go below floor: {value} < {floor}"
    return True, None


def validate_positive(value: float, name: str) -> Result:
    if not (math.isfinite(value) and value > 0):
        return False, f"{name} must be a positive number, got {value}"
    return True, None


def validate_unit_interval(value: float, name: str) -> Result:
    if not (0 < value < 1):
        return False, f"{name} must lie in (0, 1), got {value}"
    return True, None


def validate_window(window: Sequence[float]) -> Result:
    if len(window) != 2:
        return False, f"fit window takes two numbers, got {len(window)}"
    lo, hi = window
    if not (0 < lo < hi <= 0.5):
        return False, f"fit window must satisfy 0 < lo < hi <= 1/2, got ({lo}, {hi})"
    return True, None


def validate_grid_shape(shape: Sequence[int]) -> Result:
    if len(shape) == 0:
        return True, None
    if len(shape) != 2:
        return False, f"grid shape takes two cell counts (nx ny), got {len(shape)}"
    if any(n < 2 for n in shape):
        return False, f"grid shape needs at least 2 cells per side, got {list(shape)}"
    return True, None


def validate_grids(grids: Sequence[int]) -> Result:
    if len(grids) < 2:
        return False, "a convergence study needs at least two grids"
    if any(g < 4 for g in grids):
        return False, f"grids must have at least 4 cells per side, got {list(grids)}"
    if any(b <= a for a, b in zip(grids, grids[1:])):
        return False, f"grids must be strictly increasing, got {list(grids)}"
    return True, None


def validate_coefficient(kind: str, params: Sequence[float]) -> Result:
    if kind not in COEFF_KINDS:
        return False, f"unknown coefficient '{kind}'. Available: {', '.join(COEFF_KINDS)}"
    try:
        Coefficient(kind, tuple(params))
    except ValueError as exc:
        return False, str(exc)
    return True, None


def validate_uniformly_convex(kind: str) -> Result:
    if kind not in UNIFORMLY_CONVEX_KINDS:
        return False, f"curved2d needs a uniformly convex domain ({', '.join(UNIFORMLY_CONVEX_KINDS)}), got '{kind}'"
    return True, None


def _pair_positive(values: Sequence[float], name: str) -> Result:
    if len(values) != 2 or min(values) <= 0:
        return False, f"{name} takes two positive numbers, got {list(values)}"
    return True, None


def domain_checks(spec: "DomainSpec") -> Iterator[tuple[str, Result]]:
    """(key, result) pairs for the shape keys the domain kind uses."""
    kind = spec.kind
    if kind == "polygon":
        ok = len(spec.vertices) >= 3
        yield "vertices", (ok, None if ok else f"a polygon needs at least 3 vertices, got {len(spec.vertices)}")
    elif kind in ("box", "strip"):
        b = spec.bounds
        ok = len(b) == 4 and b[2] > b[0] and b[3] > b[1]
        yield "bounds", (ok, None if ok else f"bounds must be 'xmin ymin xmax ymax' with a nonempty box, got {list(b)}")
    else:
        yield "center", _finite_pair(spec.center)
        if kind == "disk":
            yield "radius", validate_positive(spec.radius, "radius")
        else:
            yield "semi_axes", _pair_positive(spec.semi_axes, "semi_axes")
        if kind == "superellipse" and spec.exponent < 2:
            yield "exponent", (False, f"superellipse exponent must be >= 2, got {spec.exponent}")
        yield "resolution", validate_at_least(spec.resolution, MIN_RESOLUTION, "resolution")


def _finite_pair(values: Any) -> Result:
    if len(values) != 2 or not all(math.isfinite(v) for v in values):
        return False, f"expected two finite numbers, got {list(values)}"
    return True, None
