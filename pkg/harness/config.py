"""
harness/config.py

Experiment configuration: dataclass schemas with INI text parse/emit.

Text format: ``key = value`` lines under ``[experiment]``, ``[source]``,
``[target]``, ``[solver]`` and ``[analysis]`` headers. Vectors are
space-separated, polygon vertices are ``x y; x y; ...``. Emission is canonical
(fixed section and key order, floats via repr) so emit(parse(text)) is stable.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional

from geometry import ConvexBody
from harness import validation
from measures import Coefficient, PowerDensity

EXPERIMENTS = ("exp1d", "doubling", "flat2d", "curved2d", "grushin", "liouville")
DOMAIN_KINDS = ("polygon", "box", "strip", "disk", "ellipse", "superellipse")
SECTIONS = ("experiment", "source", "target", "solver", "analysis")

# tangential extent of a strip's distance body, in window widths
STRIP_EXTENT = 1e3

# keys emitted for each domain kind, besides kind and the coefficient
_KIND_KEYS = {
    "polygon": ("vertices",),
    "box": ("bounds",),
    "strip": ("bounds",),
    "disk": ("center", "radius", "resolution"),
    "ellipse": ("center", "semi_axes", "rotation", "resolution"),
    "superellipse": ("center", "semi_axes", "exponent", "rotation", "resolution"),
}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# ---------------------------------------------------------------------------
# Schemas
# ---------------------------------------------------------------------------

@dataclass
class DomainSpec:
    kind: str = "disk"
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    semi_axes: tuple[float, float] = (1.0, 1.0)
    rotation: float = 0.0
    exponent: float = 4.0
    resolution: int = 256
    bounds: tuple[float, float, float, float] = (-1.0, 0.0, 1.0, 1.0)
    vertices: tuple[tuple[float, float], ...] = ()
    coeff: str = "constant"
    coeff_params: tuple[float, ...] = (1.0,)

    def build_body(self) -> ConvexBody:
        if self.kind == "polygon":
            return ConvexBody.from_points(self.vertices)
        if self.kind in ("box", "strip"):
            return ConvexBody.box(*self.bounds)
        if self.kind == "disk":
            return ConvexBody.disk(self.center, self.radius, self.resolution)
        if self.kind == "ellipse":
            return ConvexBody.ellipse(self.center, self.semi_axes, self.rotation, self.resolution)
        return ConvexBody.superellipse(self.center, self.semi_axes, self.exponent,
                                       self.rotation, self.resolution)

    def distance_body(self) -> Optional[ConvexBody]:
        """For a strip: the box whose boundary meets the window only along its top and bottom."""
        if self.kind != "strip":
            return None
        xmin, ymin, xmax, ymax = self.bounds
        pad = STRIP_EXTENT * (xmax - xmin)
        return ConvexBody.box(xmin - pad, ymin, xmax + pad, ymax)

    def density(self, exponent: float) -> PowerDensity:
        return PowerDensity(self.build_body(), exponent, Coefficient(self.coeff, self.coeff_params),
                            distance_body=self.distance_body())


@dataclass
class SolverSpec:
    grid_n: int = 256
    n_cells: int = 400
    grid_shape: tuple[int, ...] = ()
    method: str = "lp"
    lp_cap: int = 2000
    eps_final_ratio: float = 1e-4
    eps_factor: float = 0.5
    max_iter: int = 20000
    grushin_grids: tuple[int, ...] = (64, 128, 256)
    grushin_method: str = "direct"
    doubling_samples: int = 200


@dataclass
class AnalysisSpec:
    n_heights: int = 8
    h_max: float = 0.1
    bias_factor: float = 25.0
    boundary_samples: int = 64
    fit_window: tuple[float, float] = (1e-4, 1e-1)
    fit_tol: float = 0.01
    noise: float = 1e-3
    chain_polygons: int = 200
    refine: bool = True
    centered: bool = False


@dataclass
class ExperimentConfig:
    experiment: str
    alpha: float = 0.0
    beta: float = 0.0
    seed: int = 0
    output_dir: str = ""
    source: DomainSpec = field(default_factory=DomainSpec)
    target: DomainSpec = field(default_factory=DomainSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)

    @property
    def gamma(self) -> float:
        return (1.0 + self.alpha) / (1.0 + self.beta)

    @property
    def params(self) -> str:
        return f"alpha={self.alpha!r};beta={self.beta!r};seed={self.seed}"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in d.items() if k in known}
        for name, spec in (("source", DomainSpec), ("target", DomainSpec),
                           ("solver", SolverSpec), ("analysis", AnalysisSpec)):
            if isinstance(kwargs.get(name), dict):
                kwargs[name] = _coerce_spec(spec, kwargs[name], name)
        return cls(**kwargs)

    def validate(self) -> None:
        """Raise ConfigError naming the first invalid key."""
        for key, (ok, msg) in _checks(self):
            if not ok:
                raise ConfigError(key, msg or "invalid value")


# ---------------------------------------------------------------------------
# Value codecs
# ---------------------------------------------------------------------------

def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(" ".join(_fmt(float(c)) for c in row) for row in value)
        return " ".join(_fmt(v) for v in value)
    return str(value)


def _parse_value(default: Any, text: str, key: str, label: Optional[str] = None) -> Any:
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError(f"not a boolean: '{text}'")
            return low in ("true", "yes", "1")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            if key == "vertices":
                rows = [r.split() for r in text.split(";") if r.strip()]
                if any(len(r) != 2 for r in rows):
                    raise ValueError("vertices must be written as 'x y; x y; ...'")
                return tuple((float(a), float(b)) for a, b in rows)
            kind = int if key in ("grushin_grids", "grid_shape") else float
            return tuple(kind(v) for v in text.split())
        return text
    except ValueError as exc:
        raise ConfigError(label or key, f"cannot parse '{text}': {exc}") from None


def _coerce_spec(spec_cls, values: dict, section: str):
    defaults = spec_cls()
    known = {f.name for f in fields(spec_cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"{section}.{key}", "unknown key")
        default = getattr(defaults, key)
        kwargs[key] = _parse_value(default, value, key, f"{section}.{key}") if isinstance(value, str) else _retuple(value)
    return spec_cls(**kwargs)


def _retuple(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_retuple(v) for v in value)
    return value


# ---------------------------------------------------------------------------
# Parse / emit
# ---------------------------------------------------------------------------

def parse_config(text: str) -> ExperimentConfig:
    """ExperimentConfig from INI text; ConfigError names the offending key."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", f"malformed text: {exc}") from None
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(section, "unknown section")
    if not parser.has_section("experiment"):
        raise ConfigError("experiment", "missing [experiment] section")
    exp = dict(parser.items("experiment"))
    if "id" not in exp:
        raise ConfigError("experiment.id", "missing required key")

    top: dict[str, Any] = {"experiment": exp.pop("id").strip()}
    base = ExperimentConfig(experiment=top["experiment"])
    for key, value in exp.items():
        if key not in ("alpha", "beta", "seed", "output_dir"):
            raise ConfigError(f"experiment.{key}", "unknown key")
        top[key] = _parse_value(getattr(base, key), value, key)
    for name, spec in (("source", DomainSpec), ("target", DomainSpec),
                       ("solver", SolverSpec), ("analysis", AnalysisSpec)):
        if parser.has_section(name):
            top[name] = _coerce_spec(spec, dict(parser.items(name)), name)
    cfg = ExperimentConfig(**top)
    cfg.validate()
    return cfg


def _domain_lines(spec: DomainSpec) -> list[str]:
    keys = ("kind",) + _KIND_KEYS[spec.kind] + ("coeff", "coeff_params")
    return [f"{k} = {_fmt(getattr(spec, k))}" for k in keys]


def emit_config(cfg: ExperimentConfig) -> str:
    """Canonical INI text for a config."""
    lines = [
        "[experiment]",
        f"id = {cfg.experiment}",
        f"alpha = {_fmt(float(cfg.alpha))}",
        f"beta = {_fmt(float(cfg.beta))}",
        f"seed = {cfg.seed}",
    ]
    if cfg.output_dir:
        lines.append(f"output_dir = {cfg.output_dir}")
    for name in ("source", "target"):
        lines += ["", f"[{name}]"] + _domain_lines(getattr(cfg, name))
    for name in ("solver", "analysis"):
        spec = getattr(cfg, name)
        lines += ["", f"[{name}]"] + [f"{f.name} = {_fmt(getattr(spec, f.name))}" for f in fields(spec)]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Validation table
# ---------------------------------------------------------------------------

def _checks(cfg: ExperimentConfig):
    yield "experiment.id", validation.validate_choice(cfg.experiment, EXPERIMENTS)
    yield "alpha", validation.validate_exponent(cfg.alpha, "alpha")
    yield "beta", validation.validate_exponent(cfg.beta, "beta")
    yield "seed", validation.validate_seed(cfg.seed)
    for name in ("source", "target"):
        spec: DomainSpec = getattr(cfg, name)
        yield f"{name}.kind", validation.validate_choice(spec.kind, DOMAIN_KINDS)
        for key, result in validation.domain_checks(spec):
            yield f"{name}.{key}", result
        yield f"{name}.coeff", validation.validate_coefficient(spec.coeff, spec.coeff_params)
        if cfg.experiment == "curved2d":
            yield f"{name}.kind", validation.validate_uniformly_convex(spec.kind)
    yield "solver.method", validation.validate_choice(cfg.solver.method, ("lp", "entropic"))
    yield "solver.grushin_method", validation.validate_choice(cfg.solver.grushin_method, ("direct", "gmres"))
    yield "solver.grid_n", validation.validate_at_least(cfg.solver.grid_n, 16, "grid_n")
    yield "solver.n_cells", validation.validate_at_least(cfg.solver.n_cells, 4, "n_cells")
    yield "solver.lp_cap", validation.validate_at_least(cfg.solver.lp_cap, 1, "lp_cap")
    yield "solver.eps_final_ratio", validation.validate_unit_interval(cfg.solver.eps_final_ratio, "eps_final_ratio")
    yield "solver.eps_factor", validation.validate_unit_interval(cfg.solver.eps_factor, "eps_factor")
    yield "solver.grushin_grids", validation.validate_grids(cfg.solver.grushin_grids)
    yield "solver.grid_shape", validation.validate_grid_shape(cfg.solver.grid_shape)
    yield "solver.doubling_samples", validation.validate_at_least(cfg.solver.doubling_samples, 1, "doubling_samples")
    yield "analysis.n_heights", validation.validate_at_least(cfg.analysis.n_heights, 2, "n_heights")
    yield "analysis.h_max", validation.validate_positive(cfg.analysis.h_max, "h_max")
    yield "analysis.fit_window", validation.validate_window(cfg.analysis.fit_window)
    yield "analysis.fit_tol", validation.validate_positive(cfg.analysis.fit_tol, "fit_tol")
    yield "analysis.boundary_samples", validation.validate_at_least(cfg.analysis.boundary_samples, 1, "boundary_samples")

