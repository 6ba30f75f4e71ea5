"""
harness/experiments.py

One runner per experiment id. A runner turns an ExperimentConfig into report
rows plus the data behind its fits (for plots) and msgpack artifacts.

  exp1d      1D exponent law of the monotone map
  doubling   ellipsoid doubling constant and the convex-set chain inequality
  flat2d     boundary section scaling of a solved flat transport problem
  curved2d   obliqueness and section properties between curved domains
  grushin    kernel reproduction and convergence of the linearized operator
  liouville  closed-form profile identities and Liouville coefficient fits

Numerical failures (ValueError / RuntimeError from the solvers) never escape a
runner: they become failing rows carrying the exception text.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from analysis import (
    boundary_expansion_fit,
    dyadic_heights,
    extract_section,
    fit_boundary_exponents,
    fit_loglog,
    mass_balance_ratio,
    normal_ratio,
    obliqueness,
    oscillation_decay,
    profile_section,
    section_property_suite,
    tangential_hessian_bound,
)
from flatmodel import (
    GrushinConvergenceError,
    GrushinProblem,
    ModelProfile,
    determinant_normalized,
    grushin_convergence,
    grushin_solve,
    holder_exponents,
    kernel_polynomial,
    kernel_residual_order,
    lambda_max,
    liouville_check,
    model_coefficients,
    normalized_diagonal,
    renormalize,
    rescaled_residuals,
    sample_profile,
    verify_ma_identity,
)
from geometry import ConvexBody, barycenter, clip_halfplane, random_convex_polygon
from harness.artifacts import load_artifact, save_artifact
from harness.config import ExperimentConfig
from harness.plots import plot_loglog
from harness.report import ReportRow, RowBuilder, write_csv, write_manifest
from measures import corollary_chain_check, doubling_constant
from transport1d import Density1D, dyadic_points, fit_exponent, mass_balance_error, solve_1d
from transport2d import (
    DiscreteMeasure,
    PotentialField,
    TransportSolution,
    brenier_potential,
    cyclical_monotonicity_violation,
    default_schedule,
    discretize,
    legendre_transform,
    marginal_violation,
    pushforward_check,
    solve_entropic,
    solve_lp,
)

logger = logging.getLogger("harness.experiments")

# Assertion thresholds
MASS_BALANCE_1D_TOL = 1e-8
DOUBLING_CEILING = 1e6
UNIFORM_DOUBLING = 4.0
SEED_STABILITY = 0.10
FLAT_SLOPE_REL = 0.10
MASS_BALANCE_SPREAD = 10.0
THETA_FLOOR = 0.05
THETA_DRIFT = 0.05
IDENTITY_COST = 1e-12
MONOTONICITY_TOL = 1e-9
RICHARDSON_FLOOR = 1.7
KERNEL_RESIDUAL_TOL = 1e-6
KERNEL_ORDER_TOL = 0.05
GMRES_RESIDUAL_TOL = 1e-8
MAX_PRINCIPLE_TOL = 1e-10
LIOUVILLE_EXACT_TOL = 1e-8
LIOUVILLE_NOISY_TOL = 1e-2
MA_IDENTITY_TOL = 1e-10
PROFILE_BALANCE_TOL = 1e-8

N_HALFPLANES = 50
N_MA_POINTS = 1000
PROFILE_GRID = 33
SUITE_HEIGHTS = 3


# ---------------------------------------------------------------------------
# Provenance tags (the property each metric checks)
# ---------------------------------------------------------------------------

PROV = {
    "gamma": "mass balance: the 1D map behaves like t^gamma with gamma = (1+alpha)/(1+beta)",
    "mass_1d": "monotone rearrangement: F(t) = G(T(t)) at every node",
    "doubling": "power-of-distance densities are doubling on ellipsoids centered in the domain",
    "doubling_uniform": "a uniform density on a convex set has doubling constant at most 4",
    "chain": "f(S) <= D^k f(S/2) for convex sets with barycenter in the domain",
    "slope_d": "flat boundary sections: normal extent d_h ~ h^(1/(1+gamma))",
    "slope_w": "flat boundary sections: tangential width w_h ~ h^(1/2)",
    "mass_balance": "section mass balance d_h^(2+alpha+beta) w_h^2 ~ h^(2+beta)",
    "normal_ratio": "u_n comparable to xn^gamma near a flat boundary",
    "oscillation": "oscillation of u_n / xn^gamma over nested cylinders",
    "hessian": "tangential second derivative times section depth stays bounded",
    "expansion": "boundary expansion p1 x1^2 + p2 xn^(1+gamma) with small remainder",
    "theta": "strict obliqueness: inner normals at x and grad u(x) have a positive inner product",
    "theta_refine": "obliqueness estimate stable under refinement",
    "identity": "identical source and target: zero cost and theta = 1",
    "monotone": "the optimal support is cyclically monotone",
    "pushforward": "the coupling's first marginal agrees with mu on every test set",
    "marginal": "coupling marginals match the discrete measures",
    "suite": "section geometry of the potential and its Legendre transform",
    "richardson": "the discrete solution converges at first order in the grid spacing",
    "kernel": "the kernel polynomial with p_n = -p11/(1+beta) solves L w = 0",
    "kernel_order": "the kernel residual decays like h^min(gamma-1, 2) when alpha != beta",
    "gmres": "the preconditioned iterative solve reaches the direct solution",
    "constant": "constant boundary data give the constant solution",
    "max_principle": "the discrete operator obeys the maximum principle",
    "liouville_exact": "the model profile is its own Liouville fit",
    "liouville_noisy": "Liouville fit of the noisy profile stays within the noise level",
    "liouville_sign": "fitted p_n positive and P' positive definite",
    "ma_identity": "det D^2 U * U_n^beta = xn^alpha for the model profile",
    "renormalized": "determinant-normalized diagonal renormalizations preserve the equation",
    "profile_balance": "mass balance is exactly constant on closed-form profile sections",
    "holder": "admissible coefficient Hölder exponents and the resulting map class",
    "rescaled": "Liouville residual of u_t(x) = u(D_t x)/t across scales",
}


# ---------------------------------------------------------------------------
# Result container
# ---------------------------------------------------------------------------

@dataclass
class FitPlot:
    name: str
    x: list[float]
    y: list[float]
    slope: float
    intercept: float
    predicted: Optional[float] = None
    title: str = ""
    xlabel: str = "h"
    ylabel: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "FitPlot":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: RowBuilder
    plots: list[FitPlot] = field(default_factory=list)
    artifacts: dict[str, dict[str, Any]] = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def report_rows(self) -> list[ReportRow]:
        return self.rows.rows

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows.rows if r.asserted)


def _guarded(result: ExperimentResult, metric: str, prov: str, fn: Callable, *args, **kwargs) -> Any:
    """Call fn; on a numerical failure record a failing row and return None."""
    try:
        return fn(*args, **kwargs)
    except (ValueError, RuntimeError) as exc:
        logger.error(f"{result.config.experiment}: {metric} failed: {exc}")
        result.rows.failure(metric, f"{type(exc).__name__}: {exc}", PROV[prov])
        return None


def _solve(cfg: ExperimentConfig, mu: DiscreteMeasure, nu: DiscreteMeasure) -> TransportSolution:
    s = cfg.solver
    if s.method == "lp":
        return solve_lp(mu, nu, cap=s.lp_cap)
    schedule = default_schedule(mu, nu, final_ratio=s.eps_final_ratio, factor=s.eps_factor)
    return solve_entropic(mu, nu, eps_schedule=schedule, max_iter=s.max_iter)


def _report_certificates(result: ExperimentResult, sol: TransportSolution) -> None:
    rows = result.rows
    row_err, col_err = marginal_violation(sol)
    rows.report_only("marginal_violation_rows", row_err, PROV["marginal"])
    rows.report_only("marginal_violation_cols", col_err, PROV["marginal"])
    rows.report_only("transport_cost", sol.cost, PROV["marginal"])
    viol = cyclical_monotonicity_violation(sol, seed=result.config.seed)
    if sol.is_exact:
        rows.check_at_most("cyclical_monotonicity_violation", viol, MONOTONICITY_TOL, PROV["monotone"])
    else:
        rows.report_only("cyclical_monotonicity_violation", viol, PROV["monotone"])


# ---------------------------------------------------------------------------
# exp1d
# ---------------------------------------------------------------------------

def run_exp1d(result: ExperimentResult) -> None:
    cfg = result.config
    rows = result.rows
    window = tuple(cfg.analysis.fit_window)
    grid_n = cfg.solver.grid_n

    f = Density1D.power(cfg.alpha, grid_n=grid_n)
    g = Density1D.power(cfg.beta, grid_n=grid_n)
    T = solve_1d(f, g, grid_n)
    fit = _guarded(result, "gamma_fit", "gamma", fit_exponent, T, window)
    if fit is not None:
        rows.check_close("gamma_fit", fit.estimate, cfg.gamma, cfg.analysis.fit_tol, PROV["gamma"], rel=True)
        rows.report_only("gamma_fit_stderr", fit.stderr, PROV["gamma"])
        pts = dyadic_points(window)
        result.plots.append(FitPlot("gamma_fit", pts.tolist(), np.asarray(T(pts)).tolist(),
                                    fit.estimate, fit.intercept, cfg.gamma,
                                    title=f"1D map, alpha={cfg.alpha}, beta={cfg.beta}",
                                    xlabel="t", ylabel="T(t)"))
    rows.check_at_most("mass_balance_error", mass_balance_error(T, f, g), MASS_BALANCE_1D_TOL, PROV["mass_1d"])

    # the exponent at 0 survives a Hölder coefficient and a second vanishing end
    for label, fs, gs in (
        ("sloped", Density1D.power(cfg.alpha, slope=1.0, grid_n=grid_n),
         Density1D.power(cfg.beta, slope=0.5, grid_n=grid_n)),
        ("two_sided", Density1D.power(cfg.alpha, two_sided=True, grid_n=grid_n),
         Density1D.power(cfg.beta, two_sided=True, grid_n=grid_n)),
    ):
        variant = _guarded(result, f"gamma_fit_{label}", "gamma", fit_exponent, solve_1d(fs, gs, grid_n), window)
        if variant is not None:
            rows.report_only(f"gamma_fit_{label}", variant.estimate, PROV["gamma"], target=f"{cfg.gamma:.12g}")

    result.artifacts["map"] = {"t": T.t, "values": T.values, "alpha": cfg.alpha, "beta": cfg.beta}


# ---------------------------------------------------------------------------
# doubling
# ---------------------------------------------------------------------------

def _random_sets(body: ConvexBody, count: int, seed: int) -> list[ConvexBody]:
    rng = np.random.default_rng(seed)
    xmin, ymin, xmax, ymax = body.bounds
    sets = []
    while len(sets) < count:
        center = rng.uniform((xmin, ymin), (xmax, ymax))
        if not body.contains(center[None, :])[0]:
            continue
        radius = rng.uniform(0.05, 0.5) * body.diameter
        sets.append(random_convex_polygon(rng, int(rng.integers(3, 9)), center, radius))
    return sets


def run_doubling(result: ExperimentResult) -> None:
    cfg = result.config
    rows = result.rows
    f = cfg.source.density(cfg.alpha)
    n = cfg.solver.doubling_samples

    est = doubling_constant(f, n, cfg.seed)
    rows.check_between("doubling_constant", est.constant, 1.0, DOUBLING_CEILING, PROV["doubling"])
    rows.report_only("doubling_n_inside", est.n_inside, PROV["doubling"])
    rows.report_only("doubling_n_crossing", est.n_crossing, PROV["doubling"])
    rows.report_only("doubling_n_skipped", est.n_skipped, PROV["doubling"])
    if cfg.alpha == 0 and cfg.source.coeff == "constant":
        rows.check_at_most("doubling_constant_uniform", est.constant, UNIFORM_DOUBLING * (1.0 + 1e-3),
                           PROV["doubling_uniform"])

    other = doubling_constant(f, n, cfg.seed + 1)
    rows.check_close("doubling_seed_stability", other.constant / est.constant, 1.0, SEED_STABILITY,
                     PROV["doubling"])

    sets = _random_sets(f.body, cfg.analysis.chain_polygons, cfg.seed)
    chain = corollary_chain_check(f, est.constant, sets)
    rows.check_at_most("chain_violations", chain.n_violations, 0, PROV["chain"])
    rows.report_only("chain_worst_ratio", chain.worst_ratio, PROV["chain"], target=f"<= {chain.bound:.12g}")
    rows.report_only("chain_n_checked", chain.n_checked, PROV["chain"])

    result.artifacts["doubling"] = {"ratios": est.ratios, "constant": est.constant,
                                    "other_seed_constant": other.constant}


# ---------------------------------------------------------------------------
# flat2d
# ---------------------------------------------------------------------------

def _flat_points(window: ConvexBody) -> np.ndarray:
    xmin, ymin, xmax, ymax = window.bounds
    cx, w, hgt = 0.5 * (xmin + xmax), xmax - xmin, ymax - ymin
    return np.array([[cx + a * w, ymin + b * hgt] for a in (-0.15, 0.0, 0.15) for b in (0.15, 0.25, 0.35)])


def _flat_anchor(mu: DiscreteMeasure, window: ConvexBody) -> np.ndarray:
    """Boundary foot of the atom column nearest the bottom edge's midpoint."""
    xmin, ymin, xmax, _ = window.bounds
    col = mu.points[np.argmin(np.abs(mu.points[:, 0] - 0.5 * (xmin + xmax))), 0]
    return np.array([col, ymin])


def _flatten_to_boundary(u: PotentialField, x0: np.ndarray, target_level: float) -> PotentialField:
    """
    Subtract the plane through (x0, u(x0)) with the anchor's tangential slope and
    the normal slope y_n = target_level of the facing edge of Y.

    The discrete gradient at a boundary anchor is the barycenter of the first
    target row, half a row above the edge; the boundary map sends the edge to the edge.
    """
    k = int(u.support_index(x0[None, :])[0])
    slope = np.array([u.gradients[k][0], target_level])
    return u.add_affine(-slope, float(slope @ x0))


def _normal_spacing(body: ConvexBody, shape: tuple[int, ...], fallback: float) -> float:
    if not shape:
        return fallback
    _, ymin, _, ymax = body.bounds
    return (ymax - ymin) / shape[1]


def run_flat2d(result: ExperimentResult) -> None:
    cfg = result.config
    rows = result.rows
    an = cfg.analysis
    shape = tuple(cfg.solver.grid_shape) or None
    mu_f = cfg.source.density(cfg.alpha)
    nu_g = cfg.target.density(cfg.beta)
    mu = discretize(mu_f, cfg.solver.n_cells, shape=shape)
    nu = discretize(nu_g, cfg.solver.n_cells, shape=shape)
    sol = _guarded(result, "transport_solve", "marginal", _solve, cfg, mu, nu)
    if sol is None:
        return
    _report_certificates(result, sol)

    window = mu_f.body
    xmin, _, xmax, _ = window.bounds
    x0 = _flat_anchor(mu, window)
    normal = (0.0, 1.0)
    u = brenier_potential(sol, anchor=x0, window=window, potential="midrange")
    u = _flatten_to_boundary(replace(u, body=mu_f.dist_body), x0, nu_g.body.bounds[1])

    # sections below the discretization bias are not fitted; the bias scales
    # with the square of the cell size across the boundary
    h_n = _normal_spacing(window, cfg.solver.grid_shape, u.spacing)
    bias = sol.epsilon if sol.epsilon > 0 else h_n ** 2
    h_floor = an.bias_factor * bias
    heights = dyadic_heights(an.h_max, an.n_heights)
    stats = [extract_section(u, x0, p=np.zeros(2), h=h, normal=normal) for h in heights]
    rows.report_only("h_floor", h_floor, PROV["slope_d"])

    fits = _guarded(result, "slope_d", "slope_d", fit_boundary_exponents, stats, h_floor)
    P = ModelProfile(cfg.alpha, cfg.beta)
    if fits is not None:
        d_target = 1.0 / (1.0 + cfg.gamma)
        rows.check_between("slope_d", fits.d_fit.estimate, (1.0 - FLAT_SLOPE_REL) * d_target,
                           (1.0 + FLAT_SLOPE_REL) * d_target, PROV["slope_d"])
        rows.check_between("slope_w", fits.w_fit.estimate, (1.0 - FLAT_SLOPE_REL) * 0.5,
                           (1.0 + FLAT_SLOPE_REL) * 0.5, PROV["slope_w"])
        rows.report_only("sections_used", fits.n_used, PROV["slope_d"])
        used = [s for s in stats if s.usable and s.h >= h_floor]
        m = [mass_balance_ratio(s, cfg.alpha, cfg.beta) for s in used]
        rows.check_at_most("mass_balance_spread", max(m) / min(m), MASS_BALANCE_SPREAD, PROV["mass_balance"])
        hs = [s.h for s in used]
        result.plots.append(FitPlot("section_depth", hs, [s.d_h for s in used], fits.d_fit.estimate,
                                    fits.d_fit.intercept, d_target, title="normal extent d_h", ylabel="d_h"))
        result.plots.append(FitPlot("section_width", hs, [s.w_h for s in used], fits.w_fit.estimate,
                                    fits.w_fit.intercept, 0.5, title="tangential width w_h", ylabel="w_h"))

    ratio = _guarded(result, "normal_ratio", "normal_ratio", normal_ratio, u, P, _flat_points(window))
    if ratio is not None:
        lo, hi = ratio
        rows.report_only("normal_ratio_min", lo, PROV["normal_ratio"])
        rows.report_only("normal_ratio_max", hi, PROV["normal_ratio"])
        if lo > 0:
            rows.report_only("normal_ratio_spread", hi / lo, PROV["normal_ratio"], target=f"<= {MASS_BALANCE_SPREAD}")
    osc = _guarded(result, "oscillation_decay", "oscillation", oscillation_decay,
                   u, P, heights[:4], center=x0)
    if osc is not None:
        for r, o in zip(osc.scales, osc.oscillations):
            rows.report_only(f"oscillation_r{r:.4g}", o, PROV["oscillation"])
    hess = _guarded(result, "tangential_hessian", "hessian", tangential_hessian_bound,
                    u, x0, heights[:4], normal=normal)
    if hess is not None:
        rows.report_only("tangential_hessian_spread", hess.spread, PROV["hessian"])
    expansion = _guarded(result, "boundary_expansion", "expansion", boundary_expansion_fit,
                         u, x0, normal, P, 0.5 * (xmax - xmin))
    if expansion is not None:
        rows.report_only("expansion_p1", expansion.p1, PROV["expansion"])
        rows.report_only("expansion_p2", expansion.p2, PROV["expansion"])
        rows.report_only("expansion_remainder", expansion.remainder, PROV["expansion"])

    result.artifacts["potential"] = u.to_dict()
    result.artifacts["sections"] = {"stats": [s.to_dict() for s in stats], "h_floor": h_floor}


# ---------------------------------------------------------------------------
# curved2d
# ---------------------------------------------------------------------------

def _random_halfplanes(body: ConvexBody, count: int, seed: int) -> list[ConvexBody]:
    rng = np.random.default_rng(seed)
    c = barycenter(body)
    sets = []
    while len(sets) < count:
        angle = rng.uniform(0.0, 2.0 * math.pi)
        n = np.array([math.cos(angle), math.sin(angle)])
        offset = float(n @ c) + rng.uniform(-0.4, 0.4) * body.diameter
        clipped = clip_halfplane(body, n, offset)
        if clipped is not None:
            sets.append(clipped)
    return sets


def _suite_points(body: ConvexBody) -> list[np.ndarray]:
    c = barycenter(body)
    xmin, _, xmax, _ = body.bounds
    half = 0.25 * (xmax - xmin)
    return [c, c + np.array([half, 0.0]), c - np.array([0.0, 0.5 * half])]


def _theta(cfg: ExperimentConfig, mu_f, nu_g, n_cells: int) -> tuple[Any, PotentialField, TransportSolution]:
    mu = discretize(mu_f, n_cells)
    nu = discretize(nu_g, n_cells)
    sol = _solve(cfg, mu, nu)
    u = brenier_potential(sol)
    return obliqueness(u, mu_f.body, nu_g.body, cfg.analysis.boundary_samples), u, sol


def run_curved2d(result: ExperimentResult) -> None:
    cfg = result.config
    rows = result.rows
    an = cfg.analysis
    mu_f = cfg.source.density(cfg.alpha)
    nu_g = cfg.target.density(cfg.beta)

    out = _guarded(result, "theta", "theta", _theta, cfg, mu_f, nu_g, cfg.solver.n_cells)
    if out is None:
        return
    theta, u, sol = out
    rows.check_at_least("theta", theta.theta, THETA_FLOOR, PROV["theta"])
    rows.report_only("theta_skipped", theta.n_skipped, PROV["theta"])
    _report_certificates(result, sol)

    push = pushforward_check(sol, _random_halfplanes(mu_f.body, N_HALFPLANES, cfg.seed))
    rows.check_at_most("pushforward_discrepancy", push.discrepancy, push.bound, PROV["pushforward"])
    rows.report_only("pushforward_band_atoms", push.band_atoms, PROV["pushforward"])
    rows.report_only("pushforward_row_discrepancy", push.row_discrepancy, PROV["pushforward"])

    if cfg.source == cfg.target and cfg.alpha == cfg.beta:
        rows.check_at_most("identity_cost", sol.cost, IDENTITY_COST, PROV["identity"])
        rows.check_close("identity_theta", theta.theta, 1.0, THETA_DRIFT, PROV["identity"])

    if an.refine:
        fine = _guarded(result, "theta_refined", "theta_refine", _theta, cfg, mu_f, nu_g, 2 * cfg.solver.n_cells)
        if fine is not None:
            rows.report_only("theta_refined", fine[0].theta, PROV["theta_refine"])
            rows.check_at_most("theta_refinement_change", abs(fine[0].theta - theta.theta), THETA_DRIFT,
                               PROV["theta_refine"])

    v = legendre_transform(u, body=nu_g.body)
    heights = dyadic_heights(an.h_max, SUITE_HEIGHTS)
    suite = _guarded(result, "section_properties", "suite", section_property_suite,
                     u, v, _suite_points(mu_f.body), heights, centered=an.centered)
    if suite is not None:
        summary = suite.summary()
        for key in ("n_records", "n_truncated", "min_t0", "max_amp_constant", "volume_r",
                    "min_duality_c", "min_centered_c"):
            if summary[key] is not None:
                rows.report_only(key, summary[key], PROV["suite"])
        result.artifacts["section_properties"] = suite.to_dict()

    result.artifacts["potential"] = u.to_dict()
    result.artifacts["obliqueness"] = theta.to_dict() | {"values": list(theta.values)}


# ---------------------------------------------------------------------------
# grushin
# ---------------------------------------------------------------------------

def _boundary_extremes(data: np.ndarray) -> tuple[float, float]:
    edges = np.concatenate([data[-1, :], data[1:, 0], data[1:, -1]])
    return float(edges.min()), float(edges.max())


def run_grushin(result: ExperimentResult) -> None:
    cfg = result.config
    rows = result.rows
    grids = cfg.solver.grushin_grids
    alpha, beta = cfg.alpha, cfg.beta

    study = grushin_convergence(alpha, beta, grids=grids)
    for (n0, n1), r in zip(zip(grids, grids[1:]), study.ratios):
        rows.check_at_least(f"richardson_ratio_{n0}_{n1}", r, RICHARDSON_FLOOR, PROV["richardson"])
    for n, e in zip(grids, study.errors):
        rows.report_only(f"kernel_error_{n}", e, PROV["richardson"])
    if alpha == beta:
        # the kernel is quadratic and the stencils are exact on it
        rows.check_at_most("kernel_poly_residual", max(study.kernel_residuals), KERNEL_RESIDUAL_TOL, PROV["kernel"])
    else:
        for n, res in zip(grids, study.kernel_residuals):
            rows.report_only(f"kernel_poly_residual_{n}", res, PROV["kernel"])
        # the residual is the stencils' truncation error, so it decays at a known order
        expected = kernel_residual_order(ModelProfile(alpha, beta))
        for (n0, n1), order in zip(zip(grids, grids[1:]), study.kernel_orders):
            rows.check_close(f"kernel_residual_order_{n0}_{n1}", order, expected, KERNEL_ORDER_TOL,
                             PROV["kernel_order"])
    fit = _guarded(result, "convergence_order", "richardson", fit_loglog, study.spacings, study.errors)
    if fit is not None:
        rows.report_only("convergence_order", fit.estimate, PROV["richardson"], target="1")
        result.plots.append(FitPlot("grushin_convergence", study.spacings, study.errors, fit.estimate,
                                    fit.intercept, 1.0, title=f"Grushin error, alpha={alpha}, beta={beta}",
                                    xlabel="1/n", ylabel="max error"))

    P = ModelProfile(alpha, beta)
    kp = kernel_polynomial(1.0, 0.25, P)
    n0 = grids[0]
    try:
        direct = grushin_solve(GrushinProblem(alpha, beta, nx=n0, ny=n0, dirichlet=kp))
        it = grushin_solve(GrushinProblem(alpha, beta, nx=n0, ny=n0, dirichlet=kp), method="gmres")
        rows.check_at_most("gmres_residual", it.residual, GMRES_RESIDUAL_TOL, PROV["gmres"])
        rows.report_only("gmres_iterations", it.iterations, PROV["gmres"])
        rows.report_only("gmres_direct_gap", float(np.abs(it.w - direct.w).max()), PROV["gmres"])
    except GrushinConvergenceError as exc:
        rows.failure("gmres_residual", f"{exc}; last residuals {exc.residual_history[-3:]}", PROV["gmres"])

    const = grushin_solve(GrushinProblem(alpha, beta, nx=n0, ny=n0, dirichlet=lambda X1, XN: np.ones_like(X1)))
    rows.check_at_most("constant_data_error", float(np.abs(const.w - 1.0).max()), MAX_PRINCIPLE_TOL,
                       PROV["constant"])

    rng = np.random.default_rng(cfg.seed)
    data = rng.uniform(-1.0, 1.0, size=(n0 + 1, n0 + 1))
    noisy = grushin_solve(GrushinProblem(alpha, beta, nx=n0, ny=n0, dirichlet=lambda X1, XN: data))
    lo, hi = _boundary_extremes(data)
    interior = noisy.w[1:n0, 1:n0]
    excess = max(float(interior.max()) - hi, lo - float(interior.min()), 0.0)
    rows.check_at_most("max_principle_excess", excess, MAX_PRINCIPLE_TOL, PROV["max_principle"])

    result.artifacts["convergence"] = {"grids": list(grids), "errors": study.errors, "ratios": study.ratios,
                                       "kernel_residuals": study.kernel_residuals}


# ---------------------------------------------------------------------------
# liouville
# ---------------------------------------------------------------------------

def run_liouville(result: ExperimentResult) -> None:
    cfg = result.config
    rows = result.rows
    an = cfg.analysis
    alpha, beta = cfg.alpha, cfg.beta
    P = ModelProfile(alpha, beta)
    rng = np.random.default_rng(cfg.seed)

    u = sample_profile(P.evaluate, 1.0, 1.0, PROFILE_GRID)
    exact = liouville_check(u, P)
    model = model_coefficients(P)
    rows.check_at_most("liouville_exact_error", float(np.abs(exact.coefficients() - model).max()),
                       LIOUVILLE_EXACT_TOL, PROV["liouville_exact"])

    noisy_u = PotentialField(u.points, u.values + rng.normal(0.0, an.noise, len(u)), u.gradients,
                             u.body, u.window, u.spacing)
    noisy = liouville_check(noisy_u, P)
    rows.check_at_most("liouville_noisy_error", float(np.abs(noisy.coefficients() - model).max()),
                       LIOUVILLE_NOISY_TOL, PROV["liouville_noisy"])
    rows.check_at_least("liouville_min_pn", min(exact.p_n, noisy.p_n), 0.0, PROV["liouville_sign"])
    rows.check_at_least("liouville_min_P_prime", min(exact.P_prime, noisy.P_prime), 0.0, PROV["liouville_sign"])

    pts = np.column_stack([rng.uniform(-1.0, 1.0, N_MA_POINTS), rng.uniform(0.0, 1.0, N_MA_POINTS)])
    pts = pts[pts[:, 1] > 0]
    rows.check_at_most("ma_identity_residual", verify_ma_identity(P, pts), MA_IDENTITY_TOL, PROV["ma_identity"])
    q = normalized_diagonal(2.0, alpha, beta)
    rows.check_at_least("renormalization_normalized", float(determinant_normalized(q, alpha, beta)), 1.0,
                        PROV["renormalized"])
    rows.check_at_most("renormalized_ma_residual", float(np.abs(renormalize(P, q).ma_residual(pts)).max()),
                       MA_IDENTITY_TOL, PROV["renormalized"])

    m = [mass_balance_ratio(profile_section(P, h), alpha, beta) for h in dyadic_heights(an.h_max, an.n_heights)]
    rows.check_at_most("profile_mass_balance_variation", (max(m) - min(m)) / max(m), PROFILE_BALANCE_TOL,
                       PROV["profile_balance"])

    lam = 0.5 * lambda_max(alpha, beta)
    hx = holder_exponents(alpha, beta, lam)
    rows.report_only("holder_lambda", hx.lam, PROV["holder"])
    rows.report_only("holder_mu", hx.mu, PROV["holder"])
    rows.report_only("holder_omega", hx.omega, PROV["holder"])
    rows.report_only("map_regularity", hx.map_regularity, PROV["holder"])

    ts = [1.0, 0.5, 0.25, 0.125]
    trend = rescaled_residuals(noisy_u, P, ts)
    for t, fit in trend:
        rows.report_only(f"rescaled_residual_t{t:g}", fit.residual_max, PROV["rescaled"])

    result.artifacts["liouville"] = {"exact": exact.to_dict(), "noisy": noisy.to_dict(), "model": model,
                                     "rescaled": [{"t": t, **fit.to_dict()} for t, fit in trend]}


# ---------------------------------------------------------------------------
# Dispatch and output
# ---------------------------------------------------------------------------

RUNNERS: dict[str, Callable[[ExperimentResult], None]] = {
    "exp1d": run_exp1d,
    "doubling": run_doubling,
    "flat2d": run_flat2d,
    "curved2d": run_curved2d,
    "grushin": run_grushin,
    "liouville": run_liouville,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run one experiment; any numerical failure ends up as a failing row."""
    cfg.validate()
    result = ExperimentResult(cfg, RowBuilder(cfg.experiment, cfg.params))
    runner = RUNNERS[cfg.experiment]
    start = time.monotonic()
    logger.info(f"run_experiment: {cfg.experiment} {cfg.params}")
    try:
        runner(result)
    except (ValueError, RuntimeError) as exc:
        logger.error(f"run_experiment: {cfg.experiment} aborted: {exc}")
        result.rows.failure(f"{cfg.experiment}_run", f"{type(exc).__name__}: {exc}",
                            f"{cfg.experiment} completed without a numerical failure")
    result.elapsed = time.monotonic() - start
    n_fail = sum(1 for r in result.report_rows if r.asserted and not r.passed)
    logger.info(f"run_experiment: {cfg.experiment} done in {result.elapsed:.1f}s, "
                f"{len(result.report_rows)} rows, {n_fail} failing")
    return result


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """results.csv, manifest.json, one SVG per fit and the msgpack artifacts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = result.report_rows
    written = [
        write_csv(rows, out / "results.csv"),
        write_manifest(rows, out / "manifest.json",
                       extra={"experiment": result.config.experiment, "params": result.config.params}),
    ]
    for p in result.plots:
        written.append(render_plot(p, out))
    if result.plots:
        written.append(save_artifact({"plots": [p.to_dict() for p in result.plots]}, out / "plots.msgpack"))
    for name, obj in result.artifacts.items():
        written.append(save_artifact(obj, out / f"{name}.msgpack"))
    return written


def render_plot(p: FitPlot, out_dir: str | Path) -> Path:
    return plot_loglog(p.x, p.y, p.slope, p.intercept, Path(out_dir) / f"{p.name}.svg",
                       title=p.title, xlabel=p.xlabel, ylabel=p.ylabel, predicted=p.predicted)


def replot(run_dir: str | Path) -> list[Path]:
    """Re-render the SVG plots of a finished run from its plots.msgpack."""
    src = Path(run_dir) / "plots.msgpack"
    if not src.exists():
        return []
    return [render_plot(FitPlot.from_dict(d), run_dir) for d in load_artifact(src)["plots"]]
