"""
Tests for discrete planar transport.

Covers:
  - DiscreteMeasure validation and discretize
  - exact LP solutions on a translated measure (cost, marginals, duals)
  - entropic solutions: agreement with the LP, violation history, failures
  - Brenier potentials, anchoring and the discrete Legendre transform
  - push-forward and cyclical monotonicity certificates, on fixed and seeded random instances
  - the LP against linear_sum_assignment and the entropic solver against the LP
"""

import numpy as np
import pytest
from scipy import sparse
from scipy.optimize import linear_sum_assignment

from geometry import ConvexBody, clip_halfplane
from measures import PowerDensity
from transport2d import (
    SQ,
    DiscreteMeasure,
    LPCapExceeded,
    PotentialField,
    SinkhornConvergenceError,
    TransportSolution,
    brenier_potential,
    cost_matrix,
    cyclical_monotonicity_violation,
    default_schedule,
    discretize,
    dual_feasibility,
    duality_gap,
    fenchel_young_gap,
    legendre_transform,
    marginal_violation,
    pushforward_check,
    solve_entropic,
    solve_lp,
)

SHIFT = np.array([2.0, 0.0])


def _grid_measure(n_cells: int = 16, alpha: float = 0.0) -> DiscreteMeasure:
    return discretize(PowerDensity(ConvexBody.box(0.0, 0.0, 1.0, 1.0), alpha), n_cells)


def _translation_pair() -> tuple[DiscreteMeasure, DiscreteMeasure]:
    mu = _grid_measure()
    return mu, mu.translate(SHIFT)


def _random_measure(rng: np.random.Generator, n: int, offset: float = 0.0) -> DiscreteMeasure:
    pts = rng.uniform(0.0, 1.0, size=(n, 2)) + np.array([offset, 0.0])
    return DiscreteMeasure.normalized(pts, rng.uniform(0.5, 1.5, n))


def _random_halfplanes(rng: np.random.Generator, body: ConvexBody, count: int) -> list[ConvexBody]:
    sets = []
    while len(sets) < count:
        angle = rng.uniform(0.0, 2.0 * np.pi)
        n = np.array([np.cos(angle), np.sin(angle)])
        clipped = clip_halfplane(body, n, float(n @ np.array([0.5, 0.5])) + rng.uniform(-0.3, 0.3))
        if clipped is not None:
            sets.append(clipped)
    return sets


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

class TestDiscreteMeasure:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            DiscreteMeasure(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([0.5, 0.6]))

    def test_points_must_be_distinct(self):
        with pytest.raises(ValueError, match="distinct"):
            DiscreteMeasure(np.array([[0.0, 0.0], [0.0, 0.0]]), np.array([0.5, 0.5]))

    def test_discretize_power_density(self):
        mu = _grid_measure(64, alpha=1.0)
        assert len(mu) == 64
        assert mu.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(mu.body.contains(mu.points))
        assert mu.spacing == pytest.approx(0.125)
        assert mu.granularity < 4.0 / 64

    def test_discretize_needs_cells(self):
        with pytest.raises(ValueError, match="n_cells"):
            _grid_measure(2)


# ---------------------------------------------------------------------------
# Exact solver
# ---------------------------------------------------------------------------

class TestSolveLP:
    def test_translation_cost_and_certificates(self):
        mu, nu = _translation_pair()
        sol = solve_lp(mu, nu)
        assert sol.is_exact
        assert sol.cost == pytest.approx(2.0, rel=1e-10)
        rows, cols = marginal_violation(sol)
        assert rows <= 1e-12 and cols <= 1e-12
        assert abs(duality_gap(sol)) <= 1e-9
        assert dual_feasibility(sol) <= 1e-9
        assert cyclical_monotonicity_violation(sol, n_triples=500) <= 1e-9

    def test_squared_convention_doubles_cost(self):
        mu, nu = _translation_pair()
        assert solve_lp(mu, nu, convention=SQ).cost == pytest.approx(4.0, rel=1e-10)

    def test_cap_exceeded(self):
        mu, nu = _translation_pair()
        with pytest.raises(LPCapExceeded, match="LP cap"):
            solve_lp(mu, nu, cap=10)

    def test_unknown_convention(self):
        mu, nu = _translation_pair()
        with pytest.raises(ValueError, match="Unknown cost convention"):
            solve_lp(mu, nu, convention="l1")

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_assignment_on_uniform_instances(self, seed):
        rng = np.random.default_rng(seed)
        mu = DiscreteMeasure.uniform(rng.uniform(0.0, 1.0, size=(10, 2)))
        nu = DiscreteMeasure.uniform(rng.uniform(0.0, 1.0, size=(10, 2)))
        C = cost_matrix(mu.points, nu.points)
        r, c = linear_sum_assignment(C)
        assert solve_lp(mu, nu).cost == pytest.approx(C[r, c].sum() / 10, rel=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_support_cyclically_monotone_on_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        sol = solve_lp(_random_measure(rng, 40), _random_measure(rng, 50))
        assert cyclical_monotonicity_violation(sol, n_triples=2000, seed=seed) <= 1e-9
        assert abs(duality_gap(sol)) <= 1e-9


# ---------------------------------------------------------------------------
# Entropic solver
# ---------------------------------------------------------------------------

class TestSolveEntropic:
    def test_agrees_with_lp(self):
        mu, nu = _translation_pair()
        exact = solve_lp(mu, nu).cost
        sol = solve_entropic(mu, nu)
        assert not sol.is_exact
        assert sol.cost == pytest.approx(exact, rel=1e-2)
        assert sum(marginal_violation(sol)) <= 1e-6

    def test_violation_history_nonincreasing(self):
        mu, nu = _translation_pair()
        sol = solve_entropic(mu, nu)
        h = sol.violation_history
        assert len(h) == len(default_schedule(mu, nu))
        for prev, cur in zip(h, h[1:]):
            assert cur <= max(prev, 1e-11)

    def test_hard_c_transform_duals_are_feasible(self):
        mu, nu = _translation_pair()
        sol = solve_entropic(mu, nu)
        assert dual_feasibility(sol) <= 1e-12

    def test_stall_raises_with_history(self):
        mu, nu = _translation_pair()
        with pytest.raises(SinkhornConvergenceError, match="stalled") as exc:
            solve_entropic(mu, nu, max_iter=1)
        assert exc.value.violation > 0

    def test_schedule_must_decrease(self):
        mu, nu = _translation_pair()
        with pytest.raises(ValueError, match="strictly decreasing"):
            solve_entropic(mu, nu, eps_schedule=[1.0, 2.0])

    def test_schedule_floor(self):
        mu, nu = _translation_pair()
        with pytest.raises(ValueError, match="below"):
            solve_entropic(mu, nu, eps_schedule=[1.0, 1e-9])

    @pytest.mark.slow
    def test_cost_close_to_lp_on_random_instances(self):
        rng = np.random.default_rng(2024)
        for _ in range(20):
            mu, nu = _random_measure(rng, 100), _random_measure(rng, 100, offset=1.0)
            exact = solve_lp(mu, nu).cost
            assert solve_entropic(mu, nu).cost == pytest.approx(exact, rel=1e-2)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

class TestPotentials:
    def test_brenier_gradients_follow_translation(self):
        mu, nu = _translation_pair()
        u = brenier_potential(solve_lp(mu, nu))
        np.testing.assert_allclose(u.gradients, mu.points + SHIFT, atol=1e-12)
        assert u.convexity_violation() <= 1e-9

    def test_anchor_and_flatten(self):
        mu, nu = _translation_pair()
        anchor = mu.points[5]
        u = brenier_potential(solve_lp(mu, nu), anchor=anchor, flatten=True)
        assert u.support_value(anchor[None, :])[0] == pytest.approx(0.0, abs=1e-12)
        assert np.linalg.norm(u.gradients, axis=1).min() == pytest.approx(0.0, abs=1e-12)
        assert u.meta["anchor"] == anchor.tolist()

    def test_legendre_transform_fenchel_young(self):
        mu, nu = _translation_pair()
        u = brenier_potential(solve_lp(mu, nu))
        v = legendre_transform(u)
        assert len(v) == len(u)
        assert fenchel_young_gap(u, v) <= 1e-9

    def test_envelope_outside_hull(self):
        mu, nu = _translation_pair()
        u = brenier_potential(solve_lp(mu, nu))
        far = np.array([[5.0, 5.0]])
        assert np.isnan(u.interpolate(far)[0])
        assert np.isfinite(u.evaluate(far)[0])

    def test_dict_roundtrip_keeps_body(self):
        mu, nu = _translation_pair()
        u = brenier_potential(solve_lp(mu, nu))
        restored = PotentialField.from_dict(u.to_dict())
        np.testing.assert_allclose(restored.values, u.values)
        assert restored.body.area == pytest.approx(1.0)

    def test_midrange_recovers_quadratic_under_identity(self):
        # the identity coupling splits into one block per atom, so the duals are arbitrary
        mu = discretize(PowerDensity(ConvexBody.box(-1.0, -1.0, 1.0, 1.0), 0.0), 25)
        u = brenier_potential(solve_lp(mu, mu), anchor=np.zeros(2), potential="midrange")
        np.testing.assert_allclose(u.values, 0.5 * (mu.points ** 2).sum(axis=1), atol=1e-12)
        assert u.convexity_violation() <= 1e-12
        assert u.meta["potential"] == "midrange"

    def test_midrange_under_translation(self):
        mu, nu = _translation_pair()
        u = brenier_potential(solve_lp(mu, nu), anchor=mu.points[0], potential="midrange")
        expected = 0.5 * (mu.points ** 2).sum(axis=1) + mu.points @ SHIFT
        assert np.ptp(u.values - expected) <= 1e-12
        assert u.support_value(mu.points[:1])[0] == pytest.approx(0.0, abs=1e-12)

    def test_unknown_potential_kind(self):
        mu, nu = _translation_pair()
        with pytest.raises(ValueError, match="unknown potential"):
            brenier_potential(solve_lp(mu, nu), potential="mean")


# ---------------------------------------------------------------------------
# Push-forward
# ---------------------------------------------------------------------------

class TestPushforward:
    def test_exact_solution_within_bound(self):
        mu, nu = _translation_pair()
        sol = solve_lp(mu, nu)
        sets = [ConvexBody.box(0.0, 0.0, 0.5, 1.0), ConvexBody.box(0.2, 0.3, 0.9, 0.6)]
        report = pushforward_check(sol, sets)
        assert report.n_sets == 2
        assert report.granularity == pytest.approx(1.0 / 16.0)
        # a translation sends each set onto its own image
        assert report.discrepancy == pytest.approx(0.0, abs=1e-12)
        assert report.row_discrepancy == pytest.approx(0.0, abs=1e-12)
        assert report.passed

    def test_whole_domain_has_no_discrepancy(self):
        mu, nu = _translation_pair()
        report = pushforward_check(solve_lp(mu, nu), [ConvexBody.box(0.0, 0.0, 1.0, 1.0)])
        assert report.discrepancy == pytest.approx(0.0, abs=1e-12)
        assert report.band_atoms == 0

    def test_product_coupling_is_rejected(self):
        # mu x nu keeps both marginals but sends half of B's mass outside B's image
        mu, nu = _translation_pair()
        sol = TransportSolution(mu, nu, sparse.csr_matrix(np.outer(mu.weights, nu.weights)),
                                np.zeros(len(mu)), np.zeros(len(nu)))
        report = pushforward_check(sol, [ConvexBody.box(0.0, 0.0, 0.5, 1.0)])
        assert report.row_discrepancy == pytest.approx(0.0, abs=1e-12)
        assert report.discrepancy == pytest.approx(0.5, abs=1e-12)
        assert report.band_atoms == 4
        assert report.bound == pytest.approx(3.0 / 16.0)
        assert not report.passed

    def test_needs_test_sets(self):
        mu, nu = _translation_pair()
        with pytest.raises(ValueError, match="at least one test set"):
            pushforward_check(solve_lp(mu, nu), [])

    @pytest.mark.parametrize("seed", range(5))
    def test_affine_map_instances(self, seed):
        # the gradient of x.Ax/2 + b.x with A symmetric positive definite is the unique optimal map
        rng = np.random.default_rng(seed)
        theta = rng.uniform(0.0, np.pi)
        R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        A = R @ np.diag(rng.uniform(0.5, 2.0, 2)) @ R.T
        pts = rng.uniform(0.0, 1.0, size=(60, 2))
        weights = rng.uniform(0.5, 1.5, 60)
        unit = ConvexBody.box(0.0, 0.0, 1.0, 1.0)
        mu = DiscreteMeasure.normalized(pts, weights, body=unit)
        nu = DiscreteMeasure.normalized(pts @ A.T + rng.uniform(-1.0, 1.0, 2), weights)
        sol = solve_lp(mu, nu)

        report = pushforward_check(sol, _random_halfplanes(rng, unit, 50))
        assert report.n_sets == 50
        assert report.discrepancy <= 1e-12
        assert report.passed
        assert cyclical_monotonicity_violation(sol, n_triples=2000, seed=seed) <= 1e-9
