"""
Tests for the flat boundary model.

Covers:
  - ModelProfile: Monge-Ampère identity, normal constant, tilts
  - diagonal renormalizations and the determinant normalization
  - admissible Hölder exponents
  - rescalings, cylinders and the discrete MA residual
  - Liouville fits on exact, tilted, noisy and rescaled samples
"""

import numpy as np
import pytest

from flatmodel import (
    Cylinder,
    ModelProfile,
    Rescaling,
    determinant_normalized,
    discrete_ma_residual,
    holder_exponents,
    lambda_bar,
    lambda_max,
    lambda_under,
    liouville_check,
    model_coefficients,
    normalized_diagonal,
    profile_eval,
    renormalize,
    rescale,
    rescaled_residuals,
    sample_profile,
    verify_ma_identity,
)
from transport2d import PotentialField


def _interior_points(n: int = 200, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.uniform(-1.0, 1.0, n), rng.uniform(0.05, 2.0, n)])


# ---------------------------------------------------------------------------
# Profile
# ---------------------------------------------------------------------------

class TestModelProfile:
    @pytest.mark.parametrize("alpha,beta", [(2.0, 0.0), (0.0, 2.0), (1.0, 1.0), (0.5, 3.0)])
    def test_ma_identity(self, alpha, beta):
        assert verify_ma_identity(ModelProfile(alpha, beta), _interior_points()) <= 1e-10

    def test_tilt_keeps_identity(self):
        P = ModelProfile(2.0, 1.0).tilted(0.7)
        assert verify_ma_identity(P, _interior_points()) <= 1e-10
        _, grads, _ = P.evaluate(np.array([[0.0, 0.5]]))
        assert grads[0, 0] == pytest.approx(0.7)

    def test_normal_constant(self):
        P = ModelProfile(2.0, 1.0)
        pts = _interior_points(20)
        _, grads, _ = P.evaluate(pts)
        np.testing.assert_allclose(grads[:, 1] / pts[:, 1] ** P.gamma, P.normal_constant, rtol=1e-12)

    def test_profile_eval_single_point(self):
        P = ModelProfile(1.0, 1.0)
        v, g, h = profile_eval(P, (0.4, 1.0))
        assert v == pytest.approx(0.08 + P.c_u)
        assert tuple(g) == pytest.approx((0.4, 2.0 * P.c_u))
        assert h.shape == (2, 2)
        assert h[0, 0] == pytest.approx(1.0)
        assert h[0, 1] == 0.0

    def test_negative_exponent_rejected(self):
        with pytest.raises(ValueError, match="beta must be"):
            ModelProfile(1.0, -0.5)

    def test_lower_half_plane_rejected(self):
        with pytest.raises(ValueError, match="xn >= 0"):
            ModelProfile(1.0, 1.0).evaluate(np.array([[0.0, -0.1]]))

    def test_identity_needs_interior_points(self):
        with pytest.raises(ValueError, match="xn > 0"):
            verify_ma_identity(ModelProfile(1.0, 1.0), np.array([[0.0, 0.0]]))


# ---------------------------------------------------------------------------
# Renormalizations and exponents
# ---------------------------------------------------------------------------

class TestRenormalization:
    def test_normalized_diagonal_preserves_equation(self):
        alpha, beta = 2.0, 1.0
        q = normalized_diagonal(3.0, alpha, beta)
        assert determinant_normalized(q, alpha, beta)
        R = renormalize(ModelProfile(alpha, beta), q)
        assert np.abs(R.ma_residual(_interior_points())).max() <= 1e-9

    def test_unnormalized_diagonal_breaks_equation(self):
        R = renormalize(ModelProfile(2.0, 1.0), (2.0, 2.0))
        assert not determinant_normalized(R.q, 2.0, 1.0)
        assert np.abs(R.ma_residual(_interior_points())).max() > 1e-3

    def test_nonpositive_entries_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            renormalize(ModelProfile(1.0, 1.0), (1.0, 0.0))


class TestHolderExponents:
    def test_lambda_max_values(self):
        assert lambda_max(2.0, 1.0) == pytest.approx(0.8)
        assert lambda_max(0.0, 1.0) == pytest.approx(2.0 / 3.0)
        assert lambda_max(0.0, 0.0) == pytest.approx(1.0)

    def test_source_heavier_than_target(self):
        h = holder_exponents(2.0, 1.0, 0.4)
        assert h.mu == pytest.approx(0.5)
        assert h.omega == pytest.approx(0.4)
        assert h.map_regularity == pytest.approx(1.4)
        assert h.expansion_order == pytest.approx(1.2)
        assert h.map_class == "C^1.4"

    def test_target_heavier_than_source(self):
        h = holder_exponents(0.0, 1.0, 0.5)
        assert h.mu == pytest.approx(0.5)
        assert h.omega == pytest.approx(0.75)
        assert h.map_regularity == pytest.approx(0.875)

    def test_lambda_out_of_range(self):
        with pytest.raises(ValueError, match="lambda must lie"):
            holder_exponents(2.0, 1.0, 0.9)

    def test_equal_exponents_exclude_one(self):
        with pytest.raises(ValueError, match="< 1"):
            holder_exponents(1.0, 1.0, 1.0)

    def test_flatness_exponents(self):
        assert lambda_bar(0.5, 1.0) == pytest.approx(1.5)
        assert lambda_under(0.5, 3.0) == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# Rescaling
# ---------------------------------------------------------------------------

class TestRescaling:
    def test_diagonal_and_compose(self):
        D = Rescaling(0.25, 1.0)
        assert D.diagonal == pytest.approx((0.5, 0.5))
        assert D.compose(Rescaling(0.5, 1.0)).t == pytest.approx(0.125)
        with pytest.raises(ValueError, match="different gamma"):
            D.compose(Rescaling(0.5, 2.0))

    def test_rescaling_maps_unit_cylinder(self):
        gamma, t = 1.5, 0.3
        corners = Rescaling(t, gamma).apply(np.array([[1.0, 1.0], [-1.0, -1.0]]))
        C = Cylinder((0.0, 0.0), t, gamma)
        assert tuple(corners[0]) == pytest.approx((C.half_width, C.half_height))
        assert tuple(corners[1]) == pytest.approx((-C.half_width, -C.half_height))

    def test_dual_cylinder_height(self):
        C = Cylinder((0.0, 0.0), 0.25, 3.0, dual=True)
        assert C.half_height == pytest.approx(0.25 ** 0.75)
        assert C.contains(np.array([[0.0, 0.3], [0.0, 0.5]])).tolist() == [True, False]
        assert C.to_body(upper_only=True).bounds[1] == 0.0

    def test_profile_is_rescaling_invariant(self):
        P = ModelProfile(2.0, 0.0)
        u = sample_profile(P.evaluate, 1.0, 1.0, 21)
        ut = rescale(u, 0.25, P.gamma)
        v, g, _ = P.evaluate(ut.points)
        np.testing.assert_allclose(ut.values, v, atol=1e-12)
        np.testing.assert_allclose(ut.gradients, g, atol=1e-12)

    def test_rescale_on_probe_points(self):
        P = ModelProfile(1.0, 1.0)
        u = sample_profile(P.evaluate, 1.0, 1.0, 41)
        probes = np.array([[0.3, 0.4], [-0.5, 0.8], [0.0, 0.5]])
        ut = rescale(u, 0.5, P.gamma, points=probes)
        np.testing.assert_allclose(ut.values, P(probes), atol=1e-3)

    def test_rescale_outside_hull(self):
        P = ModelProfile(1.0, 1.0)
        u = sample_profile(P.evaluate, 1.0, 1.0, 11)
        with pytest.raises(ValueError, match="leaves the sampled domain"):
            rescale(u, 4.0, P.gamma, points=np.array([[0.9, 0.9]]))

    def test_discrete_ma_residual_of_profile(self):
        P = ModelProfile(2.0, 1.0)
        pts = np.column_stack([np.linspace(-0.5, 0.5, 7), np.linspace(0.2, 1.0, 7)])
        res = discrete_ma_residual(P, pts, P.alpha, P.beta, step=1e-3)
        assert np.abs(res).max() < 1e-4
        with pytest.raises(ValueError, match="stencil"):
            discrete_ma_residual(P, np.array([[0.0, 1e-4]]), P.alpha, P.beta, step=1e-3)

    def test_sample_profile_layout(self):
        u = sample_profile(ModelProfile(1.0, 1.0).evaluate, 2.0, 1.0, 9)
        assert isinstance(u, PotentialField)
        assert len(u) == 81
        assert u.window.bounds == (-2.0, 0.0, 2.0, 1.0)
        assert u.body.bounds[1] == 0.0
        assert u.spacing == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# Liouville fits
# ---------------------------------------------------------------------------

class TestLiouville:
    def test_exact_profile_recovers_coefficients(self):
        P = ModelProfile(2.0, 1.0)
        fit = liouville_check(sample_profile(P.evaluate, 1.0, 1.0, 17), P)
        np.testing.assert_allclose(fit.coefficients(), model_coefficients(P), atol=1e-10)
        assert fit.residual_max <= 1e-10
        assert fit.pn_positive and fit.P_positive_definite

    def test_tilted_profile(self):
        P = ModelProfile(1.0, 0.0, tilt=-0.4)
        fit = liouville_check(sample_profile(P.evaluate, 1.0, 1.0, 17), P)
        assert fit.p_prime == pytest.approx(-0.4, abs=1e-10)

    def test_noisy_samples(self):
        P = ModelProfile(2.0, 1.0)
        u = sample_profile(P.evaluate, 1.0, 1.0, 33)
        rng = np.random.default_rng(3)
        noisy = PotentialField(u.points, u.values + 1e-3 * rng.standard_normal(len(u)), u.gradients,
                               u.body, u.window, u.spacing)
        fit = liouville_check(noisy, P)
        np.testing.assert_allclose(fit.coefficients(), model_coefficients(P), atol=1e-2)
        assert fit.residual_rms == pytest.approx(1e-3, rel=0.2)

    def test_rescaled_tilt_grows(self):
        P = ModelProfile(1.0, 1.0, tilt=0.3)
        fits = rescaled_residuals(sample_profile(P.evaluate, 1.0, 1.0, 17), P, [1.0, 0.25])
        assert [t for t, _ in fits] == [1.0, 0.25]
        assert fits[0][1].p_prime == pytest.approx(0.3, abs=1e-9)
        assert fits[1][1].p_prime == pytest.approx(0.6, abs=1e-9)
        assert fits[1][1].P_prime == pytest.approx(0.5, abs=1e-9)

    def test_lower_half_plane_samples_rejected(self):
        P = ModelProfile(1.0, 1.0)
        u = sample_profile(P.evaluate, 1.0, 1.0, 5)
        shifted = PotentialField(u.points - [0.0, 0.5], u.values, u.gradients)
        with pytest.raises(ValueError, match="xn >= 0"):
            liouville_check(shifted, P)
