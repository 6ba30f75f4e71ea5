"""
Tests for the linearized flat operator and its discrete solver.

Covers:
  - kernel polynomials: exact annihilation when alpha == beta, truncation order otherwise
  - exact reproduction of constant data and the discrete maximum principle
  - direct vs ILU-preconditioned gmres solves
  - first-order convergence on refined grids
  - problem validation
"""

import numpy as np
import pytest

from flatmodel import (
    GrushinProblem,
    ModelProfile,
    grushin_apply,
    grushin_convergence,
    grushin_solve,
    kernel_polynomial,
    kernel_residual_order,
)


def _random_data(problem: GrushinProblem, seed: int = 0):
    X1, _ = problem.grid()
    vals = np.random.default_rng(seed).uniform(-1.0, 1.0, X1.shape)
    return lambda a, b: vals


def _with_data(alpha: float, beta: float, n: int, data) -> GrushinProblem:
    return GrushinProblem(alpha, beta, nx=n, ny=n, dirichlet=data)


# ---------------------------------------------------------------------------
# Operator and kernel
# ---------------------------------------------------------------------------

class TestKernel:
    @pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (0.0, 0.0), (2.0, 2.0)])
    def test_kernel_annihilated_when_exponents_match(self, alpha, beta):
        kp = kernel_polynomial(1.0, 0.25, ModelProfile(alpha, beta))
        problem = _with_data(alpha, beta, 16, kp)
        X1, XN = problem.grid()
        assert np.abs(grushin_apply(kp(X1, XN), problem)).max() <= 1e-8

    @pytest.mark.parametrize("alpha,beta", [(1.0, 0.0), (2.0, 1.0), (0.0, 1.0), (2.0, 0.0), (3.0, 1.0)])
    def test_kernel_residual_truncation_order(self, alpha, beta):
        P = ModelProfile(alpha, beta)
        kp = kernel_polynomial(1.0, 0.25, P)
        residuals = []
        for n in (16, 32, 64):
            problem = _with_data(alpha, beta, n, kp)
            X1, XN = problem.grid()
            residuals.append(float(np.abs(grushin_apply(kp(X1, XN), problem)).max()))
        assert min(residuals) > 0
        orders = np.log2(np.array(residuals[:-1]) / np.array(residuals[1:]))
        np.testing.assert_allclose(orders, kernel_residual_order(P), atol=0.05)

    def test_truncation_order_caps_at_two(self):
        assert kernel_residual_order(ModelProfile(1.0, 1.0)) == 0.0
        assert kernel_residual_order(ModelProfile(0.0, 1.0)) == pytest.approx(-0.5)
        assert kernel_residual_order(ModelProfile(5.0, 0.0)) == 2.0

    def test_kernel_normal_coefficient(self):
        kp = kernel_polynomial(2.0, 0.0, ModelProfile(2.0, 1.0))
        assert kp.p_n == pytest.approx(-1.0)
        assert kp.normal_derivative(np.zeros(1), np.zeros(1))[0] == 0.0

    def test_apply_rejects_wrong_shape(self):
        problem = _with_data(1.0, 1.0, 8, lambda a, b: 0.0 * a)
        with pytest.raises(ValueError, match="field must have shape"):
            grushin_apply(np.zeros((3, 3)), problem)


# ---------------------------------------------------------------------------
# Discrete solves
# ---------------------------------------------------------------------------

class TestSolve:
    def test_constant_data_reproduced(self):
        problem = _with_data(2.0, 1.0, 16, lambda a, b: np.full_like(a, 3.0))
        sol = grushin_solve(problem)
        np.testing.assert_allclose(sol.w, 3.0, atol=1e-10)

    @pytest.mark.parametrize("alpha,beta", [(2.0, 0.0), (0.0, 3.0)])
    def test_maximum_principle(self, alpha, beta):
        base = _with_data(alpha, beta, 20, None)
        data = _random_data(base, seed=4)
        sol = grushin_solve(_with_data(alpha, beta, 20, data))
        vals = data(None, None)
        assert sol.w.max() <= vals.max() + 1e-10
        assert sol.w.min() >= vals.min() - 1e-10

    def test_gmres_matches_direct(self):
        kp = kernel_polynomial(1.0, 0.25, ModelProfile(1.0, 0.5))
        problem = _with_data(1.0, 0.5, 24, kp)
        direct = grushin_solve(problem)
        iterative = grushin_solve(problem, method="gmres")
        assert iterative.residual <= 1e-8
        assert iterative.iterations >= 1
        np.testing.assert_allclose(iterative.w, direct.w, atol=1e-6)

    def test_unknown_method(self):
        problem = _with_data(1.0, 1.0, 8, lambda a, b: 0.0 * a)
        with pytest.raises(ValueError, match="Unknown method"):
            grushin_solve(problem, method="jacobi")

    def test_missing_data(self):
        with pytest.raises(ValueError, match="Dirichlet data"):
            grushin_solve(GrushinProblem(1.0, 1.0, nx=8, ny=8))

    def test_grid_too_coarse(self):
        with pytest.raises(ValueError, match="too coarse"):
            GrushinProblem(1.0, 1.0, nx=1, ny=8)

    def test_refined_doubles_grid(self):
        p = GrushinProblem(1.0, 1.0, nx=8, ny=6).refined()
        assert (p.nx, p.ny) == (16, 12)


# ---------------------------------------------------------------------------
# Convergence
# ---------------------------------------------------------------------------

class TestConvergence:
    def test_coarse_grid_error_is_small(self):
        study = grushin_convergence(1.0, 1.0, grids=(16,))
        assert study.errors[0] < 0.1
        assert study.ratios == []
        assert study.spacings == [1.0 / 16]

    @pytest.mark.slow
    def test_first_order_ratios(self):
        study = grushin_convergence(1.0, 1.0, grids=(32, 64, 128))
        assert all(r >= 1.5 for r in study.ratios)
        assert max(study.kernel_residuals) <= 1e-8
        assert study.errors[-1] < study.errors[0]

    def test_study_reports_kernel_orders(self):
        study = grushin_convergence(2.0, 0.0, grids=(16, 32, 64))
        assert len(study.kernel_orders) == 2
        np.testing.assert_allclose(study.kernel_orders, 2.0, atol=0.05)
