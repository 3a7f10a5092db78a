import numpy as np
import pytest

from src.core.baselines import (
    KernelParams,
    full_tensor_features,
    gaussian_gram,
    gaussian_kernel,
    kernel_approximation_errors,
    krr_dual_fit,
    krr_dual_predict,
    krr_dual_solve,
    primal_objective,
    primal_ridge_fit,
    rff_ridge_fit,
    rff_ridge_predict,
)
from src.core.errors import CapacityError, InvalidParameterError, NumericalFailureError, ShapeMismatchError
from src.core.features import FeatureConfig, RFFConfig, feature_matrix, product_kernel_approx


class TestGaussianKernel:
    def test_identical_points(self):
        assert gaussian_kernel([0.3, -1.2], [0.3, -1.2], KernelParams(lengthscale=0.7)) == 1.0

    def test_one_over_e_at_root_two_lengthscales(self):
        l = 0.4
        value = gaussian_kernel([0.0, 0.0], [l * np.sqrt(2.0), 0.0], KernelParams(lengthscale=l))
        assert value == pytest.approx(np.exp(-1.0), rel=1e-12)

    def test_symmetric(self, rng):
        x, x2 = rng.standard_normal((2, 3))
        params = KernelParams(lengthscale=0.9)
        assert gaussian_kernel(x, x2, params) == gaussian_kernel(x2, x, params)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            gaussian_kernel([0.0, 1.0], [0.0], KernelParams(lengthscale=1.0))

    def test_gram_matches_pointwise_kernel(self, rng):
        X = rng.uniform(-1, 1, (5, 2))
        params = KernelParams(lengthscale=0.5)
        K = gaussian_gram(X, X, params)
        for i in range(5):
            for j in range(5):
                assert K[i, j] == pytest.approx(gaussian_kernel(X[i], X[j], params), rel=1e-12)

    def test_gram_is_positive_definite(self, rng):
        X = rng.uniform(-1, 1, (100, 3))
        np.linalg.cholesky(gaussian_gram(X, X, KernelParams(lengthscale=0.2)))


class TestDualKRR:
    def test_single_point(self):
        alpha = krr_dual_fit(np.array([[0.2]]), np.array([3.0]), KernelParams(lengthscale=1.0), 0.5)
        assert alpha[0] == pytest.approx(3.0 / 1.5, rel=1e-14)

    def test_interpolates_without_regularization(self):
        X = np.arange(10.0)[:, None]
        y = np.sin(X[:, 0])
        params = KernelParams(lengthscale=0.5)
        alpha = krr_dual_fit(X, y, params, 0.0)
        np.testing.assert_allclose(krr_dual_predict(X, alpha, X, params), y, atol=1e-6)

    def test_matches_dense_solve(self, rng):
        X = rng.uniform(0, 1, (50, 2))
        y = rng.standard_normal(50)
        params = KernelParams(lengthscale=0.3)
        K = gaussian_gram(X, X, params)
        expected = np.linalg.solve(K + 1e-5 * np.eye(50), y)
        alpha = krr_dual_fit(X, y, params, 1e-5)
        assert np.linalg.norm(alpha - expected) <= 1e-6 * np.linalg.norm(expected)

    def test_capacity(self, rng):
        with pytest.raises(CapacityError):
            krr_dual_fit(rng.standard_normal((6, 2)), np.zeros(6), KernelParams(lengthscale=1.0), 1e-3, cap=5)

    def test_gram_shape_check(self):
        with pytest.raises(ShapeMismatchError):
            krr_dual_solve(np.eye(3), np.zeros(2), 1.0)


class TestPrimalRidge:
    def test_identity_features(self):
        y = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(primal_ridge_fit(np.eye(3), y, 0.0), y)

    def test_huge_regularization(self, rng):
        w = primal_ridge_fit(rng.standard_normal((20, 4)), rng.standard_normal(20), 1e12)
        assert np.linalg.norm(w) < 1e-6

    def test_singular_without_regularization(self):
        Phi = np.column_stack([np.ones(5), np.zeros(5)])
        with pytest.raises(NumericalFailureError):
            primal_ridge_fit(Phi, np.ones(5), 0.0)

    def test_non_finite_features(self):
        with pytest.raises(InvalidParameterError):
            primal_ridge_fit(np.array([[np.inf], [1.0]]), np.ones(2), 1.0)

    def test_primal_dual_equivalence(self, rng):
        cfg = FeatureConfig.uniform(3, 0.5, 0.625, 2)
        X = rng.uniform(-0.5, 0.5, (15, 2))
        y = rng.standard_normal(15)
        Phi = full_tensor_features(X, cfg)
        lam = 1e-2

        primal = Phi @ primal_ridge_fit(Phi, y, lam)
        K = Phi @ Phi.T
        dual = K @ krr_dual_solve(K, y, lam)
        np.testing.assert_allclose(primal, dual, rtol=1e-8, atol=1e-10)

    def test_objective(self):
        Phi = np.eye(2)
        assert primal_objective(Phi, np.array([1.0, 1.0]), np.array([1.0, 0.0]), 0.5) == pytest.approx(1.5)


class TestFullTensorFeatures:
    def test_single_dimension_is_feature_matrix(self, rng):
        cfg = FeatureConfig.uniform(5, 0.4, 0.625, 1)
        X = rng.uniform(-0.5, 0.5, (7, 1))
        np.testing.assert_array_equal(full_tensor_features(X, cfg), feature_matrix(X[:, 0], 0, cfg))

    def test_rows_reproduce_product_kernel(self, rng):
        cfg = FeatureConfig.uniform(3, 0.4, 0.625, 3)
        X = rng.uniform(-0.5, 0.5, (4, 3))
        Phi = full_tensor_features(X, cfg)
        assert Phi.shape == (4, 27)
        for i in range(4):
            for j in range(4):
                assert Phi[i] @ Phi[j] == pytest.approx(product_kernel_approx(X[i], X[j], cfg), rel=1e-12, abs=1e-14)

    def test_boundary_row_is_zero(self):
        cfg = FeatureConfig.uniform(3, 0.4, 0.625, 2)
        Phi = full_tensor_features(np.array([[-0.625, -0.625], [0.1, 0.2]]), cfg)
        assert np.all(Phi[0] == 0.0)

    def test_capacity(self):
        cfg = FeatureConfig.uniform(10, 0.4, 0.625, 7)
        with pytest.raises(CapacityError):
            full_tensor_features(np.zeros((1, 7)), cfg)


class TestRFFRidge:
    def test_fit_and_predict_shapes(self, rng):
        X = rng.uniform(-0.5, 0.5, (30, 2))
        y = np.sin(4 * X[:, 0])
        cfg = RFFConfig.from_seed(40, 2, 0.3, seed=1)
        w = rff_ridge_fit(X, y, cfg, 1e-4)
        pred = rff_ridge_predict(X, w, cfg)
        assert w.shape == (40,)
        assert np.mean((pred - y) ** 2) < np.mean(y ** 2)


class TestKernelApproximation:
    def test_error_decays_with_m_hat(self):
        rows = kernel_approximation_errors(0.3, 1.0, [4, 8, 16, 32], grid=100, extent=0.5)
        sup = [r["sup_error"] for r in rows]
        assert sup[0] > sup[1]
        assert all(b <= a + 1e-12 for a, b in zip(sup, sup[1:]))
        # the Dirichlet boundary at U = 1 floors the error near exp(-1 / (2 * 0.3^2))
        assert sup[-1] < 5e-3

    def test_mean_below_sup(self):
        rows = kernel_approximation_errors(0.3, 1.0, [8], grid=20, extent=0.5)
        assert len(rows) == 1
        assert rows[0]["mean_error"] <= rows[0]["sup_error"]

    def test_two_point_grid(self):
        rows = kernel_approximation_errors(0.3, 1.0, [4, 8], grid=2, extent=0.5)
        assert all(np.isfinite(r["sup_error"]) for r in rows)

    @pytest.mark.parametrize("grid, extent", [(1, 0.5), (10, 1.5), (10, 0.0)])
    def test_invalid_arguments(self, grid, extent):
        with pytest.raises(InvalidParameterError):
            kernel_approximation_errors(0.3, 1.0, [4], grid=grid, extent=extent)
