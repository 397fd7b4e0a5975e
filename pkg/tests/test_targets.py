"""Tests for the funnel and Gaussian targets."""

import math

import numpy as np
import pytest

from softabs_hmc.core.base import fd_hessian_partials
from softabs_hmc.core.config import TargetConfig
from softabs_hmc.core.errors import DivergenceError
from softabs_hmc.targets import FunnelModel, GaussianModel, build_target, target_registry

from conftest import assert_gradient_close, central_gradient


class TestFunnel:
    def setup_method(self):
        self.model = FunnelModel(n=1)

    def test_layout(self):
        model = FunnelModel(n=2)
        assert model.dim == 3
        assert model.coordinate_names == ["x_1", "x_2", "v"]
        assert model.reference_marginals == {2: (0.0, 9.0)}
        assert model.diagnostic_index == 2

    def test_potential_examples(self):
        assert self.model.potential(np.array([0.0, 0.0])) == 0.0
        assert self.model.potential(np.array([1.0, 0.0])) == pytest.approx(0.5)

    def test_gradient_examples(self):
        np.testing.assert_allclose(self.model.gradient(np.array([0.0, 0.0])), [0.0, -0.5])
        np.testing.assert_allclose(self.model.gradient(np.array([1.0, 0.0])), [1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(FunnelModel(n=2).gradient(np.array([1.0, 1.0, 0.0])), [1.0, 1.0, 0.0], atol=1e-15)

    def test_hessian_examples(self):
        np.testing.assert_allclose(self.model.hessian(np.array([0.0, 0.0])), [[1.0, 0.0], [0.0, 1 / 9]])
        np.testing.assert_allclose(self.model.hessian(np.array([2.0, 0.0])), [[1.0, 2.0], [2.0, 2.0 + 1 / 9]])

    def test_hessian_partials_examples(self):
        partials = self.model.hessian_partials(np.array([0.0, 0.0]))
        np.testing.assert_allclose(partials[1], [[1.0, 0.0], [0.0, 0.0]])
        np.testing.assert_allclose(partials[0], [[0.0, 1.0], [1.0, 0.0]])

        partials = self.model.hessian_partials(np.array([1.0, 1.0]))
        assert partials[0][0, 1] == pytest.approx(math.e)

    @pytest.mark.parametrize("n", [1, 2, 10])
    def test_derivative_tower(self, rng, n):
        model = FunnelModel(n=n)
        for _ in range(50):
            q = rng.uniform(-2.0, 2.0, size=model.dim)
            assert_gradient_close(model.gradient(q), central_gradient(model.potential, q))

            numeric_hessian = np.array(
                [central_gradient(lambda x, i=i: model.gradient(x)[i], q) for i in range(model.dim)]
            )
            assert_gradient_close(model.hessian(q), numeric_hessian)

            numeric_partials = fd_hessian_partials(model, q, 1e-5)
            assert_gradient_close(model.hessian_partials(q), numeric_partials)

    def test_partials_are_symmetric(self, rng):
        model = FunnelModel(n=4)
        partials = model.hessian_partials(rng.uniform(-1, 1, size=5))
        np.testing.assert_array_equal(partials, np.transpose(partials, (0, 2, 1)))

    def test_diagonal_helpers_match_full_tensors(self, rng):
        model = FunnelModel(n=3)
        q = rng.uniform(-1, 1, size=4)
        np.testing.assert_allclose(model.hessian_diag(q), np.diag(model.hessian(q)))
        np.testing.assert_allclose(
            model.hessian_diag_partials(q), np.einsum("nii->ni", model.hessian_partials(q))
        )

    def test_overflow_guard(self):
        with pytest.raises(DivergenceError):
            self.model.potential(np.array([0.0, 701.0]))

    def test_rejects_bad_positions(self):
        with pytest.raises(ValueError):
            self.model.potential(np.zeros(3))
        with pytest.raises(DivergenceError):
            self.model.gradient(np.array([np.nan, 0.0]))


class TestFdHessianPartials:
    def test_matches_analytic_funnel(self):
        model = FunnelModel(n=1)
        q = np.array([0.5, -0.5])
        np.testing.assert_allclose(
            fd_hessian_partials(model, q, 1e-5), model.hessian_partials(q), rtol=1e-5, atol=1e-9
        )

    def test_gaussian_is_zero(self, rng):
        model = GaussianModel(3, covariance=np.diag([1.0, 2.0, 0.5]))
        partials = fd_hessian_partials(model, rng.normal(size=3), 1e-4)
        np.testing.assert_allclose(partials, 0.0, atol=1e-8)

    @pytest.mark.parametrize("h", [0.0, -1e-5, float("nan")])
    def test_invalid_step(self, h):
        with pytest.raises(ValueError):
            fd_hessian_partials(FunnelModel(n=1), np.zeros(2), h)


class TestGaussian:
    def test_identity_covariance(self):
        model = GaussianModel(2)
        assert model.potential(np.array([3.0, 4.0])) == pytest.approx(12.5)
        np.testing.assert_allclose(model.hessian(np.array([5.0, -1.0])), np.eye(2))
        np.testing.assert_array_equal(model.hessian_partials(np.zeros(2)), np.zeros((2, 2, 2)))

    def test_full_covariance(self, rng):
        cov = np.array([[2.0, 0.5], [0.5, 1.0]])
        model = GaussianModel(2, covariance=cov)
        q = rng.normal(size=2)
        np.testing.assert_allclose(model.gradient(q), np.linalg.solve(cov, q), rtol=1e-12)
        np.testing.assert_allclose(model.hessian(q), np.linalg.inv(cov), rtol=1e-12)
        assert model.reference_marginals == {0: (0.0, 2.0), 1: (0.0, 1.0)}

    def test_rejects_indefinite_covariance(self):
        with pytest.raises(ValueError):
            GaussianModel(2, covariance=[[1.0, 2.0], [2.0, 1.0]])


class TestRegistry:
    def test_registered_names(self):
        assert set(target_registry.list_names()) >= {"funnel", "gaussian"}

    def test_build_by_name(self):
        model = build_target(TargetConfig(name="funnel", n=4))
        assert isinstance(model, FunnelModel)
        assert model.dim == 5
        assert build_target(TargetConfig(name="gaussian", n=3)).dim == 3

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown target"):
            build_target(TargetConfig(name="banana"))
