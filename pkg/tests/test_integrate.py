"""Tests for the explicit and generalized leapfrog integrators."""

import numpy as np
import pytest

from softabs_hmc.core.config import IntegratorConfig, MetricFamilyName
from softabs_hmc.core.errors import ConvergenceError, DivergenceError
from softabs_hmc.core.integrate import (
    gen_leapfrog_step,
    integrate_trajectory,
    leapfrog_step,
)
from softabs_hmc.targets import FunnelModel, GaussianModel

from conftest import FD_ALPHA, CliffTarget, make_system, well_conditioned_point


def max_energy_error(system, q, p, config):
    start = system.state(q, p)
    result = integrate_trajectory(system, start, config, record=True)
    assert not result.diverged
    return max(abs(point.energy - start.energy) for point in result.log)


class TestLeapfrog:
    def setup_method(self):
        self.system = make_system(GaussianModel(1), MetricFamilyName.EUCLIDEAN)

    def test_harmonic_oscillator_step(self):
        start = self.system.state(np.array([1.0]), np.array([0.0]))
        step = leapfrog_step(self.system, start, 0.1)
        assert step.q[0] == pytest.approx(0.995, abs=1e-15)
        assert step.p[0] == pytest.approx(-0.09975, abs=1e-15)

    def test_free_particle_moves_in_a_straight_line(self):
        system = make_system(CliffTarget(dim=2, limit=10.0), MetricFamilyName.EUCLIDEAN)
        start = system.state(np.zeros(2), np.array([1.0, -2.0]))
        config = IntegratorConfig(epsilon=0.1, n_steps=10)
        result = integrate_trajectory(system, start, config)
        np.testing.assert_allclose(result.final.q, [1.0, -2.0], rtol=1e-12)
        np.testing.assert_array_equal(result.final.p, [1.0, -2.0])

    def test_half_period(self):
        start = self.system.state(np.array([1.0]), np.array([0.0]))
        config = IntegratorConfig(epsilon=0.1, n_steps=31)
        result = integrate_trajectory(self.system, start, config)
        assert result.final.q[0] == pytest.approx(-1.0, abs=1e-2)
        assert result.final.energy == pytest.approx(start.energy, abs=5e-3)

    def test_rejects_position_dependent_metric(self, funnel1):
        system = make_system(funnel1, MetricFamilyName.SOFTABS)
        start = system.state(np.zeros(2), np.ones(2))
        with pytest.raises(ValueError):
            leapfrog_step(system, start, 0.1)
        with pytest.raises(ValueError):
            integrate_trajectory(system, start, IntegratorConfig(method="leapfrog"))

    def test_energy_error_scales_with_step_squared(self):
        cov = np.array([[2.0, 0.5], [0.5, 1.0]])
        system = make_system(GaussianModel(2, covariance=cov), MetricFamilyName.EUCLIDEAN)
        q, p = np.array([1.0, -0.5]), np.array([0.3, 0.8])
        coarse = max_energy_error(system, q, p, IntegratorConfig(epsilon=0.1, n_steps=40))
        fine = max_energy_error(system, q, p, IntegratorConfig(epsilon=0.05, n_steps=80))
        assert 3.0 <= coarse / fine <= 5.0


class TestGeneralizedLeapfrog:
    def test_zero_step_is_identity(self, funnel1):
        system = make_system(funnel1, MetricFamilyName.SOFTABS)
        start = system.state(np.array([0.3, -0.2]), np.array([0.5, 1.0]))
        step, report = gen_leapfrog_step(system, start, IntegratorConfig(), epsilon=0.0)
        np.testing.assert_array_equal(step.q, start.q)
        np.testing.assert_array_equal(step.p, start.p)
        assert (report.p_iterations, report.q_iterations) == (1, 1)

    def test_constant_metric_matches_leapfrog(self):
        cov = np.array([[1.0, 0.3], [0.3, 0.5]])
        system = make_system(GaussianModel(2, covariance=cov), MetricFamilyName.EUCLIDEAN, mass=[0.5, 2.0])
        start = system.state(np.array([0.7, -1.1]), np.array([0.2, 0.4]))
        config = IntegratorConfig(epsilon=0.1, method="generalized")

        explicit = leapfrog_step(system, start, 0.1)
        implicit, report = gen_leapfrog_step(system, start, config)
        np.testing.assert_allclose(implicit.q, explicit.q, rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose(implicit.p, explicit.p, rtol=1e-14, atol=1e-15)
        assert report.p_iterations == 1
        assert report.q_iterations == 1

    def test_constant_softabs_metric_converges_in_one_update(self, rng):
        cov = np.array([[2.0, 0.5], [0.5, 1.0]])
        system = make_system(GaussianModel(2, covariance=cov), MetricFamilyName.SOFTABS)
        start = system.state(rng.normal(size=2), rng.normal(size=2))
        _, report = gen_leapfrog_step(system, start, IntegratorConfig(epsilon=0.1))
        assert (report.p_iterations, report.q_iterations) == (1, 1)

    @pytest.mark.parametrize(
        "family, method",
        [(family, "auto") for family in MetricFamilyName] + [(MetricFamilyName.EUCLIDEAN, "generalized")],
    )
    def test_single_step_is_reversible(self, rng, family, method):
        model = FunnelModel(n=2)
        system = make_system(model, family, alpha=FD_ALPHA[family])
        config = IntegratorConfig(epsilon=0.01, n_steps=1, method=method)
        tolerance = 100 * config.fp_threshold

        for _ in range(20):
            cache = system.refresh(well_conditioned_point(model, rng, gap=0.05))
            start = system.state(cache.q, system.metric.sample_momentum(cache, rng), cache)
            forward = integrate_trajectory(system, start, config)
            back = integrate_trajectory(system, forward.final.flip(), config)

            np.testing.assert_allclose(back.final.q, start.q, rtol=0, atol=tolerance)
            np.testing.assert_allclose(-back.final.p, start.p, rtol=0, atol=tolerance)

    def test_energy_error_scales_with_step_squared(self):
        cov = np.array([[2.0, 0.5], [0.5, 1.0]])
        system = make_system(GaussianModel(2, covariance=cov), MetricFamilyName.SOFTABS)
        q, p = np.array([1.0, -0.5]), np.array([0.3, 0.8])
        coarse = max_energy_error(system, q, p, IntegratorConfig(epsilon=0.1, n_steps=40))
        fine = max_energy_error(system, q, p, IntegratorConfig(epsilon=0.05, n_steps=80))
        assert 3.0 <= coarse / fine <= 5.0

    def test_funnel_energy_error_scales_with_step_squared(self, funnel1):
        # x stays small so the Hessian keeps clear of a zero eigenvalue while e^v varies
        system = make_system(funnel1, MetricFamilyName.SOFTABS)
        q, p = np.array([0.05, 0.0]), np.array([0.05, 0.15])
        coarse = max_energy_error(system, q, p, IntegratorConfig(epsilon=0.04, n_steps=100))
        fine = max_energy_error(system, q, p, IntegratorConfig(epsilon=0.02, n_steps=200))
        assert coarse < 1e-2
        assert 3.0 <= coarse / fine <= 5.0

    def test_fixed_point_updates_stay_small(self, rng):
        model = FunnelModel(n=10)
        system = make_system(model, MetricFamilyName.SOFTABS)
        config = IntegratorConfig(epsilon=0.1, n_steps=20)
        iterations = []
        for _ in range(8):
            cache = system.refresh(well_conditioned_point(model, rng, gap=0.05))
            start = system.state(cache.q, system.metric.sample_momentum(cache, rng), cache)
            result = integrate_trajectory(system, start, config)
            iterations += [r.p_iterations for r in result.reports]
            iterations += [r.q_iterations for r in result.reports]
        assert len(iterations) >= 40
        assert np.median(iterations) <= 10

    def test_iteration_cap_raises(self, funnel1):
        system = make_system(funnel1, MetricFamilyName.SOFTABS)
        start = system.state(np.array([0.5, 0.5]), np.array([1.0, 1.0]))
        config = IntegratorConfig(epsilon=0.1, fp_max_iters=1)
        with pytest.raises(ConvergenceError) as excinfo:
            gen_leapfrog_step(system, start, config)
        assert excinfo.value.iterations == 1
        assert excinfo.value.delta > config.fp_threshold

    def test_deterministic(self, funnel1):
        system = make_system(funnel1, MetricFamilyName.SOFTABS)
        config = IntegratorConfig(epsilon=0.05, n_steps=15)
        start = system.state(np.array([0.2, 0.1]), np.array([-0.1, 0.05]))
        first = integrate_trajectory(system, start, config)
        second = integrate_trajectory(system, start, config)
        np.testing.assert_array_equal(first.final.q, second.final.q)
        np.testing.assert_array_equal(first.final.p, second.final.p)


class TestTrajectory:
    def test_zero_steps_returns_start(self, funnel1):
        system = make_system(funnel1, MetricFamilyName.SOFTABS)
        start = system.state(np.zeros(2), np.ones(2))
        result = integrate_trajectory(system, start, IntegratorConfig(n_steps=0), record=True)
        assert result.final is start
        assert len(result.log) == 1
        assert result.log[0].step == 0

    def test_recording_logs_every_step(self, funnel1):
        system = make_system(funnel1, MetricFamilyName.SOFTABS)
        start = system.state(np.zeros(2), np.ones(2))
        result = integrate_trajectory(system, start, IntegratorConfig(epsilon=0.01, n_steps=7), record=True)
        assert [point.step for point in result.log] == list(range(8))
        assert len(result.reports) == 7

    def test_softabs_trajectory_crosses_the_funnel(self):
        model = FunnelModel(n=10)
        system = make_system(model, MetricFamilyName.SOFTABS)
        q = np.append(np.full(10, 1e-3), 0.0)
        p = np.append(np.zeros(10), 0.5)
        config = IntegratorConfig(epsilon=0.1, n_steps=250)

        result = integrate_trajectory(system, system.state(q, p), config, record=True)
        assert not result.diverged
        v = np.array([point.q[-1] for point in result.log])
        assert v.min() < -3.0
        assert v.max() > 3.0

    def test_divergence_ends_the_trajectory(self):
        system = make_system(CliffTarget(dim=1), MetricFamilyName.EUCLIDEAN)
        start = system.state(np.zeros(1), np.ones(1))
        result = integrate_trajectory(system, start, IntegratorConfig(epsilon=0.1, n_steps=5))
        assert result.diverged
        assert result.final is None
        assert result.error.startswith("step 1:")

    def test_non_convergence_counts_as_divergence(self, funnel1):
        system = make_system(funnel1, MetricFamilyName.SOFTABS)
        start = system.state(np.array([0.5, 0.5]), np.array([1.0, 1.0]))
        result = integrate_trajectory(system, start, IntegratorConfig(epsilon=0.1, n_steps=3, fp_max_iters=1))
        assert result.diverged
        assert result.final is None

    def test_momentum_shape_is_checked(self, funnel1):
        system = make_system(funnel1, MetricFamilyName.SOFTABS)
        with pytest.raises(ValueError):
            system.state(np.zeros(2), np.ones(3))

    def test_non_finite_start_diverges(self, funnel1):
        system = make_system(funnel1, MetricFamilyName.SOFTABS)
        with pytest.raises(DivergenceError):
            system.state(np.array([0.0, 800.0]), np.ones(2))
