"""Tests for autocorrelation, ESS and moment summaries."""

import math

import numpy as np
import pytest

from softabs_hmc.core.diagnostics import (
    autocorrelation,
    ess,
    ess_from_autocorrelation,
    imse_truncate,
    summarize,
)


def ar1(phi: float, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    noise = rng.normal(size=n)
    x = np.empty(n)
    x[0] = noise[0] / math.sqrt(1 - phi * phi)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + noise[t]
    return x


class TestAutocorrelation:
    def test_lag_zero_is_one(self, rng):
        rho = autocorrelation(rng.normal(size=100))
        assert rho[0] == pytest.approx(1.0)
        assert rho.shape == (51,)

    def test_alternating_series(self):
        rho = autocorrelation([1.0, -1.0] * 4, max_lag=2)
        np.testing.assert_allclose(rho, [1.0, -7 / 8, 6 / 8], atol=1e-12)

    def test_matches_direct_sum(self, rng):
        x = rng.normal(size=64)
        c = x - x.mean()
        direct = np.array([np.dot(c[: 64 - k], c[k:]) for k in range(10)]) / np.dot(c, c)
        np.testing.assert_allclose(autocorrelation(x, max_lag=9), direct, atol=1e-12)

    @pytest.mark.parametrize("series", [[1.0, 2.0, 3.0], [2.0] * 10, [[1.0, 2.0], [3.0, 4.0]]])
    def test_rejects_unusable_series(self, series):
        with pytest.raises(ValueError):
            autocorrelation(series)


class TestTruncation:
    def test_stops_before_first_non_positive_pair(self):
        assert imse_truncate([1.0, 0.5, 0.2, -0.3, -0.1, -0.2]) == 1

    def test_keeps_all_positive_pairs(self):
        assert imse_truncate([1.0, 0.5, 0.4, 0.3]) == 3

    def test_first_pair_is_always_kept(self):
        assert imse_truncate([1.0, -1.2, 0.1, 0.1]) == 1

    def test_too_short(self):
        assert imse_truncate([1.0]) == 0


class TestEssFromAutocorrelation:
    def test_single_pair(self):
        value, lag = ess_from_autocorrelation([1.0, 0.5, 0.2, -0.3], 100)
        assert value == pytest.approx(50.0)
        assert lag == 1

    def test_pairs_are_made_monotone(self):
        value, lag = ess_from_autocorrelation([1.0, 0.1, 0.6, 0.6], 100)
        assert value == pytest.approx(100 / 3.4)
        assert lag == 3

    def test_clamped_to_chain_length(self):
        value, _ = ess_from_autocorrelation([1.0, -0.3], 100)
        assert value == 100.0
        value, _ = ess_from_autocorrelation([1.0, -0.9, 0.1, -0.05], 100)
        assert value == 100.0


class TestEss:
    def test_independent_draws(self, rng):
        report = ess(rng.normal(size=10_000))
        assert 0.8 * 10_000 <= report.ess <= 10_000
        assert report.n == 10_000

    def test_autoregressive_chain(self):
        n, phi = 20_000, 0.9
        report = ess(ar1(phi, n, seed=8))
        expected = n * (1 - phi) / (1 + phi)
        assert 0.75 * expected <= report.ess <= 1.25 * expected
        assert report.truncation_lag > 1
        assert len(report.autocorrelations) == report.truncation_lag

    def test_duplicated_draws_halve_the_ess(self, rng):
        n = 10_000
        report = ess(np.repeat(rng.normal(size=n // 2), 2))
        assert 0.8 * n / 2 <= report.ess <= 1.2 * n / 2

    def test_affine_invariance(self):
        x = ar1(0.5, 2000, seed=3)
        assert ess(3.0 * x - 7.0).ess == pytest.approx(ess(x).ess, rel=1e-9)

    def test_report_moments(self, rng):
        x = rng.normal(loc=2.0, size=500)
        report = ess(x)
        assert report.mean == pytest.approx(x.mean())
        assert report.variance == pytest.approx(x.var(ddof=1))


class TestSummarize:
    def test_reference_z_score(self, rng):
        samples = rng.normal(size=(5000, 2))
        summary = summarize(samples, 1, reference=(0.0, 1.0), name="v")
        expected_z = samples[:, 1].mean() / math.sqrt(1.0 / summary.ess)
        assert summary.name == "v"
        assert summary.z == pytest.approx(expected_z)
        assert 0.0 <= summary.p_value <= 1.0
        assert abs(summary.z) < 4.0

    def test_without_reference(self, rng):
        summary = summarize(rng.normal(size=(100, 1)), 0)
        assert summary.z is None
        assert summary.p_value is None

    def test_stuck_chain(self):
        summary = summarize(np.full((50, 1), 3.0), 0, reference=(0.0, 9.0))
        assert summary.variance == 0.0
        assert summary.ess == 1.0
        assert summary.z == pytest.approx(1.0)

    def test_empty_chain(self):
        with pytest.raises(ValueError):
            summarize(np.empty((0, 2)), 0)
