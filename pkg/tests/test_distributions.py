"""Lifetime law, counter-based streams and Gaussian increments."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from sampling.distributions import (
    LifetimeParams,
    RngStream,
    block_generator,
    derive_seed,
    lifetime_density,
    lifetime_density_array,
    lifetime_survival,
    lifetime_survival_array,
    sample_gaussian_increment,
    sample_lifetime,
    sample_lifetime_array,
)
from utils.errors import ConfigurationError, DomainError


class TestLifetimeParams:

    def test_defaults(self):
        params = LifetimeParams()
        assert params.kappa == 0.5
        assert params.eta == 2.0
        assert params.is_half_shape

    @pytest.mark.parametrize("kappa, eta", [(0.0, 2.0), (-1.0, 2.0), (0.5, 0.0), (0.5, math.inf)])
    def test_invalid_values_rejected(self, kappa, eta):
        with pytest.raises(ConfigurationError):
            LifetimeParams(kappa, eta)

    def test_other_shape_needs_unsafe_flag(self):
        with pytest.raises(ConfigurationError, match="unsafe_variance"):
            LifetimeParams(1.0, 1.0)
        assert LifetimeParams(1.0, 1.0, unsafe_variance=True).kappa == 1.0


class TestDensity:

    def test_half_shape_value(self, params):
        assert lifetime_density(params, 1.0) == pytest.approx(0.241971, abs=1e-6)

    def test_exponential_special_case(self):
        params = LifetimeParams(1.0, 1.0, unsafe_variance=True)
        assert lifetime_density(params, 0.5) == pytest.approx(math.exp(-0.5), rel=1e-12)

    def test_near_zero_is_large_and_finite(self, params):
        value = lifetime_density(params, 1e-300)
        assert math.isfinite(value)
        assert value > 1e100

    @pytest.mark.parametrize("s", [0.0, -1.0])
    def test_nonpositive_argument(self, params, s):
        with pytest.raises(DomainError):
            lifetime_density(params, s)

    def test_integrates_to_one(self, params):
        # split at 1 so quad sees the integrable singularity on a short interval
        head, _ = integrate.quad(lambda s: lifetime_density(params, s), 0.0, 1.0, limit=200)
        tail, _ = integrate.quad(lambda s: lifetime_density(params, s), 1.0, math.inf, limit=200)
        assert head + tail == pytest.approx(1.0, abs=1e-8)


class TestSurvival:

    def test_at_zero(self, params):
        assert lifetime_survival(params, 0.0) == 1.0

    def test_half_shape_value(self, params):
        assert lifetime_survival(params, 1.0) == pytest.approx(0.31731, abs=1e-5)

    def test_generic_shape_matches_quadrature(self):
        params = LifetimeParams(2.5, 0.7, unsafe_variance=True)
        expected, _ = integrate.quad(lambda r: lifetime_density(params, r), 1.3, math.inf,
                                     epsabs=1e-14, epsrel=1e-13)
        assert lifetime_survival(params, 1.3) == pytest.approx(expected, rel=1e-10)

    def test_monotone(self, params):
        grid = np.linspace(0.0, 10.0, 1000)
        values = [lifetime_survival(params, float(s)) for s in grid]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_negative_argument(self, params):
        with pytest.raises(DomainError):
            lifetime_survival(params, -0.1)


class TestRngStream:

    def test_replay_is_identical(self):
        stream = RngStream(99, 3)
        first = [stream.normal() for _ in range(20)]
        again = stream.replay()
        assert [again.normal() for _ in range(20)] == first

    def test_distinct_indices_differ(self):
        a = [RngStream(99, 0).normal() for _ in range(1)]
        b = [RngStream(99, 1).normal() for _ in range(1)]
        assert a != b

    def test_categorical_bounds(self, rng):
        draws = {rng.categorical((0.2, 0.3, 0.5)) for _ in range(500)}
        assert draws == {0, 1, 2}

    def test_derive_seed_deterministic(self):
        assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
        assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)


class TestSampling:

    def test_lifetimes_positive(self, params):
        stream = RngStream(5, 0)
        assert all(sample_lifetime(params, stream) > 0 for _ in range(1000))

    def test_increment_rejects_nonpositive_step(self, rng):
        with pytest.raises(DomainError):
            sample_gaussian_increment(rng, 0.0)

    @pytest.mark.slow
    def test_lifetime_moments(self, params):
        stream = RngStream(2024, 0)
        draws = np.array([sample_lifetime(params, stream) for _ in range(200_000)])
        assert draws.mean() == pytest.approx(1.0, abs=0.02)
        assert draws.var(ddof=1) == pytest.approx(2.0, abs=0.1)
        assert np.mean(draws >= 1.0) == pytest.approx(0.3173, abs=0.005)

    @pytest.mark.slow
    def test_boosted_shape_mean(self):
        params = LifetimeParams(0.3, 2.0, unsafe_variance=True)
        stream = RngStream(2024, 1)
        draws = np.array([sample_lifetime(params, stream) for _ in range(100_000)])
        assert draws.mean() == pytest.approx(0.6, abs=0.02)

    @pytest.mark.slow
    def test_increment_moments(self):
        stream = RngStream(2024, 2)
        draws = np.array([sample_gaussian_increment(stream, 0.25) for _ in range(200_000)])
        assert draws.mean() == pytest.approx(0.0, abs=0.005)
        assert draws.var(ddof=1) == pytest.approx(0.25, abs=0.005)


class TestStreamIndependence:

    @pytest.mark.slow
    @pytest.mark.parametrize("lag", [1, 2, 17])
    def test_neighbouring_sample_streams_are_uncorrelated(self, lag):
        draws = np.array([RngStream(77, index).normal() for index in range(100_000)])
        assert abs(np.corrcoef(draws[:-lag], draws[lag:])[0, 1]) < 0.01

    @pytest.mark.slow
    def test_neighbouring_blocks_are_uncorrelated(self):
        draws = np.array([block_generator(77, index).standard_normal() for index in range(100_000)])
        assert abs(np.corrcoef(draws[:-1], draws[1:])[0, 1]) < 0.01

    def test_block_generator_replays(self):
        a = block_generator(5, 3).standard_normal(8)
        b = block_generator(5, 3).standard_normal(8)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, block_generator(5, 4).standard_normal(8))
        assert not np.array_equal(a, block_generator(6, 3).standard_normal(8))

    def test_block_keys_differ_from_sample_streams(self):
        first = RngStream(5, 3).normal()
        assert block_generator(5, 3).standard_normal() != first


class TestArrayLaw:

    def test_density_and_survival_match_scalar_forms(self, params):
        points = np.array([1e-6, 0.1, 0.5, 1.0, 3.0])
        assert lifetime_density_array(params, points) == pytest.approx(
            [lifetime_density(params, s) for s in points], rel=1e-12)
        assert lifetime_survival_array(params, points) == pytest.approx(
            [lifetime_survival(params, s) for s in points], rel=1e-12)

    def test_generic_shape_matches_scalar_forms(self):
        params = LifetimeParams(1.5, 0.7, unsafe_variance=True)
        points = np.array([0.05, 0.4, 2.0])
        assert lifetime_density_array(params, points) == pytest.approx(
            [lifetime_density(params, s) for s in points], rel=1e-10)
        assert lifetime_survival_array(params, points) == pytest.approx(
            [lifetime_survival(params, s) for s in points], rel=1e-10)

    def test_array_lifetimes_follow_the_gamma_law(self, params):
        draws = sample_lifetime_array(params, np.random.Generator(np.random.Philox(3)), 20_000)
        assert np.all(draws > 0)
        assert stats.kstest(draws, "gamma", args=(params.kappa, 0, params.eta)).pvalue > 0.001
