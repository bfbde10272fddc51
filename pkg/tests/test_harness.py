"""Streaming statistics, confidence intervals and the Monte Carlo harness."""

import math
from dataclasses import dataclass

import numpy as np
import pytest

from estimators.tasks import make_task
from estimators.transport import EstimatorSample
from montecarlo.harness import McConfig, run_chunk, run_estimate, worker_pool
from montecarlo.stats import RunningStats, confidence_interval, merge_stats, normal_quantile
from paths.mesh_path import SigmaSchedule
from sampling.distributions import LifetimeParams, RngStream
from utils.errors import ConfigurationError, DomainError, RunError


@dataclass(frozen=True)
class ConstantEstimator:
    value: float
    label: str = "constant"

    def __call__(self, rng):
        return EstimatorSample(self.value)


@dataclass(frozen=True)
class NormalEstimator:
    label: str = "normal"

    def __call__(self, rng):
        return EstimatorSample(rng.normal())


@dataclass(frozen=True)
class PoisonEveryThird:
    label: str = "poison"

    def __call__(self, rng):
        if rng.stream_index % 3 == 0:
            return EstimatorSample.poisoned_sample("weight overflow")
        return EstimatorSample(1.0, n_switches=rng.stream_index % 2)


@dataclass(frozen=True)
class AlwaysPoisoned:
    label: str = "broken"

    def __call__(self, rng):
        return EstimatorSample.poisoned_sample("sigma overflow")


class TestRunningStats:

    def test_identity_merge(self):
        stats = RunningStats.from_values([1.0, 2.0, 4.0])
        assert merge_stats(RunningStats.identity(), stats) == stats
        assert merge_stats(stats, RunningStats.identity()) == stats

    def test_halves_match_single_pass(self):
        values = np.random.default_rng(1).standard_normal(10_001) * 5 + 3
        whole = RunningStats.from_values(values.tolist())
        merged = merge_stats(RunningStats.from_values(values[:4000].tolist()),
                             RunningStats.from_values(values[4000:].tolist()))
        assert merged.count == whole.count
        assert merged.mean == pytest.approx(whole.mean, abs=1e-12)
        assert merged.variance == pytest.approx(whole.variance, rel=1e-12)
        assert merged.variance == pytest.approx(np.var(values, ddof=1), rel=1e-10)

    def test_constant_values(self):
        stats = RunningStats.from_values([2.5] * 10)
        assert stats.mean == 2.5
        assert stats.variance == 0.0

    def test_small_counts(self):
        assert RunningStats.from_values([3.0]).variance == 0.0
        assert RunningStats.identity().std_error == 0.0

    def test_sample_share(self):
        stats = RunningStats.from_values([1.0, 1.0, 2.0])
        assert stats.max_sample_share == pytest.approx(4.0 / 6.0)
        assert stats.second_moment == pytest.approx(2.0)

    def test_from_array_matches_welford(self):
        values = np.random.default_rng(3).normal(2.0, 3.0, 1000)
        welford = RunningStats.from_values(values)
        vectorised = RunningStats.from_array(values)
        assert vectorised.count == welford.count
        assert vectorised.mean == pytest.approx(welford.mean, rel=1e-12)
        assert vectorised.variance == pytest.approx(welford.variance, rel=1e-10)
        assert vectorised.sum_squares == pytest.approx(welford.sum_squares, rel=1e-12)
        assert vectorised.max_square == welford.max_square
        assert RunningStats.from_array([]) == RunningStats.identity()


class TestConfidenceInterval:

    def test_normal_quantile(self):
        assert normal_quantile(0.90) == pytest.approx(1.6449, abs=1e-4)
        assert normal_quantile(0.80) == pytest.approx(1.28155, abs=1e-5)

    def test_level_80(self):
        stats = RunningStats.from_values([1.5, 2.5])
        low, high = confidence_interval(stats, 0.80)
        assert (low, high) == pytest.approx((1.3592, 2.6408), abs=1e-4)

    def test_zero_variance(self):
        assert confidence_interval(RunningStats.from_values([4.0, 4.0]), 0.9) == (4.0, 4.0)

    def test_needs_two_samples(self):
        with pytest.raises(DomainError):
            confidence_interval(RunningStats.from_values([1.0]), 0.9)

    @pytest.mark.parametrize("level", [0.0, 1.0, 1.5])
    def test_level_range(self, level):
        with pytest.raises(DomainError):
            normal_quantile(level)


class TestMcConfig:

    @pytest.mark.parametrize("field, value", [
        ("n_samples", 0), ("n_repeats", 0), ("sample_levels", (100, 0)), ("confidence_level", 1.0),
        ("workers", 0), ("executor", "gpu"), ("chunk_size", 0),
    ])
    def test_invalid(self, field, value):
        with pytest.raises(ConfigurationError):
            McConfig(**{field: value})

    def test_levels_default_to_sample_count(self):
        assert McConfig(n_samples=123).levels == (123,)
        assert McConfig(sample_levels=(10, 20)).levels == (10, 20)


class TestRunEstimate:

    def test_constant_estimator(self):
        report = run_estimate(ConstantEstimator(3.5), McConfig(n_samples=1000))
        assert report.mean == 3.5
        assert report.variance == 0.0
        assert (report.ci_low, report.ci_high) == (3.5, 3.5)
        assert report.poisoned_count == 0

    def test_single_sample(self):
        report = run_estimate(ConstantEstimator(2.0), McConfig(n_samples=1))
        assert (report.ci_low, report.ci_high) == (2.0, 2.0)

    def test_poisoned_samples_are_counted(self):
        report = run_estimate(PoisonEveryThird(), McConfig(n_samples=300, chunk_size=64))
        assert report.poisoned_count == 100
        assert report.n_effective == 200
        assert report.poison_reasons == (("weight overflow", 100),)
        assert report.histogram == {0: 100, 1: 100}
        assert report.poisoned_fraction == pytest.approx(1 / 3)

    def test_all_poisoned_raises(self):
        with pytest.raises(RunError):
            run_estimate(AlwaysPoisoned(), McConfig(n_samples=50))

    def test_chunking_does_not_change_the_result(self):
        estimator = NormalEstimator()
        a = run_estimate(estimator, McConfig(n_samples=5000, chunk_size=5000))
        b = run_estimate(estimator, McConfig(n_samples=5000, chunk_size=77))
        assert a.n_effective == b.n_effective
        assert a.mean == pytest.approx(b.mean, abs=1e-13)
        assert a.variance == pytest.approx(b.variance, rel=1e-12)

    def test_thread_pool_matches_single_worker(self, linear_problem):
        task = make_task("unbiased", linear_problem, SigmaSchedule(), LifetimeParams())
        single = run_estimate(task, McConfig(n_samples=3000, chunk_size=256))
        pooled = run_estimate(task, McConfig(n_samples=3000, chunk_size=256, workers=4, executor="thread"))
        assert single == pooled

    def test_process_pool_matches_single_worker(self, linear_problem):
        task = make_task("unbiased", linear_problem, SigmaSchedule(), LifetimeParams())
        config = McConfig(n_samples=2000, chunk_size=256, workers=2, executor="process")
        with worker_pool(config) as executor:
            pooled = run_estimate(task, config, executor=executor)
        assert pooled == run_estimate(task, McConfig(n_samples=2000, chunk_size=256))

    def test_seed_and_indices_select_the_stream(self):
        estimator = NormalEstimator()
        base = run_estimate(estimator, McConfig(n_samples=100))
        assert run_estimate(estimator, McConfig(n_samples=100)).mean == base.mean
        assert run_estimate(estimator, McConfig(n_samples=100, master_seed=1)).mean != base.mean
        assert run_estimate(estimator, McConfig(n_samples=100), repeat_index=1).mean != base.mean

    def test_normal_mean_covered(self):
        report = run_estimate(NormalEstimator(), McConfig(n_samples=20_000))
        assert abs(report.mean) <= 4 * report.std_error
        assert report.variance == pytest.approx(1.0, abs=0.05)

    def test_heavy_sample_flags_variance(self):
        @dataclass(frozen=True)
        class Spike:
            label: str = "spike"

            def __call__(self, rng):
                return EstimatorSample(1e6 if rng.stream_index == 1500 else 1.0)

        report = run_estimate(Spike(), McConfig(n_samples=2000))
        assert report.exploding_variance
        assert report.max_sample_share > 0.9

    def test_run_chunk_prefix(self):
        result = run_chunk(ConstantEstimator(1.0), 7, 0, 100, 10)
        assert result.stats.count == 100
        assert result.prefix_stats.count == 10
        assert math.isclose(result.stats.mean, 1.0)


class TestBlockRuns:

    @pytest.mark.parametrize("method", ["unbiased", "derivative", "perturbed"])
    def test_worker_count_does_not_change_the_report(self, linear_problem, method):
        task = make_task(method, linear_problem, SigmaSchedule(), LifetimeParams())
        reports = [run_estimate(task, McConfig(n_samples=5000, chunk_size=700, workers=workers, executor="thread"))
                   for workers in (1, 4, 8)]
        assert reports[0] == reports[1] == reports[2]

    def test_per_sample_estimators_ignore_the_worker_count(self, nonlinear_problem):
        task = make_task("nonlinear", nonlinear_problem, SigmaSchedule(), LifetimeParams())
        reports = [run_estimate(task, McConfig(n_samples=600, chunk_size=90, workers=workers, executor="thread"))
                   for workers in (1, 4, 8)]
        assert reports[0] == reports[1] == reports[2]

    def test_chunk_size_does_not_change_block_samples(self, linear_problem):
        task = make_task("unbiased", linear_problem, SigmaSchedule(), LifetimeParams())
        whole = run_estimate(task, McConfig(n_samples=3000, chunk_size=3000))
        split = run_estimate(task, McConfig(n_samples=3000, chunk_size=100))
        assert whole.n_effective == split.n_effective
        assert whole.poisoned_count == split.poisoned_count
        assert whole.histogram == split.histogram
        assert whole.mean == pytest.approx(split.mean, rel=1e-12, abs=1e-12)
        assert whole.variance == pytest.approx(split.variance, rel=1e-9)

    def test_prefix_of_a_block_run(self, linear_problem):
        task = make_task("perturbed", linear_problem, SigmaSchedule(), LifetimeParams(), sigma=0.0)
        result = run_chunk(task, 11, 1000, 1100, 1050)
        assert result.stats.count == 100
        assert result.prefix_stats.count == 50
        assert result.stats.mean == pytest.approx(10 * math.cos(5.0))

    def test_report_carries_the_switching_deficit(self, linear_problem):
        unit = make_task("unbiased", linear_problem, SigmaSchedule(1.0), LifetimeParams())
        report = run_estimate(unit, McConfig(n_samples=500))
        assert report.switching_deficit == unit.switching_deficit() > 0.1
        assert report.switching_biased
        baseline = make_task("perturbed", linear_problem, SigmaSchedule(1.0), LifetimeParams())
        assert run_estimate(baseline, McConfig(n_samples=500)).switching_deficit == 0.0
