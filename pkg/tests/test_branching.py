"""Event law, the branching baseline and the experimental nonlinear estimator."""

import math
from dataclasses import replace

import pytest

from estimators.branching import (
    FIRST,
    VALUE,
    BranchingBudget,
    EventDistribution,
    children_marks,
    sample_branching_semilinear,
)
from estimators.nonlinear import Particle, _Walker, sample_unbiased_nonlinear
from estimators.perturbation import sample_perturbed_linear
from estimators.tasks import make_task
from montecarlo.harness import McConfig, run_estimate
from paths.mesh_path import SigmaSchedule
from problems.problem import Monomial, builtin_problem, problem_from_expressions
from sampling.distributions import LifetimeParams, RngStream, lifetime_survival
from utils.errors import ConfigurationError, PoisonedSampleError


@pytest.fixture
def quadratic_problem():
    return problem_from_expressions("quadratic", "1", "cos(x)", nonlinearity="0.1:2:0")


class TestEventDistribution:

    def test_uniform(self, nonlinear_problem):
        events = EventDistribution.uniform(nonlinear_problem)
        assert events.probabilities == (0.25, 0.25, 0.25, 0.25)
        assert events.monomial_law() == pytest.approx((1 / 3, 1 / 3, 1 / 3))

    def test_linear_problem_has_only_corrections(self, linear_problem):
        assert EventDistribution.uniform(linear_problem).probabilities == (1.0,)

    @pytest.mark.parametrize("correction, monomials", [(0.5, (0.4,)), (0.0, (1.0,)), (0.5, (0.6, -0.1))])
    def test_invalid_laws(self, correction, monomials):
        with pytest.raises(ConfigurationError):
            EventDistribution(correction, monomials)

    def test_length_must_match_problem(self, nonlinear_problem):
        with pytest.raises(ConfigurationError):
            EventDistribution(0.5, (0.5,)).check_against(nonlinear_problem)

    def test_children_marks(self):
        assert children_marks(Monomial(0.1, 2, 1)) == (VALUE, VALUE, FIRST)
        assert children_marks(Monomial(0.1, 0, 0)) == ()


class TestBudget:

    def test_depth_cap(self):
        budget = BranchingBudget(max_depth=2)
        budget.enter(2)
        with pytest.raises(PoisonedSampleError) as info:
            budget.enter(3)
        assert info.value.reason == "depth cap"

    def test_particle_cap(self):
        budget = BranchingBudget(max_depth=50, max_particles=3)
        for _ in range(3):
            budget.enter(0)
        with pytest.raises(PoisonedSampleError) as info:
            budget.enter(0)
        assert info.value.reason == "particle cap"


class TestBranchingBaseline:

    def test_linear_problem_reduces_to_perturbation(self, linear_problem, params):
        events = EventDistribution.uniform(linear_problem)
        value = sample_branching_semilinear(linear_problem, 0.1, events, params, RngStream(4, 2))
        assert value == sample_perturbed_linear(linear_problem, 0.1, RngStream(4, 2))

    def test_needs_positive_sigma(self, quadratic_problem, params, rng):
        with pytest.raises(ConfigurationError):
            sample_branching_semilinear(quadratic_problem, 0.0, EventDistribution.uniform(quadratic_problem),
                                        params, rng)

    def test_rejects_space_dependent_drift(self, params, rng):
        problem = problem_from_expressions("ou", "-x", "cos(x)", nonlinearity="0.1:2:0")
        with pytest.raises(ConfigurationError):
            sample_branching_semilinear(problem, 0.5, EventDistribution.uniform(problem), params, rng)

    def test_depth_cap_is_reported(self, quadratic_problem):
        task = make_task("branching", quadratic_problem, SigmaSchedule(), LifetimeParams(), sigma=0.5,
                         max_depth=1)
        report = run_estimate(task, McConfig(n_samples=500, master_seed=9))
        assert dict(report.poison_reasons).get("depth cap", 0) > 0
        assert report.exploding_variance

    @pytest.mark.slow
    def test_source_term_mean(self):
        problem = builtin_problem("source-term")
        task = make_task("branching", problem, SigmaSchedule(), LifetimeParams(), sigma=0.1)
        report = run_estimate(task, McConfig(n_samples=100_000, master_seed=21))
        expected = math.exp(-0.005) * math.cos(1.0) + 0.5
        assert abs(report.mean - expected) <= 3 * report.std_error

    @pytest.mark.slow
    def test_unit_sigma_misses_the_nonlinear_solution(self, nonlinear_problem):
        task = make_task("branching", nonlinear_problem, SigmaSchedule(), LifetimeParams(), sigma=1.0)
        report = run_estimate(task, McConfig(n_samples=100_000, master_seed=25))
        assert abs(report.mean - math.cos(1.0)) > 3 * report.std_error

    @pytest.mark.slow
    def test_half_sigma_is_flagged(self, nonlinear_problem):
        task = make_task("branching", nonlinear_problem, SigmaSchedule(), LifetimeParams(), sigma=0.5)
        report = run_estimate(task, McConfig(n_samples=100_000, master_seed=26))
        assert report.exploding_variance


class TestNonlinearEstimator:

    def test_value_terminal(self, linear_problem, params, schedule, rng):
        walker = _Walker(linear_problem, EventDistribution.uniform(linear_problem), schedule, params, rng,
                         BranchingBudget())
        particle = Particle(0.0, 10.0, VALUE, math.log(0.1))
        value = walker.terminal(particle, 0.1, 1.0, 0.0, 1.0)
        assert value == pytest.approx(10 * math.cos(5.0) / lifetime_survival(params, 1.0))

    def test_first_mark_terminal_is_even_in_increment(self, linear_problem, params, schedule, rng):
        walker = _Walker(linear_problem, EventDistribution.uniform(linear_problem), schedule, params, rng,
                         BranchingBudget())
        particle = Particle(0.0, 10.0, FIRST, 0.0)
        up = walker.terminal(particle, 1.0, 1.0, 0.3, 1.0)
        down = walker.terminal(particle, 1.0, 1.0, -0.3, 1.0)
        assert up == pytest.approx(down)

    def test_samples_are_reproducible(self, nonlinear_problem, schedule, params):
        events = EventDistribution.uniform(nonlinear_problem)
        outcomes = []
        for _ in range(2):
            try:
                sample = sample_unbiased_nonlinear(nonlinear_problem, events, schedule, params, RngStream(6, 1))
                outcomes.append((sample.value, sample.n_switches))
            except PoisonedSampleError as exc:
                outcomes.append(exc.reason)
        assert outcomes[0] == outcomes[1]

    def test_task_routes_nonlinear_problems(self, nonlinear_problem, schedule, params):
        sample = make_task("unbiased", nonlinear_problem, schedule, params)(RngStream(6, 2))
        assert sample.poisoned or math.isfinite(sample.value)

    def test_non_finite_drift_poisons_the_sample(self, quadratic_problem, params):
        problem = replace(quadratic_problem, drift=lambda t, x: math.nan)
        walker = _Walker(problem, EventDistribution.uniform(problem), SigmaSchedule(), params, RngStream(3, 0),
                         BranchingBudget())
        with pytest.raises(PoisonedSampleError) as info:
            walker.run(Particle(0.0, 0.0, VALUE, math.log(0.1)))
        assert info.value.reason == "non-finite drift"

    def test_task_reports_non_finite_drift_as_poisoned(self, quadratic_problem, params):
        problem = replace(quadratic_problem, drift=lambda t, x: math.inf)
        sample = make_task("nonlinear", problem, SigmaSchedule(), params)(RngStream(3, 1))
        assert sample.poisoned
        assert sample.reason == "non-finite drift"

    @pytest.mark.slow
    def test_matches_transport_on_linear_problem(self, linear_problem):
        task = make_task("nonlinear", linear_problem, SigmaSchedule(), LifetimeParams())
        report = run_estimate(task, McConfig(n_samples=100_000, master_seed=22))
        assert abs(report.mean - 10 * math.cos(5.0)) <= 3 * report.std_error

    @pytest.mark.slow
    def test_source_term_mean(self):
        problem = builtin_problem("source-term")
        task = make_task("nonlinear", problem, SigmaSchedule(), LifetimeParams())
        report = run_estimate(task, McConfig(n_samples=100_000, master_seed=23))
        assert abs(report.mean - (math.cos(1.0) + 0.5)) <= 3 * report.std_error

    @pytest.mark.slow
    def test_unit_sigma0_run_is_flagged(self, nonlinear_problem):
        task = make_task("nonlinear", nonlinear_problem, SigmaSchedule(1.0), LifetimeParams())
        report = run_estimate(task, McConfig(n_samples=100_000, master_seed=24))
        assert report.switching_biased
        assert report.exploding_variance
