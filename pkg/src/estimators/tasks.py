"""
Estimator Tasks
Picklable estimator callables handed to the Monte Carlo harness, drawing one
sample per stream or a whole block per generator
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.defaults import DEFAULT_MAX_DEPTH, DEFAULT_PERTURBATION_SIGMA
from estimators.blocks import SampleBlock, derivative_block, perturbed_block, simulate_block, transport_block
from estimators.branching import EventDistribution, check_branching_problem, sample_branching_semilinear
from estimators.nonlinear import sample_unbiased_nonlinear
from estimators.perturbation import check_perturbation_sigma, sample_perturbed_linear
from estimators.transport import (
    EstimatorSample,
    check_transport_problem,
    sample_derivative,
    sample_unbiased_transport,
)
from paths.mesh_path import SigmaSchedule, switching_deficit
from problems.problem import ProblemSpec
from sampling.distributions import LifetimeParams, RngStream
from utils.errors import ConfigurationError, PoisonedSampleError

logger = logging.getLogger(__name__)

# "unbiased" and "perturbed" pick the linear or the nonlinear variant from the problem
METHODS = ("unbiased", "perturbed", "derivative", "branching", "nonlinear")


@dataclass(frozen=True)
class EstimatorTask:
    """One estimator bound to its problem and parameters; task(rng) draws one sample"""
    method: str
    problem: ProblemSpec
    schedule: SigmaSchedule
    params: LifetimeParams
    events: Optional[EventDistribution] = None
    sigma: float = DEFAULT_PERTURBATION_SIGMA
    order: int = 1
    half_v: bool = False
    max_depth: int = DEFAULT_MAX_DEPTH

    @property
    def label(self):
        if self.method == "derivative":
            return f"derivative{self.order}"
        return self.method

    @property
    def is_biased(self):
        return self.method in ("perturbed", "branching")

    @property
    def vectorized(self):
        """Whether draw_block can produce this task's samples"""
        if not self.problem.is_linear:
            return False
        if self.method in ("unbiased", "derivative"):
            return not self.problem.space_dependent
        return self.method == "perturbed"

    def switching_deficit(self) -> float:
        """Explosion probability of the sigma switching clock, 0 for the baselines"""
        if self.is_biased:
            return 0.0
        return switching_deficit(self.schedule.sigma0, self.schedule.n, self.problem.horizon)

    def draw_block(self, generator: np.random.Generator, size: int) -> SampleBlock:
        if self.method == "perturbed":
            return perturbed_block(self.problem, self.sigma, generator, size)
        paths = simulate_block(self.problem, self.schedule, self.params, generator, size)
        if self.method == "derivative":
            return derivative_block(paths, self.problem, self.params, self.order, self.half_v)
        return transport_block(paths, self.problem, self.params, self.half_v)

    def draw(self, rng: RngStream) -> EstimatorSample:
        problem = self.problem
        if self.method == "unbiased":
            if problem.is_linear:
                return sample_unbiased_transport(problem, self.schedule, self.params, rng, self.half_v)
            return sample_unbiased_nonlinear(problem, self.events, self.schedule, self.params, rng,
                                             self.max_depth)
        if self.method == "nonlinear":
            return sample_unbiased_nonlinear(problem, self.events, self.schedule, self.params, rng,
                                             self.max_depth)
        if self.method == "derivative":
            return sample_derivative(problem, self.order, self.schedule, self.params, rng, self.half_v)
        if self.method == "perturbed" and problem.is_linear:
            return EstimatorSample(sample_perturbed_linear(problem, self.sigma, rng))
        return EstimatorSample(sample_branching_semilinear(problem, self.sigma, self.events, self.params,
                                                           rng, self.max_depth))

    def __call__(self, rng: RngStream) -> EstimatorSample:
        try:
            sample = self.draw(rng)
        except PoisonedSampleError as exc:
            return EstimatorSample.poisoned_sample(exc.reason)
        if not math.isfinite(sample.value):
            return EstimatorSample.poisoned_sample("non-finite sample value", sample.n_switches)
        return sample


def make_task(method: str, problem: ProblemSpec, schedule: SigmaSchedule, params: LifetimeParams,
              events: Optional[EventDistribution] = None, sigma: Optional[float] = None, order: int = 1,
              half_v: bool = False, max_depth: int = DEFAULT_MAX_DEPTH) -> EstimatorTask:
    """Validated task for a named method; raises ConfigurationError on a mismatch"""
    method = method.strip().lower()
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r} (known: {', '.join(METHODS)})")
    if sigma is None:
        sigma = problem.perturbation_sigma if problem.perturbation_sigma is not None else DEFAULT_PERTURBATION_SIGMA
    if events is None:
        events = EventDistribution.uniform(problem)
    if max_depth < 1:
        raise ConfigurationError(f"max_depth must be at least 1, got {max_depth}")

    nonlinear_kind = method == "nonlinear" or (method == "unbiased" and not problem.is_linear)
    branching_kind = method == "branching" or (method == "perturbed" and not problem.is_linear)
    if method == "derivative":
        if order not in (1, 2):
            raise ConfigurationError(f"derivative order must be 1 or 2, got {order}")
        check_transport_problem(problem, schedule)
    elif nonlinear_kind:
        check_branching_problem(problem, events)
        logger.warning("Using the experimental unbiased nonlinear estimator on %s", problem.name)
    elif branching_kind:
        check_branching_problem(problem, events)
        check_perturbation_sigma(sigma)
        if not problem.is_linear and not sigma > 0:
            raise ConfigurationError("branching with derivative marks needs sigma > 0")
    elif method == "unbiased":
        check_transport_problem(problem, schedule)
    else:
        check_perturbation_sigma(sigma)
        if problem.space_dependent:
            raise ConfigurationError(f"{problem.name} has a space-dependent drift; perturbation needs b(t)")
    return EstimatorTask(method, problem, schedule, params, events, float(sigma), order, half_v, max_depth)
