"""
Experimental Unbiased Nonlinear Estimator
Regime-switching particles that either apply the Laplacian correction and
carry on, or branch on a nonlinearity monomial into fresh particles
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

from config.defaults import DEFAULT_MAX_DEPTH
from estimators.branching import (
    CORRECTION,
    FIRST,
    VALUE,
    BranchingBudget,
    EventDistribution,
    check_branching_problem,
    children_marks,
)
from estimators.transport import EstimatorSample
from paths.mesh_path import SigmaSchedule, exp_or_inf
from problems.problem import ProblemSpec
from sampling.distributions import (
    LifetimeParams,
    RngStream,
    lifetime_density,
    lifetime_survival,
    sample_gaussian_increment,
    sample_lifetime,
)
from utils.errors import PoisonedSampleError
from weights.weights import factor_m, factor_v, weight_w1

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Particle:
    """
    A particle alive from time s at position y.

    log_sigma is the diffusion on its current leg. A correction particle also
    remembers the sigma and the drift of the leg it continues from.
    """
    s: float
    y: float
    mark: str
    log_sigma: float
    depth: int = 0
    sigma_prev: Optional[float] = None
    drift_prev: Optional[float] = None


class _Walker:
    def __init__(self, problem, events, schedule, params, rng, budget):
        self.problem = problem
        self.law = events.probabilities
        self.schedule = schedule
        self.params = params
        self.rng = rng
        self.budget = budget
        self.switches = 0

    def leg_weight(self, particle, sigma, drift, dw, dt):
        if particle.mark == VALUE:
            return 1.0
        if particle.mark == FIRST:
            return weight_w1(sigma, dw, dt)
        m = factor_m(drift - particle.drift_prev, sigma, dw, dt)
        return m + factor_v(particle.sigma_prev, sigma, dw, dt)

    def terminal(self, particle, sigma, drift, dw, dt):
        g = self.problem.g
        survival = lifetime_survival(self.params, dt)
        if survival <= 0.0:
            raise PoisonedSampleError("survival underflow", f"final leg of length {dt:g}")
        centre = particle.y + drift * dt
        if particle.mark == VALUE:
            return g(centre + sigma * dw) / survival
        delta_g = g(centre + sigma * dw) - g(centre)
        delta_g_hat = g(centre - sigma * dw) - g(centre)
        if particle.mark == FIRST:
            return (delta_g - delta_g_hat) / (2.0 * survival) * weight_w1(sigma, dw, dt)
        m = factor_m(drift - particle.drift_prev, sigma, dw, dt)
        v = factor_v(particle.sigma_prev, sigma, dw, dt)
        return 0.5 * (delta_g * (m + v) + delta_g_hat * (-m + v)) / survival

    def run(self, particle: Particle) -> float:
        self.budget.enter(particle.depth)
        problem = self.problem
        sigma = exp_or_inf(particle.log_sigma)
        if math.isinf(sigma) or sigma == 0.0:
            raise PoisonedSampleError("sigma overflow", f"depth {particle.depth}")
        drift = problem.drift(particle.s, particle.y)
        if not math.isfinite(drift):
            raise PoisonedSampleError("non-finite drift", f"{drift} at t = {particle.s}, x = {particle.y}")

        tau = sample_lifetime(self.params, self.rng)
        if particle.s + tau >= problem.t_end:
            dt = problem.t_end - particle.s
            dw = sample_gaussian_increment(self.rng, dt)
            return self.terminal(particle, sigma, drift, dw, dt)

        switch_time = particle.s + tau
        if switch_time == particle.s:
            raise PoisonedSampleError("vanishing lifetime", f"{tau:g} at t = {particle.s}")
        self.switches += 1
        dw = sample_gaussian_increment(self.rng, tau)
        position = particle.y + drift * tau + sigma * dw
        value = self.leg_weight(particle, sigma, drift, dw, tau) / lifetime_density(self.params, tau)

        kind = self.rng.categorical(self.law)
        if kind == 0:
            successor = Particle(switch_time, position, CORRECTION,
                                 self.schedule.next_log_sigma(particle.log_sigma, tau),
                                 particle.depth + 1, sigma_prev=sigma, drift_prev=drift)
            return value / self.law[0] * self.run(successor)

        monomial = problem.nonlinearity[kind - 1]
        value *= monomial.coefficient / self.law[kind]
        fresh = math.log(self.schedule.sigma0)
        for mark in children_marks(monomial):
            value *= self.run(Particle(switch_time, position, mark, fresh, particle.depth + 1))
        return value


def sample_unbiased_nonlinear(problem: ProblemSpec, events: EventDistribution, schedule: SigmaSchedule,
                              params: LifetimeParams, rng: RngStream,
                              max_depth: int = DEFAULT_MAX_DEPTH) -> EstimatorSample:
    """
    One realisation of the experimental nonlinear estimator.

    Without a nonlinearity and with correction probability one it coincides in
    law with the unbiased transport estimator.
    """
    check_branching_problem(problem, events)
    walker = _Walker(problem, events, schedule, params, rng, BranchingBudget(max_depth))
    root = Particle(problem.t_start, problem.x0, VALUE, math.log(schedule.sigma0))
    value = walker.run(root)
    if not math.isfinite(value):
        raise PoisonedSampleError("weight overflow", "nonlinear payoff")
    return EstimatorSample(value, walker.switches)
