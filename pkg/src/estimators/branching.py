"""
Branching Estimators
Event-type law and the semilinear branching baseline, which solves the
problem perturbed by (sigma0^2 / 2) dxx with marked branching particles
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

from config.defaults import DEFAULT_MAX_DEPTH, MAX_PARTICLES
from estimators.perturbation import check_perturbation_sigma, sample_perturbed_linear, transport_shift
from problems.problem import ProblemSpec
from sampling.distributions import (
    LifetimeParams,
    RngStream,
    lifetime_density,
    lifetime_survival,
    sample_gaussian_increment,
    sample_lifetime,
)
from utils.errors import ConfigurationError, PoisonedSampleError
from weights.weights import weight_w1

logger = logging.getLogger(__name__)

VALUE, FIRST, CORRECTION = "value", "first", "correction"


@dataclass(frozen=True)
class EventDistribution:
    """
    Probabilities of the event kinds at a switching time: the Laplacian
    correction and each nonlinearity monomial, in the problem's order.
    """
    correction: float
    monomials: Tuple[float, ...] = ()

    def __post_init__(self):
        probabilities = (self.correction,) + tuple(self.monomials)
        if any(not (p > 0 and math.isfinite(p)) for p in probabilities):
            raise ConfigurationError(f"event probabilities must be positive, got {probabilities}")
        total = math.fsum(probabilities)
        if abs(total - 1.0) > 1e-12:
            raise ConfigurationError(f"event probabilities must sum to 1, got {total!r}")

    @classmethod
    def uniform(cls, problem: ProblemSpec) -> "EventDistribution":
        kinds = len(problem.nonlinearity) + 1
        return cls(1.0 / kinds, (1.0 / kinds,) * (kinds - 1))

    @property
    def probabilities(self):
        return (self.correction,) + tuple(self.monomials)

    def check_against(self, problem: ProblemSpec):
        if len(self.monomials) != len(problem.nonlinearity):
            raise ConfigurationError(
                f"event law lists {len(self.monomials)} monomial probabilities, "
                f"{problem.name} has {len(problem.nonlinearity)} monomials"
            )

    def monomial_law(self):
        """Monomial probabilities renormalized without the correction kind"""
        total = math.fsum(self.monomials)
        return tuple(p / total for p in self.monomials)


@dataclass
class BranchingBudget:
    """Depth cap and particle counter for one sample"""
    max_depth: int = DEFAULT_MAX_DEPTH
    max_particles: int = MAX_PARTICLES
    particles: int = field(default=0)

    def enter(self, depth):
        self.particles += 1
        if depth > self.max_depth:
            raise PoisonedSampleError("depth cap", f"branching depth {self.max_depth} reached")
        if self.particles > self.max_particles:
            raise PoisonedSampleError("particle cap", f"more than {self.max_particles} particles")


def check_branching_problem(problem: ProblemSpec, events: EventDistribution):
    if problem.space_dependent:
        raise ConfigurationError(f"{problem.name} has a space-dependent drift; branching needs b(t)")
    events.check_against(problem)


def children_marks(monomial):
    return (VALUE,) * monomial.v_power + (FIRST,) * monomial.dv_power


def _semilinear_particle(problem, sigma0, law, params, rng, budget, s, y, mark, depth):
    budget.enter(depth)
    tau = sample_lifetime(params, rng)
    if s + tau >= problem.t_end:
        dt = problem.t_end - s
        dw = sample_gaussian_increment(rng, dt)
        centre = y + transport_shift(problem, s, problem.t_end)
        survival = lifetime_survival(params, dt)
        if mark == VALUE:
            return problem.g(centre + sigma0 * dw) / survival
        spread = problem.g(centre + sigma0 * dw) - problem.g(centre - sigma0 * dw)
        return spread / (2.0 * survival) * weight_w1(sigma0, dw, dt)

    switch_time = s + tau
    dw = sample_gaussian_increment(rng, tau)
    position = y + transport_shift(problem, s, switch_time) + sigma0 * dw
    index = rng.categorical(law)
    monomial = problem.nonlinearity[index]
    value = monomial.coefficient / (lifetime_density(params, tau) * law[index])
    for child in children_marks(monomial):
        value *= _semilinear_particle(problem, sigma0, law, params, rng, budget,
                                      switch_time, position, child, depth + 1)
    if mark == FIRST:
        value *= weight_w1(sigma0, dw, tau)
    return value


def sample_branching_semilinear(problem: ProblemSpec, sigma0: float, events: EventDistribution,
                                params: LifetimeParams, rng: RngStream,
                                max_depth: int = DEFAULT_MAX_DEPTH) -> float:
    """
    One realisation of the marked branching estimator of the perturbed problem.

    Mark-0 particles estimate v and mark-1 particles estimate Dv through the
    first order weight of their own leg. Without a nonlinearity the single
    particle runs straight to T.
    """
    check_branching_problem(problem, events)
    check_perturbation_sigma(sigma0)
    if problem.is_linear:
        return sample_perturbed_linear(problem, sigma0, rng)
    if not sigma0 > 0:
        raise ConfigurationError("branching with derivative marks needs sigma0 > 0")
    budget = BranchingBudget(max_depth)
    value = _semilinear_particle(problem, sigma0, events.monomial_law(), params, rng, budget,
                                 problem.t_start, problem.x0, VALUE, 0)
    if not math.isfinite(value):
        raise PoisonedSampleError("weight overflow", "branching payoff")
    return value
