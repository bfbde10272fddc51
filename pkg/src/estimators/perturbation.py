"""
Perturbation Baseline
Exact simulation of the transport problem perturbed by (sigma0^2 / 2) dxx
"""
import math
from functools import lru_cache

from problems.problem import ProblemSpec, drift_integral
from sampling.distributions import RngStream
from utils.errors import ConfigurationError


@lru_cache(maxsize=64)
def transport_shift(problem: ProblemSpec, s0: float, s1: float) -> float:
    """Cached drift integral over [s0, s1]"""
    return drift_integral(problem, s0, s1)


def check_perturbation_sigma(sigma0):
    if not (sigma0 >= 0 and math.isfinite(sigma0)):
        raise ConfigurationError(f"perturbation sigma must be a nonnegative number, got {sigma0}")


def sample_perturbed_linear(problem: ProblemSpec, sigma0: float, rng: RngStream) -> float:
    """g(x + int_t^T b + sigma0 sqrt(T - t) Z)"""
    if not problem.is_linear:
        raise ConfigurationError(f"{problem.name} has a nonlinearity; use the branching baseline")
    if problem.space_dependent:
        raise ConfigurationError(f"{problem.name} has a space-dependent drift; perturbation needs b(t)")
    check_perturbation_sigma(sigma0)
    shift = transport_shift(problem, problem.t_start, problem.t_end)
    z = rng.normal()
    return problem.g(problem.x0 + shift + sigma0 * math.sqrt(problem.horizon) * z)
