"""
Unbiased Regime-Switching Transport Estimator
Per-sample payoff of the linear transport PDE and its spatial derivatives
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

from paths.mesh_path import PathSample, SigmaSchedule, build_mesh, evolve_path
from problems.problem import ProblemSpec
from sampling.distributions import LifetimeParams, RngStream, lifetime_density, lifetime_survival
from utils.errors import ConfigurationError, DomainError, PoisonedSampleError
from weights.weights import (
    WeightProduct,
    accumulate,
    factor_m,
    factor_v,
    switch_factor_p,
    weight_w1,
    weight_w2,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EstimatorSample:
    """One realisation of an estimator and its per-sample diagnostics"""
    value: float
    n_switches: int = 0
    used_log_path: bool = False
    max_abs_factor: float = 0.0
    beta_terms: Optional[Tuple[float, float]] = None
    poisoned: bool = False
    reason: str = ""

    @classmethod
    def poisoned_sample(cls, reason, n_switches=0):
        return cls(math.nan, n_switches, poisoned=True, reason=reason)


@dataclass(frozen=True)
class LegFactors:
    """M and V of one leg against the leg before it"""
    m: float
    v: float
    density_prev: float


def leg_factors(path: PathSample, params: LifetimeParams, k: int) -> LegFactors:
    """M_k, V_k and f(dT_{k-1}) for leg k >= 2 (1-based)"""
    mesh = path.mesh
    dt, dw = mesh.increments[k - 1], path.dw[k - 1]
    sigma_prev, sigma_cur = path.sigma_legs[k - 2], path.sigma_legs[k - 1]
    delta_b = path.drift_values[k - 1] - path.drift_values[k - 2]
    return LegFactors(
        m=factor_m(delta_b, sigma_cur, dw, dt),
        v=factor_v(sigma_prev, sigma_cur, dw, dt),
        density_prev=lifetime_density(params, mesh.increments[k - 2]),
    )


def terminal_differences(path: PathSample, problem: ProblemSpec) -> Tuple[float, float]:
    """(delta_g, delta_g_hat) against the control-variate point"""
    g_cv = problem.g(path.cv_point)
    return problem.g(path.x_terminal) - g_cv, problem.g(path.x_hat_terminal) - g_cv


def beta_terms(delta_g, delta_g_hat, factors: LegFactors, survival, half_v=False):
    """Antithetic halves (beta_1, beta_2) of the terminal factor"""
    v = 0.5 * factors.v if half_v else factors.v
    scale = 2.0 * survival * factors.density_prev
    return delta_g * (factors.m + v) / scale, delta_g_hat * (-factors.m + v) / scale


def _switch_product(path: PathSample, params: LifetimeParams, half_v: bool):
    state = WeightProduct.identity()
    largest = 0.0
    for k in range(2, path.mesh.n_switches + 1):
        factors = leg_factors(path, params, k)
        p = switch_factor_p(factors.m, factors.v, factors.density_prev, half_v=half_v)
        largest = max(largest, abs(p))
        state = accumulate(state, p)
    return state, largest


def transport_value(path: PathSample, problem: ProblemSpec, params: LifetimeParams,
                    half_v: bool = False) -> EstimatorSample:
    """
    Estimator value on an already simulated path.

    No switch: g(X_T) / F(dT_1). Otherwise beta times the product of the
    interior switch factors P_2..P_{N_T}, with beta built from the antithetic
    terminal pair and the control variate at the drift-only terminal point.
    """
    mesh = path.mesh
    survival = lifetime_survival(params, mesh.increments[-1])
    if survival <= 0.0:
        raise PoisonedSampleError("survival underflow", f"final leg of length {mesh.increments[-1]:g}")
    if mesh.n_switches == 0:
        return EstimatorSample(problem.g(path.x_terminal) / survival, 0)

    delta_g, delta_g_hat = terminal_differences(path, problem)
    factors = leg_factors(path, params, mesh.n_legs)
    beta_1, beta_2 = beta_terms(delta_g, delta_g_hat, factors, survival, half_v)
    product, largest = _switch_product(path, params, half_v)
    value, used_log = product.scaled(beta_1 + beta_2)
    if not math.isfinite(value):
        raise PoisonedSampleError("weight overflow", f"{mesh.n_switches} switches")
    return EstimatorSample(value, mesh.n_switches, used_log, largest, (beta_1, beta_2))


def expanded_transport_value(path: PathSample, problem: ProblemSpec, params: LifetimeParams) -> float:
    """
    Same value written term by term: each antithetic half carries its own
    product of (db W1 - sigma^2 W2 / 2) / f factors.
    """
    mesh = path.mesh
    survival = lifetime_survival(params, mesh.increments[-1])
    if mesh.n_switches == 0:
        return problem.g(path.x_terminal) / survival
    delta_g, delta_g_hat = terminal_differences(path, problem)
    n = mesh.n_switches
    sigma_prev = path.sigma_legs[n - 1]
    sigma_last = path.sigma_legs[n]
    dt_last, dw_last = mesh.increments[n], path.dw[n]
    delta_b = path.drift_values[n] - path.drift_values[n - 1]
    density = lifetime_density(params, mesh.increments[n - 1])
    w1 = weight_w1(sigma_last, dw_last, dt_last)
    w2 = weight_w2(sigma_last, dw_last, dt_last)
    first = delta_g / (2.0 * survival) * (delta_b * w1 - 0.5 * sigma_prev ** 2 * w2) / density
    second = delta_g_hat / (2.0 * survival) * (-delta_b * w1 - 0.5 * sigma_prev ** 2 * w2) / density
    for k in range(2, n + 1):
        dt, dw = mesh.increments[k - 1], path.dw[k - 1]
        sigma = path.sigma_legs[k - 1]
        factor = ((path.drift_values[k - 1] - path.drift_values[k - 2]) * weight_w1(sigma, dw, dt)
                  - 0.5 * path.sigma_legs[k - 2] ** 2 * weight_w2(sigma, dw, dt))
        factor /= lifetime_density(params, mesh.increments[k - 2])
        first *= factor
        second *= factor
    return first + second


def check_transport_problem(problem: ProblemSpec, schedule: SigmaSchedule):
    if not problem.is_linear:
        raise ConfigurationError(
            f"{problem.name} has a nonlinearity; the transport estimator solves linear problems only"
        )
    if problem.space_dependent and not schedule.unsafe_variance:
        raise ConfigurationError(
            f"{problem.name} has a space-dependent drift; set unsafe_variance = true to override"
        )


def simulate_path(problem: ProblemSpec, schedule: SigmaSchedule, params: LifetimeParams,
                  rng: RngStream) -> PathSample:
    mesh = build_mesh(problem.t_start, problem.t_end, params, rng)
    return evolve_path(mesh, problem.drift, schedule, rng, problem.x0)


def sample_unbiased_transport(problem: ProblemSpec, schedule: SigmaSchedule, params: LifetimeParams,
                              rng: RngStream, half_v: bool = False) -> EstimatorSample:
    """One realisation of the unbiased estimator of v(t, x)"""
    check_transport_problem(problem, schedule)
    path = simulate_path(problem, schedule, params, rng)
    return transport_value(path, problem, params, half_v)


def derivative_value(path: PathSample, problem: ProblemSpec, params: LifetimeParams, order: int,
                     half_v: bool = False) -> EstimatorSample:
    """
    psi * W^order of the first leg, with the control-variate form on the no-switch stratum.

    With a drift in t alone the first-leg shock only translates the rest of
    the path, so switched samples pair psi with its mirror image (shock
    reversed) and, at second order, subtract the shock-free value.
    """
    if order not in (1, 2):
        raise DomainError(f"derivative order must be 1 or 2, got {order}")
    mesh = path.mesh
    weight = weight_w1 if order == 1 else weight_w2
    first_weight = weight(path.sigma_legs[0], path.dw[0], mesh.increments[0])
    if mesh.n_switches == 0:
        survival = lifetime_survival(params, mesh.increments[-1])
        if survival <= 0.0:
            raise PoisonedSampleError("survival underflow", "single leg")
        delta_g, delta_g_hat = terminal_differences(path, problem)
        if order == 1:
            phi = (delta_g - delta_g_hat) / (2.0 * survival)
        else:
            phi = (delta_g + delta_g_hat) / (2.0 * survival)
        return EstimatorSample(phi * first_weight, 0)
    sample = transport_value(path, problem, params, half_v)
    if problem.space_dependent:
        psi = sample.value
    else:
        shock = path.sigma_legs[0] * path.dw[0]
        mirrored = transport_value(path.shifted(-2.0 * shock), problem, params, half_v).value
        if order == 1:
            psi = 0.5 * (sample.value - mirrored)
        else:
            unshocked = transport_value(path.shifted(-shock), problem, params, half_v).value
            psi = 0.5 * (sample.value + mirrored) - unshocked
    value = psi * first_weight
    if not math.isfinite(value):
        raise PoisonedSampleError("weight overflow", "derivative weight")
    return EstimatorSample(value, sample.n_switches, sample.used_log_path, sample.max_abs_factor,
                           sample.beta_terms)


def sample_derivative_estimate(problem: ProblemSpec, order: int, schedule: SigmaSchedule,
                               params: LifetimeParams, rng: RngStream, half_v: bool = False) -> float:
    """One realisation of the estimator of the order-th spatial derivative"""
    return sample_derivative(problem, order, schedule, params, rng, half_v).value


def sample_derivative(problem, order, schedule, params, rng, half_v=False) -> EstimatorSample:
    check_transport_problem(problem, schedule)
    path = simulate_path(problem, schedule, params, rng)
    return derivative_value(path, problem, params, order, half_v)
