"""
Stochastic Mesh and Frozen-Coefficient Paths
Switching-time meshes, the mesh-dependent diffusion schedule and the exact
Euler path with its antithetic terminal leg and control-variate point
"""
import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from config.defaults import (
    DEFAULT_SIGMA0,
    DEFAULT_SIGMA_EXPONENT,
    DEFICIT_CHAINS,
    DEFICIT_MAX_JUMPS,
    DEFICIT_SEED,
)
from sampling.distributions import LifetimeParams, RngStream, sample_gaussian_increment, sample_lifetime
from utils.errors import ConfigurationError, DomainError, PoisonedSampleError, ProblemError

logger = logging.getLogger(__name__)

Drift = Callable[[float, float], float]


@dataclass(frozen=True)
class TimeMesh:
    """Switching times t = T_0 < ... < T_{N_T+1} = T"""
    t_start: float
    t_end: float
    times: Tuple[float, ...]
    increments: Tuple[float, ...]
    n_switches: int

    @property
    def n_legs(self):
        return self.n_switches + 1


@dataclass(frozen=True)
class SigmaSchedule:
    """sigma on leg k is sigma0 * prod_{i<k} dT_i^n"""
    sigma0: float = DEFAULT_SIGMA0
    n: float = DEFAULT_SIGMA_EXPONENT
    unsafe_variance: bool = False

    def __post_init__(self):
        if not (self.sigma0 > 0 and math.isfinite(self.sigma0)):
            raise ConfigurationError(f"sigma0 must be positive, got {self.sigma0}")
        if not math.isfinite(self.n):
            raise ConfigurationError(f"sigma exponent n must be finite, got {self.n}")
        if self.n > -1:
            if not self.unsafe_variance:
                raise ConfigurationError(
                    f"n = {self.n} violates the finite-variance assumption "
                    "(power exponent n <= -1); set unsafe_variance = true to override"
                )
            logger.warning("sigma exponent n = %s accepted under unsafe_variance", self.n)

    def next_log_sigma(self, log_sigma, dt):
        """log sigma of the leg that follows a leg of length dt"""
        return log_sigma + self.n * math.log(dt)


@dataclass(frozen=True)
class PathSample:
    """Euler path values on one mesh, with the antithetic terminal and control-variate point"""
    mesh: TimeMesh
    x_values: Tuple[float, ...]
    dw: Tuple[float, ...]
    drift_values: Tuple[float, ...]
    x_hat_terminal: float
    cv_point: float
    log_sigma_legs: Tuple[float, ...]
    sigma_legs: Tuple[float, ...]

    @property
    def x_terminal(self):
        return self.x_values[-1]

    def shifted(self, offset: float) -> "PathSample":
        """Same path started offset further along x; valid while the drift ignores x"""
        return replace(
            self,
            x_values=tuple(x + offset for x in self.x_values),
            x_hat_terminal=self.x_hat_terminal + offset,
            cv_point=self.cv_point + offset,
        )


def mesh_from_lifetimes(t: float, T: float, lifetimes: Sequence[float]) -> TimeMesh:
    """Mesh obtained by accumulating the given lifetimes and truncating at T"""
    if not t < T:
        raise DomainError(f"mesh requires t < T, got t = {t}, T = {T}")
    times = [t]
    increments = []
    for tau in lifetimes:
        if not tau > 0:
            raise DomainError(f"lifetimes must be positive, got {tau}")
        switch_time = times[-1] + tau
        if switch_time >= T:
            break
        if switch_time == times[-1]:
            # lifetime below the float resolution at this time
            raise PoisonedSampleError("vanishing lifetime", f"{tau:g} at t = {times[-1]}")
        times.append(switch_time)
        increments.append(times[-1] - times[-2])
    else:
        raise DomainError("lifetimes exhausted before reaching the horizon")
    times.append(T)
    increments.append(T - times[-2])
    return TimeMesh(t, T, tuple(times), tuple(increments), len(times) - 2)


def build_mesh(t: float, T: float, params: LifetimeParams, rng: RngStream) -> TimeMesh:
    """Random mesh on [t, T] from i.i.d. Gamma lifetimes"""
    if not t < T:
        raise DomainError(f"mesh requires t < T, got t = {t}, T = {T}")

    def lifetimes():
        while True:
            yield sample_lifetime(params, rng)

    return mesh_from_lifetimes(t, T, lifetimes())


def log_sigma_legs(schedule: SigmaSchedule, mesh: TimeMesh):
    """log sigma for legs 1..N_T+1"""
    logs = [math.log(schedule.sigma0)]
    for dt in mesh.increments[:-1]:
        logs.append(schedule.next_log_sigma(logs[-1], dt))
    return tuple(logs)


def exp_or_inf(log_value):
    return math.exp(log_value) if log_value < 709.0 else math.inf


def sigma_at(schedule: SigmaSchedule, mesh: TimeMesh, k: int) -> float:
    """sigma on leg k, i.e. on the half-open interval (T_{k-1}, T_k]; +inf on overflow"""
    if not 1 <= k <= mesh.n_legs:
        raise DomainError(f"leg index {k} outside 1..{mesh.n_legs}")
    return exp_or_inf(log_sigma_legs(schedule, mesh)[k - 1])


def _evaluate_drift(drift, s, x):
    value = drift(s, x)
    if not math.isfinite(value):
        raise ProblemError(f"drift is not finite at t = {s}: {value}")
    return value


def evolve_path(mesh: TimeMesh, drift: Drift, schedule: SigmaSchedule, rng: Optional[RngStream],
                x: float, dw: Optional[Sequence[float]] = None) -> PathSample:
    """
    Frozen-coefficient Euler path started at x on the mesh.

    Brownian increments are drawn from rng unless given explicitly in dw.
    A sigma leg that overflows aborts the sample as poisoned.
    """
    logs = log_sigma_legs(schedule, mesh)
    sigmas = tuple(exp_or_inf(v) for v in logs)
    if any(math.isinf(s) or s == 0.0 for s in sigmas):
        raise PoisonedSampleError("sigma overflow", f"mesh with {mesh.n_switches} switches")
    if dw is None:
        dw = tuple(sample_gaussian_increment(rng, dt) for dt in mesh.increments)
    elif len(dw) != mesh.n_legs:
        raise DomainError(f"expected {mesh.n_legs} Brownian increments, got {len(dw)}")

    values = [x]
    drifts = []
    for k in range(mesh.n_switches):
        b = _evaluate_drift(drift, mesh.times[k], values[-1])
        drifts.append(b)
        values.append(values[-1] + b * mesh.increments[k] + sigmas[k] * dw[k])

    b_last = _evaluate_drift(drift, mesh.times[-2], values[-1])
    drifts.append(b_last)
    cv_point = values[-1] + b_last * mesh.increments[-1]
    shock = sigmas[-1] * dw[-1]
    values.append(cv_point + shock)
    x_hat = cv_point - shock
    return PathSample(mesh, tuple(values), tuple(dw), tuple(drifts), x_hat, cv_point, logs, sigmas)


@lru_cache(maxsize=64)
def switching_deficit(sigma0: float, n: float, horizon: float, n_chains: int = DEFICIT_CHAINS,
                      seed: int = DEFICIT_SEED, max_jumps: int = DEFICIT_MAX_JUMPS) -> float:
    """
    Probability that the sigma switching clock explodes before the horizon.

    Each expansion level of the estimator is exact, so its expectation is the
    true value times one minus this probability. The clock jumps at rate
    sigma^2 / 2 and every jump after a gap dt multiplies sigma by dt^n; with
    n < 0 the rates can run away in finite time. Chains still jumping after
    max_jumps count as exploded.
    """
    if not (sigma0 > 0 and horizon > 0):
        raise DomainError(f"switching deficit needs sigma0 > 0 and a positive horizon, got {sigma0}, {horizon}")
    if n >= 0:
        # rates grow only across gaps longer than one, which the horizon bounds in number
        return 0.0
    generator = np.random.Generator(np.random.Philox(seed))
    log_sigma = np.full(n_chains, math.log(sigma0))
    remaining = np.full(n_chains, float(horizon))
    alive = np.ones(n_chains, dtype=bool)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        for _ in range(max_jumps):
            index = np.flatnonzero(alive)
            if index.size == 0:
                break
            rate = 0.5 * np.exp(2.0 * log_sigma[index])
            gap = generator.standard_exponential(index.size) / rate
            stopped = gap >= remaining[index]
            alive[index[stopped]] = False
            jumped, gap = index[~stopped], gap[~stopped]
            remaining[jumped] -= gap
            log_sigma[jumped] += n * np.log(gap)
    deficit = float(np.count_nonzero(alive)) / n_chains
    logger.debug("switching deficit at sigma0 = %g, n = %g, horizon %g: %.4g", sigma0, n, horizon, deficit)
    return deficit
