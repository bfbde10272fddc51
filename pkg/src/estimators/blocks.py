"""
Vectorised Sample Blocks
Transport, derivative and perturbation samples computed a whole block at a
time with numpy, one row per sample, from the generator of that block
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from estimators.perturbation import check_perturbation_sigma, transport_shift
from paths.mesh_path import SigmaSchedule
from problems.problem import ProblemSpec
from sampling.distributions import (
    LifetimeParams,
    lifetime_density_array,
    lifetime_survival_array,
    sample_lifetime_array,
)
from utils.errors import DomainError

logger = logging.getLogger(__name__)

_LOG_OVERFLOW = 709.0
HEALTHY = ""


@dataclass(frozen=True, eq=False)
class SampleBlock:
    """Values of consecutive samples; poisoned entries are NaN and carry a reason"""
    values: np.ndarray
    n_switches: np.ndarray
    reasons: np.ndarray

    def __len__(self):
        return int(self.values.size)

    @property
    def poisoned(self):
        return self.reasons != HEALTHY

    def window(self, lo: int, hi: int) -> "SampleBlock":
        return SampleBlock(self.values[lo:hi], self.n_switches[lo:hi], self.reasons[lo:hi])


@dataclass(frozen=True, eq=False)
class PathBlock:
    """
    Meshes and frozen-coefficient paths of a block.

    Row i has n_switches[i] + 1 legs; leg columns past the last leg hold NaN.
    Terminal points of poisoned rows are reset to the start point.
    """
    times: np.ndarray
    increments: np.ndarray
    dw: np.ndarray
    log_sigma: np.ndarray
    sigma: np.ndarray
    drift_values: np.ndarray
    x_terminal: np.ndarray
    x_hat_terminal: np.ndarray
    cv_point: np.ndarray
    n_switches: np.ndarray
    reasons: np.ndarray

    def __len__(self):
        return int(self.n_switches.size)

    @property
    def healthy(self):
        return self.reasons == HEALTHY

    def leg(self, array: np.ndarray, back: int = 0) -> np.ndarray:
        """Per-row entry of a leg array at leg n_switches - back (0-based), NaN where that leg is missing"""
        columns = self.n_switches - back
        values = np.full(len(self), np.nan)
        present = columns >= 0
        rows = np.flatnonzero(present)
        values[rows] = array[rows, columns[present]]
        return values


def _empty_reasons(size):
    return np.full(size, HEALTHY, dtype=object)


def simulate_block(problem: ProblemSpec, schedule: SigmaSchedule, params: LifetimeParams,
                   generator: np.random.Generator, size: int) -> PathBlock:
    """
    size meshes and paths on [t, T] for a drift in t alone.

    Lifetimes are drawn round by round for the rows still short of T, then one
    Gaussian matrix covers every leg.
    """
    if size < 1:
        raise DomainError(f"block size must be at least 1, got {size}")
    t0, t_end = problem.t_start, problem.t_end
    reasons = _empty_reasons(size)
    n_switches = np.zeros(size, dtype=np.int64)
    current = np.full(size, t0)
    log_now = np.full(size, math.log(schedule.sigma0))
    switch_columns, log_columns = [], [log_now.copy()]
    active = np.ones(size, dtype=bool)

    with np.errstate(divide="ignore", over="ignore"):
        while active.any():
            index = np.flatnonzero(active)
            previous = current[index]
            switch = previous + sample_lifetime_array(params, generator, index.size)
            finished = switch >= t_end
            vanished = ~finished & (switch == previous)
            moved = ~finished & ~vanished
            active[index[finished | vanished]] = False
            reasons[index[vanished]] = "vanishing lifetime"
            rows = index[moved]
            if rows.size == 0:
                continue
            current[rows] = switch[moved]
            n_switches[rows] += 1
            column = np.full(size, np.nan)
            column[rows] = current[rows]
            log_column = np.full(size, np.nan)
            log_column[rows] = log_now[rows] + schedule.n * np.log(current[rows] - previous[moved])
            log_now[rows] = log_column[rows]
            overflow = rows[(log_column[rows] >= _LOG_OVERFLOW) | (np.exp(log_column[rows]) == 0.0)]
            reasons[overflow] = "sigma overflow"
            active[overflow] = False
            switch_columns.append(column)
            log_columns.append(log_column)

    all_rows = np.arange(size)
    times = np.column_stack([np.full(size, t0)] + switch_columns + [np.full(size, np.nan)])
    times[all_rows, n_switches + 1] = t_end
    increments = times[:, 1:] - times[:, :-1]
    log_sigma = np.column_stack(log_columns)
    with np.errstate(over="ignore"):
        sigma = np.where(log_sigma >= _LOG_OVERFLOW, np.inf, np.exp(np.minimum(log_sigma, _LOG_OVERFLOW)))
    legs = ~np.isnan(increments)
    with np.errstate(invalid="ignore"):
        dw = np.sqrt(increments) * generator.standard_normal(increments.shape)

    drift_values = np.full(increments.shape, np.nan)
    drift_values[legs] = problem.drift_at_times(times[:, :-1][legs])

    x = np.full(size, problem.x0)
    with np.errstate(invalid="ignore", over="ignore"):
        for k in range(increments.shape[1] - 1):
            moving = np.flatnonzero(k < n_switches)
            x[moving] = x[moving] + drift_values[moving, k] * increments[moving, k] + sigma[moving, k] * dw[moving, k]
        last = n_switches
        cv_point = x + drift_values[all_rows, last] * increments[all_rows, last]
        shock = sigma[all_rows, last] * dw[all_rows, last]
        x_terminal = cv_point + shock
        x_hat_terminal = cv_point - shock

    broken = ~np.isfinite(x_terminal) | ~np.isfinite(x_hat_terminal)
    reasons[(reasons == HEALTHY) & broken] = "sigma overflow"
    sick = reasons != HEALTHY
    for array in (x_terminal, x_hat_terminal, cv_point):
        array[sick] = problem.x0
    return PathBlock(times, increments, dw, log_sigma, sigma, drift_values, x_terminal, x_hat_terminal,
                     cv_point, n_switches, reasons)


def _switch_products(paths: PathBlock, params: LifetimeParams, half_v: bool):
    """Plain product, sign and log magnitude of the interior factors P_2..P_N per row"""
    size, legs = paths.increments.shape
    plain = np.ones(size)
    sign = np.ones(size)
    log_magnitude = np.zeros(size)
    usable = paths.healthy
    with np.errstate(all="ignore"):
        for j in range(1, legs - 1):
            rows = np.flatnonzero(usable & (j < paths.n_switches))
            if rows.size == 0:
                continue
            dt, dw = paths.increments[rows, j], paths.dw[rows, j]
            sigma_prev, sigma_cur = paths.sigma[rows, j - 1], paths.sigma[rows, j]
            delta_b = paths.drift_values[rows, j] - paths.drift_values[rows, j - 1]
            m = delta_b * (dw / (sigma_cur * dt))
            v = -0.5 * sigma_prev * sigma_prev * ((dw * dw - dt) / (sigma_cur * sigma_cur * dt * dt))
            if half_v:
                v = 0.5 * v
            p = (m + v) / lifetime_density_array(params, paths.increments[rows, j - 1])
            plain[rows] *= p
            sign[rows] *= np.sign(p)
            log_magnitude[rows] += np.log(np.abs(p))
    return plain, sign, log_magnitude


def _scaled(plain, sign, log_magnitude, factor):
    """Product times a final factor, rebuilt from the log form where the plain product fails"""
    with np.errstate(all="ignore"):
        direct = plain * factor
        keep = np.isfinite(direct) & ((direct != 0.0) | (sign == 0) | (factor == 0.0))
        total = log_magnitude + np.log(np.abs(factor))
        direction = sign * np.sign(factor)
        rebuilt = np.where(total >= _LOG_OVERFLOW, direction * np.inf,
                           direction * np.exp(np.minimum(total, _LOG_OVERFLOW)))
        rebuilt = np.where(direction == 0, 0.0, rebuilt)
    return np.where(keep, direct, rebuilt)


def _terminal_factor(paths: PathBlock, problem: ProblemSpec, params: LifetimeParams, survival, half_v,
                     offset=0.0):
    """beta_1 + beta_2 of every row with paths translated by offset"""
    g_cv = problem.g_array(paths.cv_point + offset)
    delta_g = problem.g_array(paths.x_terminal + offset) - g_cv
    delta_g_hat = problem.g_array(paths.x_hat_terminal + offset) - g_cv
    with np.errstate(all="ignore"):
        dt, dw = paths.leg(paths.increments), paths.leg(paths.dw)
        sigma_prev, sigma_last = paths.leg(paths.sigma, 1), paths.leg(paths.sigma)
        delta_b = paths.leg(paths.drift_values) - paths.leg(paths.drift_values, 1)
        density_prev = lifetime_density_array(params, np.where(paths.n_switches > 0,
                                                                paths.leg(paths.increments, 1), 1.0))
        m = delta_b * (dw / (sigma_last * dt))
        v = -0.5 * sigma_prev * sigma_prev * ((dw * dw - dt) / (sigma_last * sigma_last * dt * dt))
        if half_v:
            v = 0.5 * v
        scale = 2.0 * survival * density_prev
        return delta_g * (m + v) / scale + delta_g_hat * (-m + v) / scale


def _survival(paths: PathBlock, params: LifetimeParams, reasons):
    survival = lifetime_survival_array(params, paths.leg(paths.increments))
    reasons[(reasons == HEALTHY) & ~(survival > 0.0)] = "survival underflow"
    return survival


def _finish(values, paths: PathBlock, reasons, overflow_reason="weight overflow") -> SampleBlock:
    reasons[(reasons == HEALTHY) & ~np.isfinite(values)] = overflow_reason
    values = np.where(reasons == HEALTHY, values, np.nan)
    return SampleBlock(values, paths.n_switches.copy(), reasons)


def transport_block(paths: PathBlock, problem: ProblemSpec, params: LifetimeParams,
                    half_v: bool = False) -> SampleBlock:
    """Unbiased transport values of every row of the block"""
    reasons = paths.reasons.copy()
    survival = _survival(paths, params, reasons)
    switched = paths.n_switches > 0
    with np.errstate(all="ignore"):
        plain, sign, log_magnitude = _switch_products(paths, params, half_v)
        beta = _terminal_factor(paths, problem, params, survival, half_v)
        values = np.where(switched, _scaled(plain, sign, log_magnitude, beta),
                          problem.g_array(paths.x_terminal) / survival)
    return _finish(values, paths, reasons)


def derivative_block(paths: PathBlock, problem: ProblemSpec, params: LifetimeParams, order: int,
                     half_v: bool = False) -> SampleBlock:
    """First or second spatial derivative values of every row, mirrored-shock form on switched rows"""
    if order not in (1, 2):
        raise DomainError(f"derivative order must be 1 or 2, got {order}")
    reasons = paths.reasons.copy()
    survival = _survival(paths, params, reasons)
    switched = paths.n_switches > 0
    with np.errstate(all="ignore"):
        sigma0, dw0, dt0 = paths.sigma[:, 0], paths.dw[:, 0], paths.increments[:, 0]
        if order == 1:
            first_weight = dw0 / (sigma0 * dt0)
        else:
            first_weight = (dw0 * dw0 - dt0) / (sigma0 * sigma0 * dt0 * dt0)

        g_cv = problem.g_array(paths.cv_point)
        delta_g = problem.g_array(paths.x_terminal) - g_cv
        delta_g_hat = problem.g_array(paths.x_hat_terminal) - g_cv
        if order == 1:
            phi = (delta_g - delta_g_hat) / (2.0 * survival)
        else:
            phi = (delta_g + delta_g_hat) / (2.0 * survival)

        plain, sign, log_magnitude = _switch_products(paths, params, half_v)
        shock = np.where(reasons == HEALTHY, sigma0 * dw0, 0.0)

        def value_at(offset):
            beta = _terminal_factor(paths, problem, params, survival, half_v, offset)
            return _scaled(plain, sign, log_magnitude, beta)

        value = value_at(0.0)
        mirrored = value_at(-2.0 * shock)
        if order == 1:
            psi = 0.5 * (value - mirrored)
        else:
            psi = 0.5 * (value + mirrored) - value_at(-shock)
        values = np.where(switched, psi, phi) * first_weight
    return _finish(values, paths, reasons)


def perturbed_block(problem: ProblemSpec, sigma: float, generator: np.random.Generator, size: int) -> SampleBlock:
    """g(x + int_t^T b + sigma sqrt(T - t) Z) for size draws of Z"""
    check_perturbation_sigma(sigma)
    shift = transport_shift(problem, problem.t_start, problem.t_end)
    z = generator.standard_normal(size)
    values = problem.g_array(problem.x0 + shift + sigma * math.sqrt(problem.horizon) * z)
    return SampleBlock(values, np.zeros(size, dtype=np.int64), _empty_reasons(size))
