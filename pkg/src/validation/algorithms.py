"""
Statistical Check Algorithms
Tolerance tests shared by the invariant suite and the test-suite
"""
import math

import numpy as np
from scipy import integrate
from scipy import stats as scipy_stats

from sampling.distributions import LifetimeParams, lifetime_density


def within_standard_errors(estimate: float, target: float, std_error: float, k: float = 3.0) -> bool:
    """|estimate - target| <= k * standard error"""
    return abs(estimate - target) <= k * std_error


def relative_difference(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def two_pass_moments(values):
    """(mean, unbiased variance) computed directly from stored values"""
    data = np.asarray(values, dtype=float)
    mean = float(np.mean(data))
    return mean, float(np.sum((data - mean) ** 2) / (data.size - 1))


def binomial_failure_allowance(trials: int, failure_rate: float, confidence: float = 0.99) -> int:
    """Largest number of chance failures expected among independent trials"""
    return int(scipy_stats.binom.ppf(confidence, trials, failure_rate))


def lifetime_ks_test(samples, params: LifetimeParams):
    """(statistic, p-value) of a KS test against Gamma(kappa, scale eta)"""
    result = scipy_stats.kstest(np.asarray(samples, dtype=float), "gamma", args=(params.kappa, 0.0, params.eta))
    return float(result.statistic), float(result.pvalue)


def survival_by_quadrature(params: LifetimeParams, s: float) -> float:
    """Integral of the lifetime density over [s, inf)"""
    value, _ = integrate.quad(lambda r: lifetime_density(params, r), s, math.inf, limit=200)
    return value


def coverage_tolerance(runs: int, level: float, k: float = 3.0) -> float:
    """k binomial standard deviations of an observed coverage fraction"""
    return k * math.sqrt(level * (1.0 - level) / runs)
