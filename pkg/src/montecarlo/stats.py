"""
Streaming Statistics
Welford accumulation, exact pairwise merging of (count, mean, M2) and
normal-quantile confidence intervals
"""
import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
from scipy import stats as scipy_stats

from utils.errors import DomainError


@dataclass(frozen=True)
class RunningStats:
    """Count, mean and sum of squared deviations, plus raw second-moment data"""
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    sum_squares: float = 0.0
    max_square: float = 0.0

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "RunningStats":
        state = cls()
        for value in values:
            state = state.push(value)
        return state

    @classmethod
    def from_array(cls, values) -> "RunningStats":
        """Two-pass statistics of a numpy array"""
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls()
        mean = float(values.mean())
        deviations = values - mean
        squares = values * values
        return cls(int(values.size), mean, float(deviations @ deviations), float(squares.sum()), float(squares.max()))

    def push(self, value: float) -> "RunningStats":
        """Welford update with one value"""
        count = self.count + 1
        delta = value - self.mean
        mean = self.mean + delta / count
        m2 = self.m2 + delta * (value - mean)
        square = value * value
        return RunningStats(count, mean, m2, self.sum_squares + square, max(self.max_square, square))

    @property
    def variance(self):
        """Unbiased sample variance, 0 below two samples"""
        if self.count < 2:
            return 0.0
        return max(self.m2 / (self.count - 1), 0.0)

    @property
    def std_error(self):
        if self.count < 2:
            return 0.0
        return math.sqrt(self.variance / self.count)

    @property
    def second_moment(self):
        return self.sum_squares / self.count if self.count else 0.0

    @property
    def max_sample_share(self):
        """Largest single-sample share of the sum of squares"""
        return self.max_square / self.sum_squares if self.sum_squares > 0 else 0.0


def merge_stats(a: RunningStats, b: RunningStats) -> RunningStats:
    """Exact merge of two disjoint sample sets (Chan et al. pairwise update)"""
    if a.count == 0:
        return b
    if b.count == 0:
        return a
    count = a.count + b.count
    delta = b.mean - a.mean
    mean = a.mean + delta * b.count / count
    m2 = a.m2 + b.m2 + delta * delta * a.count * b.count / count
    return RunningStats(count, mean, m2, a.sum_squares + b.sum_squares, max(a.max_square, b.max_square))


def normal_quantile(level: float) -> float:
    """Two-sided z for a central confidence level"""
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level must lie in (0, 1), got {level}")
    return float(scipy_stats.norm.ppf(0.5 + 0.5 * level))


def confidence_interval(stats: RunningStats, level: float) -> Tuple[float, float]:
    """mean -+ z(level) * standard error"""
    if stats.count < 2:
        raise DomainError(f"confidence interval needs at least 2 samples, got {stats.count}")
    half_width = normal_quantile(level) * stats.std_error
    return stats.mean - half_width, stats.mean + half_width
