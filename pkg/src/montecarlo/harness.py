"""
Monte Carlo Harness
Runs an estimator over N samples in fixed chunks and reduces them in
sample-index order, so the report does not depend on the worker count
"""
import logging
import math
import time
from collections import Counter
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from config.defaults import (
    CHUNK_SIZE,
    DEFAULT_CONFIDENCE,
    DEFAULT_EXECUTOR,
    DEFAULT_REPEATS,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DEFICIT_TOLERANCE,
    MAX_SAMPLE_SHARE,
    PREFIX_FRACTION,
    STREAM_BLOCK,
    VARIANCE_CHECK_MIN_SAMPLES,
    VARIANCE_DRIFT_TOLERANCE,
)
from montecarlo.stats import RunningStats, confidence_interval, merge_stats
from sampling.distributions import RngStream, block_generator, derive_seed
from utils.errors import ConfigurationError, RunError

logger = logging.getLogger(__name__)

EXECUTORS = ("process", "thread")


@dataclass(frozen=True)
class McConfig:
    """Sample counts, seeds and worker settings of a run or study"""
    n_samples: int = DEFAULT_SAMPLES
    n_repeats: int = DEFAULT_REPEATS
    sample_levels: Tuple[int, ...] = ()
    master_seed: int = DEFAULT_SEED
    confidence_level: float = DEFAULT_CONFIDENCE
    methods: Tuple[str, ...] = ("unbiased",)
    unsafe_variance: bool = False
    workers: int = 1
    executor: str = DEFAULT_EXECUTOR
    chunk_size: int = CHUNK_SIZE

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigurationError(f"n_samples must be at least 1, got {self.n_samples}")
        if self.n_repeats < 1:
            raise ConfigurationError(f"n_repeats must be at least 1, got {self.n_repeats}")
        if any(level < 1 for level in self.sample_levels):
            raise ConfigurationError(f"sample levels must be positive, got {self.sample_levels}")
        if not 0.0 < self.confidence_level < 1.0:
            raise ConfigurationError(f"confidence_level must lie in (0, 1), got {self.confidence_level}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be at least 1, got {self.workers}")
        if self.executor not in EXECUTORS:
            raise ConfigurationError(f"executor must be one of {EXECUTORS}, got {self.executor!r}")
        if self.chunk_size < 1:
            raise ConfigurationError(f"chunk_size must be at least 1, got {self.chunk_size}")

    @property
    def levels(self):
        return self.sample_levels or (self.n_samples,)


@dataclass(frozen=True)
class ChunkResult:
    """Statistics of one contiguous range of sample indices"""
    stats: RunningStats
    prefix_stats: RunningStats
    poisoned: int
    reasons: Tuple[Tuple[str, int], ...]
    switches: Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class RunReport:
    """Outcome of one Monte Carlo run"""
    label: str
    n_samples: int
    mean: float
    variance: float
    std_error: float
    ci_low: float
    ci_high: float
    confidence_level: float
    n_effective: int
    poisoned_count: int
    poison_reasons: Tuple[Tuple[str, int], ...] = ()
    switch_histogram: Tuple[Tuple[int, int], ...] = ()
    second_moment: float = 0.0
    prefix_second_moment: float = 0.0
    max_sample_share: float = 0.0
    exploding_variance: bool = False
    switching_deficit: float = 0.0
    wall_time: float = field(default=0.0, compare=False)

    @property
    def switching_biased(self):
        """Whether clock explosion visibly scales the expectation below the true value"""
        return self.switching_deficit > DEFICIT_TOLERANCE

    @property
    def poisoned_fraction(self):
        return self.poisoned_count / self.n_samples

    @property
    def histogram(self) -> Dict[int, int]:
        return dict(self.switch_histogram)


def _run_sample_chunk(estimator, run_key, start, stop, prefix_end) -> ChunkResult:
    stats = RunningStats.identity()
    prefix = RunningStats.identity()
    reasons = Counter()
    switches = Counter()
    for index in range(start, stop):
        sample = estimator(RngStream(run_key, index))
        if sample.poisoned:
            reasons[sample.reason] += 1
            continue
        switches[sample.n_switches] += 1
        stats = stats.push(sample.value)
        if index < prefix_end:
            prefix = prefix.push(sample.value)
    return ChunkResult(stats, prefix, sum(reasons.values()), tuple(sorted(reasons.items())),
                       tuple(sorted(switches.items())))


def _run_block_chunk(estimator, run_key, start, stop, prefix_end) -> ChunkResult:
    pieces = []
    for block in range(start // STREAM_BLOCK, (stop - 1) // STREAM_BLOCK + 1):
        offset = block * STREAM_BLOCK
        samples = estimator.draw_block(block_generator(run_key, block), STREAM_BLOCK)
        pieces.append(samples.window(max(start, offset) - offset, min(stop, offset + STREAM_BLOCK) - offset))
    values = np.concatenate([piece.values for piece in pieces])
    n_switches = np.concatenate([piece.n_switches for piece in pieces])
    poisoned = np.concatenate([piece.poisoned for piece in pieces])
    reasons = Counter(np.concatenate([piece.reasons for piece in pieces])[poisoned].tolist())
    healthy = ~poisoned
    in_prefix = np.arange(start, stop) < prefix_end
    switch_values, switch_counts = np.unique(n_switches[healthy], return_counts=True)
    switches = tuple((int(n), int(count)) for n, count in zip(switch_values, switch_counts))
    return ChunkResult(RunningStats.from_array(values[healthy]), RunningStats.from_array(values[healthy & in_prefix]),
                       int(poisoned.sum()), tuple(sorted(reasons.items())), switches)


def run_chunk(estimator, run_key: int, start: int, stop: int, prefix_end: int) -> ChunkResult:
    """
    Samples start..stop-1.

    Sample i is drawn from the stream (run_key, i), or for vectorised
    estimators as row i mod STREAM_BLOCK of block i // STREAM_BLOCK, so each
    sample depends on the run key and its index alone.
    """
    if getattr(estimator, "vectorized", False):
        return _run_block_chunk(estimator, run_key, start, stop, prefix_end)
    return _run_sample_chunk(estimator, run_key, start, stop, prefix_end)


def _run_chunk_args(args):
    return run_chunk(*args)


def make_executor(config: McConfig) -> Optional[Executor]:
    """Worker pool for the configuration, None for a single worker"""
    if config.workers <= 1:
        return None
    if config.executor == "thread":
        return ThreadPoolExecutor(max_workers=config.workers)
    return ProcessPoolExecutor(max_workers=config.workers)


@contextmanager
def worker_pool(config: McConfig):
    executor = make_executor(config)
    try:
        yield executor
    finally:
        if executor is not None:
            executor.shutdown()


def _variance_flags(stats, prefix, reasons):
    drift = False
    if prefix.count >= VARIANCE_CHECK_MIN_SAMPLES and stats.second_moment > 0:
        drift = abs(prefix.second_moment / stats.second_moment - 1.0) > VARIANCE_DRIFT_TOLERANCE
    share = stats.count >= VARIANCE_CHECK_MIN_SAMPLES and stats.max_sample_share > MAX_SAMPLE_SHARE
    depth_cap = any(reason in ("depth cap", "particle cap") for reason, _ in reasons)
    return drift or share or depth_cap


def run_estimate(estimator, config: McConfig, n_samples: Optional[int] = None, level_index: int = 0,
                 repeat_index: int = 0, estimator_index: int = 0,
                 executor: Optional[Executor] = None) -> RunReport:
    """
    Mean, variance and confidence interval of the estimator over n_samples.

    Chunks of config.chunk_size samples are evaluated independently and merged
    in order, so the same configuration and seed give the same report for any
    executor or worker count.
    """
    n_samples = n_samples or config.n_samples
    run_key = derive_seed(config.master_seed, level_index, repeat_index, estimator_index)
    prefix_end = max(1, math.ceil(PREFIX_FRACTION * n_samples))
    chunks = [(estimator, run_key, start, min(start + config.chunk_size, n_samples), prefix_end)
              for start in range(0, n_samples, config.chunk_size)]

    started = time.perf_counter()
    owned = None
    if executor is None:
        owned = executor = make_executor(config)
    try:
        if executor is None:
            results = [run_chunk(*chunk) for chunk in chunks]
        else:
            results = list(executor.map(_run_chunk_args, chunks))
    finally:
        if owned is not None:
            owned.shutdown()

    stats = prefix = RunningStats.identity()
    reasons = Counter()
    switches = Counter()
    for result in results:
        stats = merge_stats(stats, result.stats)
        prefix = merge_stats(prefix, result.prefix_stats)
        reasons.update(dict(result.reasons))
        switches.update(dict(result.switches))
    poisoned = sum(reasons.values())
    label = getattr(estimator, "label", type(estimator).__name__)

    if stats.count == 0:
        raise RunError(f"all {n_samples} samples of {label} were poisoned ({dict(reasons)})")
    if poisoned:
        logger.warning("%s: %d of %d samples poisoned (%s)", label, poisoned, n_samples, dict(reasons))
    if stats.count >= 2:
        ci_low, ci_high = confidence_interval(stats, config.confidence_level)
    else:
        ci_low = ci_high = stats.mean

    exploding = _variance_flags(stats, prefix, reasons.items())
    if exploding:
        logger.warning("%s: variance diagnostics flag a possibly infinite variance "
                       "(second moment %.4g, leading tenth %.4g, largest sample share %.3f)",
                       label, stats.second_moment, prefix.second_moment, stats.max_sample_share)

    deficit_of = getattr(estimator, "switching_deficit", None)
    deficit = deficit_of() if callable(deficit_of) else 0.0
    if deficit > DEFICIT_TOLERANCE:
        logger.warning("%s: the sigma switching clock explodes with probability %.3g, so the mean "
                       "estimates %.3g times the true value", label, deficit, 1.0 - deficit)

    report = RunReport(
        label=label,
        n_samples=n_samples,
        mean=stats.mean,
        variance=stats.variance,
        std_error=stats.std_error,
        ci_low=ci_low,
        ci_high=ci_high,
        confidence_level=config.confidence_level,
        n_effective=stats.count,
        poisoned_count=poisoned,
        poison_reasons=tuple(sorted(reasons.items())),
        switch_histogram=tuple(sorted(switches.items())),
        second_moment=stats.second_moment,
        prefix_second_moment=prefix.second_moment,
        max_sample_share=stats.max_sample_share,
        exploding_variance=exploding,
        switching_deficit=deficit,
        wall_time=time.perf_counter() - started,
    )
    logger.debug("%s level %d repeat %d: mean %.6f se %.3g", label, level_index, repeat_index,
                 report.mean, report.std_error)
    return report
