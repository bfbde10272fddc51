"""
Repeated-Run Studies
Independent runs per (sample level, repeat, estimator), summarised per level
by the average of repeats, min/max and quantile bands, and reference values
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from montecarlo.harness import McConfig, RunReport, run_estimate, worker_pool
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class References:
    """Exact solution and perturbed closed-form values at the evaluation point"""
    true_value: Optional[float] = None
    biased_value: Optional[float] = None


@dataclass(frozen=True)
class StudyRow:
    """One (sample level, estimator) summary across repeats"""
    n_samples: int
    estimator: str
    mean: float
    band_low: float
    band_high: float
    q_low: float
    q_high: float
    true_value: Optional[float]
    reference_biased_value: Optional[float]
    poisoned_count: int
    trimmed_mean: Optional[float] = None
    estimates: Tuple[float, ...] = ()
    exploding_runs: int = 0

    def csv_record(self):
        return (self.n_samples, self.estimator, self.mean, self.band_low, self.band_high, self.q_low,
                self.q_high, self.true_value, self.reference_biased_value, self.poisoned_count)


@dataclass(frozen=True)
class StudyReport:
    problem: str
    confidence_level: float
    rows: Tuple[StudyRow, ...] = ()
    runs: Tuple[Tuple[int, int, str, RunReport], ...] = field(default=(), compare=False)

    def rows_for(self, estimator: str):
        return [row for row in self.rows if row.estimator == estimator]

    @property
    def estimators(self):
        return list(dict.fromkeys(row.estimator for row in self.rows))


def summarize_level(n_samples: int, estimator: str, estimates: Sequence[float], confidence_level: float,
                    references: References, poisoned: int = 0, exploding: int = 0) -> StudyRow:
    """
    Average of the repeats, the min/max band, the central quantile band at the
    confidence level and the average of the repeats inside that band.
    """
    values = np.asarray(estimates, dtype=float)
    tail = 0.5 * (1.0 - confidence_level)
    q_low, q_high = (float(q) for q in np.quantile(values, [tail, 1.0 - tail]))
    inside = values[(values >= q_low) & (values <= q_high)]
    return StudyRow(
        n_samples=n_samples,
        estimator=estimator,
        mean=float(np.mean(values)),
        band_low=float(np.min(values)),
        band_high=float(np.max(values)),
        q_low=q_low,
        q_high=q_high,
        true_value=references.true_value,
        reference_biased_value=references.biased_value,
        poisoned_count=poisoned,
        trimmed_mean=float(np.mean(inside)) if inside.size else None,
        estimates=tuple(float(v) for v in values),
        exploding_runs=exploding,
    )


def run_study(estimators: Dict[str, object], config: McConfig, references=None,
              problem_name: str = "") -> StudyReport:
    """
    n_repeats independent runs of every estimator at every sample level.

    references maps an estimator label to its References, or is a single
    References shared by all estimators.
    """
    if not estimators:
        raise ConfigurationError("a study needs at least one estimator")
    levels = config.levels
    rows = []
    runs = []
    with worker_pool(config) as executor:
        for level_index, n_samples in enumerate(levels):
            for estimator_index, (label, estimator) in enumerate(estimators.items()):
                reports = []
                for repeat in range(config.n_repeats):
                    report = run_estimate(estimator, config, n_samples, level_index, repeat,
                                          estimator_index, executor)
                    reports.append(report)
                    runs.append((n_samples, repeat, label, report))
                reference = references.get(label, References()) if isinstance(references, dict) \
                    else (references or References())
                row = summarize_level(n_samples, label, [r.mean for r in reports], config.confidence_level,
                                      reference, sum(r.poisoned_count for r in reports),
                                      sum(r.exploding_variance for r in reports))
                logger.info("%s at %d samples: average %.6f over %d repeats, band [%.6f, %.6f]",
                            label, n_samples, row.mean, config.n_repeats, row.band_low, row.band_high)
                rows.append(row)
    return StudyReport(problem_name, config.confidence_level, tuple(rows), tuple(runs))
