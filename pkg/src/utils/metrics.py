"""
Study Metrics Calculation Module
"""
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

BIAS_Z_THRESHOLD = 3.0


@dataclass(frozen=True)
class StudyMetrics:
    """Accuracy of one estimator at one sample level against the exact value"""
    estimator: str
    n_samples: int
    repeats: int
    bias: Optional[float]
    bias_std_error: float
    z_score: Optional[float]
    band_width: float
    coverage: Optional[float]
    verdict: str


def get_bias_verdict(z_score, repeats):
    """Label a bias z-score"""
    if z_score is None or repeats < 2:
        return "inconclusive"
    if abs(z_score) <= BIAS_Z_THRESHOLD:
        return "unbiased"
    return "biased"


def _coverage(report, estimator, n_samples, truth):
    runs = [run for level, _, label, run in report.runs if label == estimator and level == n_samples]
    if truth is None or not runs:
        return None
    covered = sum(run.ci_low <= truth <= run.ci_high for run in runs)
    return covered / len(runs)


def compute_study_metrics(report) -> Dict[Tuple[str, int], StudyMetrics]:
    """Bias, its z-score, band width and CI coverage per (estimator, level)"""
    summary = {}
    for row in report.rows:
        repeats = len(row.estimates)
        truth = row.true_value
        spread = float(np.std(row.estimates, ddof=1)) if repeats >= 2 else 0.0
        bias_se = spread / math.sqrt(repeats) if repeats >= 2 else 0.0

        bias = z_score = None
        if truth is not None:
            bias = row.mean - truth
            if bias_se > 0:
                z_score = bias / bias_se
            elif repeats >= 2:
                z_score = 0.0 if bias == 0 else math.copysign(math.inf, bias)

        summary[(row.estimator, row.n_samples)] = StudyMetrics(
            estimator=row.estimator,
            n_samples=row.n_samples,
            repeats=repeats,
            bias=bias,
            bias_std_error=bias_se,
            z_score=z_score,
            band_width=row.band_high - row.band_low,
            coverage=_coverage(report, row.estimator, row.n_samples, truth),
            verdict=get_bias_verdict(z_score, repeats),
        )
    return summary


def analyze_convergence(metrics: Dict[Tuple[str, int], StudyMetrics]):
    """Short observations on how each estimator's band and bias evolve with the level"""
    insights = []
    for estimator in dict.fromkeys(key[0] for key in metrics):
        levels = sorted((m for m in metrics.values() if m.estimator == estimator), key=lambda m: m.n_samples)
        first, last = levels[0], levels[-1]
        if len(levels) > 1 and first.band_width > 0:
            insights.append(f"{estimator}: band width {first.band_width:.4g} at {first.n_samples} samples, "
                            f"{last.band_width:.4g} at {last.n_samples}")
        if last.verdict == "biased":
            insights.append(f"{estimator}: average stays {last.bias:+.4g} away from the exact value "
                            f"(z = {last.z_score:.1f})")
    return insights
