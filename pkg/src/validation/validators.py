"""
Invariant Validators
Self-checks run by the validate command: each returns (passed, message)
"""
import logging
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from estimators.tasks import make_task
from estimators.transport import (
    beta_terms,
    expanded_transport_value,
    leg_factors,
    simulate_path,
    terminal_differences,
    transport_value,
)
from montecarlo.harness import McConfig, run_estimate
from montecarlo.stats import RunningStats, merge_stats
from montecarlo.study import References, run_study
from paths.mesh_path import SigmaSchedule, evolve_path
from problems.oracle import (
    analytic_nonlinear_solution,
    characteristics_solution,
    perturbed_closed_form,
    validate_problem,
)
from problems.problem import builtin_problem, problem_from_expressions
from reports.config_file import format_config, parse_config, sample_config
from reports.csv_report import emit_csv, load_csv
from sampling.distributions import LifetimeParams, RngStream, lifetime_survival, sample_lifetime
from utils.errors import PoisonedSampleError
from weights.weights import WeightProduct, accumulate
from .algorithms import (
    lifetime_ks_test,
    relative_difference,
    survival_by_quadrature,
    two_pass_moments,
    within_standard_errors,
)

logger = logging.getLogger(__name__)

VALIDATION_SEED = 7


@dataclass(frozen=True)
class ValidationResult:
    name: str
    passed: bool
    message: str


def validate_lifetime_law(quick: bool = True):
    """KS test of the lifetime sampler and survival against quadrature"""
    params = LifetimeParams()
    count = 20_000 if quick else 200_000
    samples = [sample_lifetime(params, RngStream(VALIDATION_SEED, i)) for i in range(count)]
    statistic, p_value = lifetime_ks_test(samples, params)
    if p_value < 1e-3:
        return False, f"KS statistic {statistic:.4f} (p = {p_value:.2e}) rejects Gamma(1/2, 2)"
    for s in (0.1, 1.0, 3.0):
        exact, numeric = lifetime_survival(params, s), survival_by_quadrature(params, s)
        if abs(exact - numeric) > 1e-8:
            return False, f"survival {exact:.10f} differs from quadrature {numeric:.10f} at s = {s}"
    return True, f"KS p-value {p_value:.3f} over {count} draws; survival matches quadrature"


def validate_weight_accumulator():
    """Sign/log product agrees with the plain product"""
    state = WeightProduct.identity()
    for _ in range(50):
        state = accumulate(state, 0.9)
    if relative_difference(state.log_value, 0.9 ** 50) > 1e-9 or relative_difference(state.plain_value, 0.9 ** 50) > 1e-9:
        return False, f"product of fifty 0.9 factors gave {state.plain_value} / {state.log_value}"
    mixed = accumulate(accumulate(WeightProduct.identity(), 3.0), -2.0)
    if mixed.sign != -1 or abs(mixed.log_value + 6.0) > 1e-12:
        return False, f"product 3 * -2 gave sign {mixed.sign}, value {mixed.log_value}"
    return True, "sign/log and plain products agree"


def validate_oracles():
    """Closed-form references of the built-in problems"""
    linear = builtin_problem("paper-linear")
    checks = [
        ("characteristics", characteristics_solution(linear, 0.0, 10.0), 10 * math.cos(5.0)),
        ("perturbed closed form", perturbed_closed_form(linear, 0.1, 0.0, 10.0),
         10 * math.exp(-0.005) * math.cos(5.0)),
        ("nonlinear solution", analytic_nonlinear_solution(0.0, 1.0), math.cos(1.0)),
    ]
    for label, value, expected in checks:
        if abs(value - expected) > 1e-10:
            return False, f"{label}: {value} != {expected}"
    for name in ("paper-linear", "paper-nonlinear"):
        report = validate_problem(builtin_problem(name))
        if not report.residual_ok:
            return False, f"{name}: analytic solution residual {report.residual_max:.3g}"
    return True, "oracle values and PDE residuals within tolerance"


def representation_gap(sample, expanded):
    """Difference of the two forms relative to the size of their antithetic halves"""
    if not math.isfinite(expanded):
        return math.inf
    if sample.beta_terms is None:
        return relative_difference(sample.value, expanded)
    b1, b2 = sample.beta_terms
    total = b1 + b2
    if total == 0.0:
        return 0.0
    scale = abs(sample.value) * (abs(b1) + abs(b2)) / abs(total)
    return abs(sample.value - expanded) / scale if scale > 0 else 0.0


def validate_representation(quick: bool = True):
    """beta * prod P equals the term-by-term expansion; antithetic flip swaps beta halves"""
    problem = problem_from_expressions("time-drift", "t", "cos(x)", terminal_d1="-sin(x)",
                                       terminal_d2="-cos(x)")
    schedule, params = SigmaSchedule(), LifetimeParams()
    worst = 0.0
    count = 1_000 if quick else 10_000
    for index in range(count):
        try:
            path = simulate_path(problem, schedule, params, RngStream(VALIDATION_SEED, index))
            sample = transport_value(path, problem, params)
        except PoisonedSampleError:
            continue
        expanded = expanded_transport_value(path, problem, params)
        worst = max(worst, representation_gap(sample, expanded))
        if path.mesh.n_switches:
            flipped_dw = path.dw[:-1] + (-path.dw[-1],)
            flipped = evolve_path(path.mesh, problem.drift, schedule, None, problem.x0, dw=flipped_dw)
            survival = lifetime_survival(params, path.mesh.increments[-1])
            b1, b2 = beta_terms(*terminal_differences(path, problem), leg_factors(path, params, path.mesh.n_legs),
                                survival)
            f1, f2 = beta_terms(*terminal_differences(flipped, problem),
                                leg_factors(flipped, params, flipped.mesh.n_legs), survival)
            if abs(b1 - f2) > 1e-12 * max(1.0, abs(b1)) or abs(b2 - f1) > 1e-12 * max(1.0, abs(b2)):
                return False, f"antithetic flip did not swap beta halves on path {index}"
    if worst > 1e-10:
        return False, f"product and expanded forms differ by {worst:.3g} (relative)"
    return True, f"{count} paths: forms agree to {worst:.2e}, antithetic flip swaps beta halves"


def validate_streaming_variance():
    """Chunked merge against two-pass moments on stored values"""
    rng = np.random.default_rng(VALIDATION_SEED)
    values = rng.standard_normal(100_000) * 3.0 + 1.0
    whole = RunningStats.identity()
    for chunk in np.array_split(values, 37):
        whole = merge_stats(whole, RunningStats.from_values(chunk.tolist()))
    mean, variance = two_pass_moments(values)
    if relative_difference(whole.variance, variance) > 1e-10 or abs(whole.mean - mean) > 1e-12:
        return False, f"merged variance {whole.variance} vs two-pass {variance}"
    return True, "merged statistics equal two-pass moments"


def validate_unbiasedness(quick: bool = True):
    """Transport and perturbation estimators against their closed forms"""
    samples = 20_000 if quick else 200_000
    config = McConfig(n_samples=samples, master_seed=VALIDATION_SEED)
    cases = []
    for name, method, target in (
        ("constant-drift-linear", "unbiased", 1.0),
        ("paper-linear", "unbiased", 10 * math.cos(5.0)),
        ("paper-linear", "perturbed", 10 * math.exp(-0.005) * math.cos(5.0)),
    ):
        problem = builtin_problem(name)
        task = make_task(method, problem, SigmaSchedule(), LifetimeParams())
        report = run_estimate(task, config, estimator_index=len(cases))
        cases.append(name)
        if report.poisoned_count:
            return False, f"{name}/{method}: {report.poisoned_count} poisoned samples"
        if not within_standard_errors(report.mean, target, report.std_error):
            return False, (f"{name}/{method}: mean {report.mean:.5f} is more than 3 SE "
                           f"({report.std_error:.2e}) from {target:.5f}")
    return True, f"estimates within 3 SE of the exact values at {samples} samples"


def validate_determinism():
    """Same seed, different worker counts, same report"""
    task = make_task("unbiased", builtin_problem("paper-linear"), SigmaSchedule(), LifetimeParams())
    single = run_estimate(task, McConfig(n_samples=10_000, master_seed=VALIDATION_SEED, chunk_size=1024))
    pooled = run_estimate(task, McConfig(n_samples=10_000, master_seed=VALIDATION_SEED, chunk_size=1024,
                                         workers=4, executor="thread"))
    if single != pooled:
        return False, f"single worker mean {single.mean!r} vs four workers {pooled.mean!r}"
    return True, "reports identical across worker counts"


def validate_round_trips():
    """Config text and CSV files reproduce what they were built from"""
    for name in ("paper-linear", "paper-nonlinear"):
        text, bundle = sample_config(name)
        if parse_config(text) != bundle or format_config(parse_config(text)) != text:
            return False, f"{name}: configuration does not round-trip"
    problem = builtin_problem("paper-linear")
    task = make_task("perturbed", problem, SigmaSchedule(), LifetimeParams())
    study = run_study({"perturbed": task}, McConfig(n_repeats=3, sample_levels=(100, 200)),
                      References(10 * math.cos(5.0), None), problem.name)
    handle, path = tempfile.mkstemp(suffix=".csv")
    os.close(handle)
    try:
        emit_csv(study, path)
        loaded = load_csv(path)
    finally:
        os.remove(path)
    if [row.csv_record() for row in loaded.rows] != [row.csv_record() for row in study.rows]:
        return False, "CSV rows differ from the study they were written from"
    return True, "configuration and CSV round-trips hold"


VALIDATORS = (
    ("lifetime law", validate_lifetime_law, True),
    ("weight accumulator", validate_weight_accumulator, False),
    ("oracles", validate_oracles, False),
    ("representation identity", validate_representation, True),
    ("streaming variance", validate_streaming_variance, False),
    ("unbiasedness", validate_unbiasedness, True),
    ("determinism", validate_determinism, False),
    ("round trips", validate_round_trips, False),
)


def run_validation_suite(quick: bool = True):
    """Run every validator; a validator that raises counts as failed"""
    results = []
    for name, validator, sized in VALIDATORS:
        try:
            passed, message = validator(quick) if sized else validator()
        except Exception as exc:
            logger.exception("Validator %s raised", name)
            passed, message = False, f"raised {type(exc).__name__}: {exc}"
        log = logger.info if passed else logger.error
        log("%s: %s (%s)", name, "passed" if passed else "FAILED", message)
        results.append(ValidationResult(name, passed, message))
    return results
