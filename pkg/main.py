"""
Regime-Switching Monte Carlo Solver
Command-line entry point: solve, sweep, compare and validate
"""
import argparse
import logging
import os
import sys
from dataclasses import replace

# Add the src directory to the Python path
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))

# Import modules
from config.defaults import DEFAULT_EXECUTOR, default_worker_count
from montecarlo.harness import EXECUTORS, run_estimate
from montecarlo.study import References, run_study
from problems.oracle import references_for, validate_problem
from reports.config_file import load_config, parse_config
from reports.csv_report import emit_csv
from reports.pdf_generator import generate_study_report_pdf
from utils.errors import ConfigurationError, DomainError, ProblemError, RunError, UnsupportedProblemError
from utils.metrics import analyze_convergence, compute_study_metrics
from validation.validators import run_validation_suite

logger = logging.getLogger("regime_mc")

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2


def _point(text):
    try:
        t, x = (float(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 't,x', got {text!r}") from exc
    return t, x


def _int_list(text):
    try:
        return tuple(int(float(part)) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _name_list(text):
    return tuple(part.strip().lower() for part in text.split(",") if part.strip())


def build_parser():
    parser = argparse.ArgumentParser(prog="main.py", description="Unbiased regime-switching Monte Carlo "
                                     "for transport PDEs, with perturbation and branching baselines")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="warnings and errors only")
    commands = parser.add_subparsers(dest="command", required=True)

    def run_options(sub):
        source = sub.add_mutually_exclusive_group(required=True)
        source.add_argument("--config", help="INI configuration file")
        source.add_argument("--problem", help="built-in problem name, default settings")
        sub.add_argument("--at", type=_point, help="evaluation point t,x")
        sub.add_argument("--seed", type=int, help="master seed")
        sub.add_argument("--threads", type=int, help="worker count (default from REGIME_MC_THREADS, else 1)")
        sub.add_argument("--executor", choices=EXECUTORS, default=None,
                         help=f"worker pool kind (default {DEFAULT_EXECUTOR})")

    solve = commands.add_parser("solve", help="single estimate with a confidence interval")
    run_options(solve)
    solve.add_argument("--samples", type=int, help="number of samples")
    solve.add_argument("--method", help="estimator method")

    for name, help_text in (("sweep", "repeated runs over sample levels"),
                            ("compare", "paired study of several methods")):
        sub = commands.add_parser(name, help=help_text)
        run_options(sub)
        sub.add_argument("--levels", type=_int_list, help="sample levels, e.g. 1000,10000,100000")
        sub.add_argument("--repeats", type=int, help="runs per level")
        sub.add_argument("--methods", type=_name_list,
                         help="estimator methods" + (" (default unbiased,perturbed)" if name == "compare" else ""))
        sub.add_argument("--csv", help="write the study table to this CSV file")
        sub.add_argument("--pdf", help="write a PDF summary to this file")

    validate = commands.add_parser("validate", help="run the invariant suite")
    validate.add_argument("--quick", action="store_true", help="desk-scale sample sizes")
    validate.add_argument("--config", help="also check the assumptions of this configuration's problem")
    return parser


def configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def load_bundle(args):
    """Configuration from --config or --problem, with command-line overrides applied"""
    if args.config:
        bundle = load_config(args.config)
    else:
        bundle = parse_config(f"[problem]\nbuiltin = {args.problem}\n")
    if args.at is not None:
        bundle = bundle.at(*args.at)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    workers = args.threads if args.threads is not None else default_worker_count()
    overrides["workers"] = workers
    if args.executor:
        overrides["executor"] = args.executor
    for key, attribute in (("samples", "n_samples"), ("levels", "sample_levels"), ("repeats", "n_repeats")):
        value = getattr(args, key, None)
        if value is not None:
            overrides[attribute] = value
    return replace(bundle, mc=replace(bundle.mc, **overrides))


def _fmt(value):
    return "n/a" if value is None else f"{value:.6f}"


def cmd_solve(args):
    bundle = load_bundle(args)
    task = bundle.task(args.method)
    report = run_estimate(task, bundle.mc)
    true_value, biased_value = references_for(bundle.problem, task.method, task.sigma, task.order)
    problem = bundle.problem
    print(f"Problem:     {problem.name} at (t, x) = ({problem.t_start:g}, {problem.x0:g}), T = {problem.t_end:g}")
    print(f"Method:      {task.label}")
    print(f"Samples:     {report.n_samples} ({report.poisoned_count} poisoned)")
    print(f"Estimate:    {report.mean:.6f}  (SE {report.std_error:.3e})")
    print(f"{report.confidence_level:.0%} CI:      [{report.ci_low:.6f}, {report.ci_high:.6f}]")
    print(f"Exact:       {_fmt(true_value)}")
    if biased_value is not None:
        print(f"Perturbed:   {_fmt(biased_value)}  (sigma = {task.sigma:g})")
    histogram = ", ".join(f"{n}: {count}" for n, count in report.switch_histogram[:8])
    print(f"Switches:    {histogram}")
    if report.exploding_variance:
        print("Warning:     variance diagnostics suggest the variance may be infinite")
    if report.switching_biased:
        print(f"Warning:     the sigma switching clock explodes with probability {report.switching_deficit:.3f}; "
              f"the estimate targets {1.0 - report.switching_deficit:.3f} times the exact value (lower sigma0)")
    return EXIT_OK


def _study(args, methods):
    bundle = load_bundle(args)
    tasks = {}
    references = {}
    for method in methods:
        task = bundle.task(method)
        tasks[task.label] = task
        references[task.label] = References(*references_for(bundle.problem, task.method, task.sigma, task.order))
    report = run_study(tasks, bundle.mc, references, bundle.problem.name)

    print(f"{'samples':>10} {'estimator':<12} {'average':>12} {'trimmed':>12} {'min':>12} {'max':>12} "
          f"{'exact':>12} {'perturbed':>12} {'poisoned':>9}")
    for row in report.rows:
        print(f"{row.n_samples:>10} {row.estimator:<12} {row.mean:>12.6f} {_fmt(row.trimmed_mean):>12} "
              f"{row.band_low:>12.6f} {row.band_high:>12.6f} {_fmt(row.true_value):>12} "
              f"{_fmt(row.reference_biased_value):>12} {row.poisoned_count:>9}")
    if args.csv:
        emit_csv(report, args.csv)
        print(f"CSV written to {args.csv}")
    if args.pdf:
        path = generate_study_report_pdf(report, args.pdf)
        print(f"PDF written to {path}")
    return report


def cmd_sweep(args):
    bundle_methods = args.methods
    if not bundle_methods:
        bundle_methods = load_bundle(args).mc.methods
    _study(args, bundle_methods)
    return EXIT_OK


def cmd_compare(args):
    report = _study(args, args.methods or ("unbiased", "perturbed"))
    metrics = compute_study_metrics(report)
    print()
    print(f"{'samples':>10} {'estimator':<12} {'bias':>12} {'z':>8} {'coverage':>9}  verdict")
    for m in metrics.values():
        bias = "n/a" if m.bias is None else f"{m.bias:+.3e}"
        z_score = "n/a" if m.z_score is None else f"{m.z_score:.2f}"
        coverage = "n/a" if m.coverage is None else f"{m.coverage:.0%}"
        print(f"{m.n_samples:>10} {m.estimator:<12} {bias:>12} {z_score:>8} {coverage:>9}  {m.verdict}")
    for line in analyze_convergence(metrics):
        print(f"- {line}")
    return EXIT_OK


def cmd_validate(args):
    failed = 0
    if args.config:
        problem_report = validate_problem(load_config(args.config).problem)
        status = "ok" if problem_report.ok else "; ".join(problem_report.warnings)
        print(f"[{'PASS' if problem_report.ok else 'FAIL'}] problem {problem_report.problem}: {status}")
        failed += not problem_report.ok
    for result in run_validation_suite(quick=args.quick):
        print(f"[{'PASS' if result.passed else 'FAIL'}] {result.name}: {result.message}")
        failed += not result.passed
    return EXIT_VALIDATION if failed else EXIT_OK


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "compare": cmd_compare, "validate": cmd_validate}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args)
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, ProblemError, UnsupportedProblemError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read or write {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    except RunError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
