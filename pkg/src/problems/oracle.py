"""
Deterministic Oracles
Method of characteristics, closed-form perturbed values, the analytic
nonlinear solution and sampled assumption checks for problems
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config.defaults import (
    LIPSCHITZ_SAMPLES,
    RESIDUAL_GRID,
    RESIDUAL_STEP,
    RESIDUAL_TOLERANCE,
    UNBOUNDED_GROWTH_FACTOR,
)
from problems.problem import ProblemSpec, drift_integral
from utils.errors import UnsupportedProblemError

logger = logging.getLogger(__name__)


def characteristics_solution(problem: ProblemSpec, t: float, x: float) -> float:
    """v(t, x) = g(x + int_t^T b(s) ds) for linear problems with time-only drift"""
    if not problem.is_linear:
        raise UnsupportedProblemError(f"characteristics solver needs a linear problem; {problem.name} is nonlinear")
    if problem.space_dependent:
        raise UnsupportedProblemError("characteristics solver needs a time-only drift")
    return problem.g(x + drift_integral(problem, t, problem.t_end))


def source_term_solution(problem: ProblemSpec, t: float, x: float) -> float:
    """Characteristics value plus sum c (T - t) for a constant-only nonlinearity"""
    if not problem.source_only:
        raise UnsupportedProblemError(f"{problem.name} has a nonlinearity beyond a constant source term")
    if problem.space_dependent:
        raise UnsupportedProblemError("source-term solver needs a time-only drift")
    source = sum(m.coefficient for m in problem.nonlinearity)
    return problem.g(x + drift_integral(problem, t, problem.t_end)) + source * (problem.t_end - t)


def perturbed_closed_form(problem: ProblemSpec, sigma0: float, t: float, x: float) -> float:
    """A exp(-sigma0^2 (T-t)/2) cos(x + int b + phi) for a cosine terminal"""
    if not problem.is_linear or problem.space_dependent:
        raise UnsupportedProblemError("perturbed closed form needs a linear problem with time-only drift")
    cosine = problem.cosine_terminal
    if cosine is None:
        raise UnsupportedProblemError(f"terminal of {problem.name} is not of the form A*cos(x + phi)")
    amplitude, phase = cosine
    horizon = problem.t_end - t
    damping = math.exp(-0.5 * sigma0 * sigma0 * horizon)
    return amplitude * damping * math.cos(x + drift_integral(problem, t, problem.t_end) + phase)


def analytic_nonlinear_solution(t: float, x: float) -> float:
    """Solution cos(t - x) of the built-in nonlinear problem"""
    return math.cos(t - x)


def reference_value(problem: ProblemSpec) -> Optional[float]:
    """Best available exact value at the problem's evaluation point"""
    t, x = problem.t_start, problem.x0
    if problem.analytic_solution is not None:
        return problem.analytic_solution(t, x)
    if problem.is_linear and not problem.space_dependent:
        return characteristics_solution(problem, t, x)
    if problem.source_only and not problem.space_dependent:
        return source_term_solution(problem, t, x)
    return None


def biased_reference_value(problem: ProblemSpec, sigma0: Optional[float]) -> Optional[float]:
    """Perturbed closed form at the evaluation point when one exists"""
    if sigma0 is None:
        return None
    try:
        return perturbed_closed_form(problem, sigma0, problem.t_start, problem.x0)
    except UnsupportedProblemError:
        return None


def reference_derivative(problem: ProblemSpec, order: int) -> Optional[float]:
    """Exact first or second spatial derivative at the evaluation point of a linear problem"""
    if not problem.is_linear or problem.space_dependent:
        return None
    derivative = problem.g_prime if order == 1 else problem.g_second
    return derivative(problem.x0 + drift_integral(problem, problem.t_start, problem.t_end))


def references_for(problem: ProblemSpec, method: str, sigma: Optional[float],
                   order: int = 1) -> Tuple[Optional[float], Optional[float]]:
    """(true value, perturbed closed-form value) reported next to a method's estimates"""
    if method == "derivative":
        return reference_derivative(problem, order), None
    return reference_value(problem), biased_reference_value(problem, sigma)


@dataclass
class ProblemReport:
    """Sampled assumption checks for one problem"""
    problem: str
    drift_lipschitz: float = 0.0
    sup_g: float = 0.0
    sup_g_prime: float = 0.0
    sup_g_second: float = 0.0
    g_unbounded: bool = False
    residual_max: Optional[float] = None
    residual_ok: Optional[bool] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self):
        return not self.warnings


def pde_residual(problem: ProblemSpec, solution, t: float, x: float, h: float = RESIDUAL_STEP) -> float:
    """dt v + b Dv + f(v, Dv) by centered differences"""
    v_t = (solution(t + h, x) - solution(t - h, x)) / (2.0 * h)
    v_x = (solution(t, x + h) - solution(t, x - h)) / (2.0 * h)
    v = solution(t, x)
    residual = v_t + problem.drift(t, x) * v_x
    for monomial in problem.nonlinearity:
        residual += monomial(v, v_x)
    return residual


def _working_grid(problem, radius, count=RESIDUAL_GRID * 20):
    if problem.working_interval is not None and radius is None:
        low, high = problem.working_interval
    else:
        low, high = problem.x0 - radius, problem.x0 + radius
    return np.linspace(low, high, count)


def _sup(function, grid):
    return max(abs(function(float(x))) for x in grid)


def validate_problem(problem: ProblemSpec) -> ProblemReport:
    """Lipschitz and boundedness estimates for b, g, g', g'' and the PDE residual of the analytic solution"""
    report = ProblemReport(problem.name)

    times = np.linspace(problem.t_start, problem.t_end, LIPSCHITZ_SAMPLES)
    drifts = np.array([problem.drift(float(s), problem.x0) for s in times])
    quotients = np.abs(np.diff(drifts)) / np.diff(times)
    report.drift_lipschitz = float(np.max(quotients)) if quotients.size else 0.0
    if not math.isfinite(report.drift_lipschitz):
        report.warnings.append("drift Lipschitz estimate is not finite")
    if problem.space_dependent:
        report.warnings.append("drift depends on space; variance guarantees do not apply")

    if problem.working_interval is not None:
        grid = _working_grid(problem, None)
    else:
        grid = _working_grid(problem, 10.0)
        wide = _working_grid(problem, 100.0)
        narrow_sup = _sup(problem.terminal, grid)
        wide_sup = _sup(problem.terminal, wide)
        if wide_sup > UNBOUNDED_GROWTH_FACTOR * narrow_sup + 1e-9:
            report.g_unbounded = True
            report.warnings.append(
                f"g appears unbounded on the real line (sup |g| {narrow_sup:.3g} on radius 10, "
                f"{wide_sup:.3g} on radius 100)"
            )
    report.sup_g = _sup(problem.terminal, grid)
    report.sup_g_prime = _sup(problem.g_prime, grid)
    report.sup_g_second = _sup(problem.g_second, grid)
    for label, value in (("g", report.sup_g), ("g'", report.sup_g_prime), ("g''", report.sup_g_second)):
        if not math.isfinite(value):
            report.warnings.append(f"sup |{label}| is not finite on the working interval")

    if problem.analytic_solution is not None:
        t_grid = np.linspace(problem.t_start, problem.t_end, RESIDUAL_GRID)
        if problem.working_interval is not None:
            x_grid = np.linspace(*problem.working_interval, RESIDUAL_GRID)
        else:
            x_grid = np.linspace(problem.x0 - 5.0, problem.x0 + 5.0, RESIDUAL_GRID)
        residuals = [abs(pde_residual(problem, problem.analytic_solution, float(t), float(x)))
                     for t in t_grid for x in x_grid]
        report.residual_max = float(max(residuals))
        report.residual_ok = report.residual_max < RESIDUAL_TOLERANCE
        if not report.residual_ok:
            report.warnings.append(f"analytic solution PDE residual {report.residual_max:.3g} "
                                   f"exceeds {RESIDUAL_TOLERANCE:g}")

    for message in report.warnings:
        logger.warning("Problem %s: %s", problem.name, message)
    return report
