"""
Problem Definitions
Transport PDE problems dt v + b Dv + f(v, Dv) = 0 with terminal v(T, .) = g
"""
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate

from config.defaults import DERIVATIVE_STEP, QUADRATURE_TOLERANCE, SECOND_DERIVATIVE_STEP
from config.problems import PROBLEM_ALIASES, builtin_problems
from problems.expressions import Expression, match_cosine
from utils.errors import ConfigurationError, DomainError, ProblemError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Monomial:
    """Nonlinearity term coefficient * v^v_power * (Dv)^dv_power"""
    coefficient: float
    v_power: int = 0
    dv_power: int = 0

    def __post_init__(self):
        if self.v_power < 0 or self.dv_power < 0:
            raise ConfigurationError(f"monomial powers must be nonnegative, got {self}")

    @property
    def offspring(self):
        return self.v_power + self.dv_power

    def __call__(self, v, dv):
        return self.coefficient * v ** self.v_power * dv ** self.dv_power

    def label(self):
        return f"{float(self.coefficient)!r}:{self.v_power}:{self.dv_power}"


@dataclass(frozen=True)
class CentralDifference:
    """Numerical derivative of a one-argument function"""
    function: Callable[[float], float]
    order: int = 1
    step: float = DERIVATIVE_STEP

    def __call__(self, x):
        h = self.step
        if self.order == 1:
            return (self.function(x + h) - self.function(x - h)) / (2.0 * h)
        return (self.function(x + h) - 2.0 * self.function(x) + self.function(x - h)) / (h * h)


@dataclass(frozen=True)
class ProblemSpec:
    """
    A transport problem and the point (t_start, x0) at which it is solved.

    drift takes (t, x); terminal and its derivatives take x. Expression
    sources are kept so that problems round-trip through config files.
    """
    name: str
    drift: Callable[[float, float], float]
    terminal: Callable[[float], float]
    t_start: float = 0.0
    t_end: float = 1.0
    x0: float = 0.0
    terminal_d1: Optional[Callable[[float], float]] = None
    terminal_d2: Optional[Callable[[float], float]] = None
    nonlinearity: Tuple[Monomial, ...] = ()
    analytic_solution: Optional[Callable[[float, float], float]] = None
    space_dependent: bool = False
    working_interval: Optional[Tuple[float, float]] = None
    perturbation_sigma: Optional[float] = None
    builtin: Optional[str] = None
    sources: Tuple[Tuple[str, str], ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise DomainError(f"problem requires t < T, got t = {self.t_start}, T = {self.t_end}")

    @property
    def is_linear(self):
        return not self.nonlinearity

    @property
    def source_only(self):
        """Nonlinearity made of constant monomials (a source term h)"""
        return all(m.offspring == 0 for m in self.nonlinearity)

    @property
    def horizon(self):
        return self.t_end - self.t_start

    def source(self, key):
        return dict(self.sources).get(key)

    def at(self, t: float, x: float) -> "ProblemSpec":
        """Same problem solved at a different point"""
        return replace(self, t_start=t, x0=x)

    def g(self, x):
        value = self.terminal(x)
        if not math.isfinite(value):
            raise ProblemError(f"terminal condition is not finite at x = {x}")
        return value

    def g_array(self, x):
        """g over an array; raises ProblemError when any value is not finite"""
        terminal = self.terminal
        if hasattr(terminal, "evaluate_array"):
            values = terminal.evaluate_array(x)
        else:
            values = np.array([terminal(float(v)) for v in np.ravel(x)], dtype=float).reshape(np.shape(x))
        if not np.all(np.isfinite(values)):
            bad = np.asarray(x)[~np.isfinite(values)].ravel()[0]
            raise ProblemError(f"terminal condition is not finite at x = {bad}")
        return values

    def drift_at_times(self, times):
        """Time-only drift over an array of times"""
        if self.space_dependent:
            raise ProblemError(f"{self.name} has a space-dependent drift; it cannot be tabulated in t alone")
        drift = self.drift
        if isinstance(drift, Expression):
            values = drift.evaluate_array(times, 0.0)
        else:
            values = np.array([drift(float(s), 0.0) for s in np.ravel(times)], dtype=float).reshape(np.shape(times))
        if not np.all(np.isfinite(values)):
            bad = np.asarray(times)[~np.isfinite(values)].ravel()[0]
            raise ProblemError(f"drift is not finite at t = {bad}")
        return values

    @cached_property
    def g_prime(self):
        if self.terminal_d1 is not None:
            return self.terminal_d1
        logger.warning("Problem %s has no g'; using central differences (h=%g)", self.name, DERIVATIVE_STEP)
        return CentralDifference(self.terminal, 1)

    @cached_property
    def g_second(self):
        if self.terminal_d2 is not None:
            return self.terminal_d2
        logger.warning("Problem %s has no g''; using central differences (h=%g)", self.name, SECOND_DERIVATIVE_STEP)
        return CentralDifference(self.terminal, 2, step=SECOND_DERIVATIVE_STEP)

    @cached_property
    def constant_drift(self):
        """Drift value when it is a constant expression, else None"""
        if isinstance(self.drift, Expression) and self.drift.is_constant:
            return self.drift(0.0, 0.0)
        return None

    @cached_property
    def cosine_terminal(self):
        """(A, phi) when g(x) = A cos(x + phi)"""
        terminal = getattr(self.terminal, "expression", None)
        return match_cosine(terminal) if terminal is not None else None


def drift_integral(problem: ProblemSpec, s0: float, s1: float) -> float:
    """Integral of the (time-only) drift over [s0, s1]"""
    if problem.constant_drift is not None:
        return problem.constant_drift * (s1 - s0)
    value, _ = integrate.quad(lambda s: problem.drift(s, 0.0), s0, s1,
                              epsabs=QUADRATURE_TOLERANCE, epsrel=QUADRATURE_TOLERANCE, limit=200)
    return value


def parse_nonlinearity(text: str) -> Tuple[Monomial, ...]:
    """Comma-separated coef:a:b triples"""
    monomials = []
    for item in (part.strip() for part in text.split(",")):
        if not item:
            continue
        pieces = item.split(":")
        if len(pieces) != 3:
            raise ConfigurationError(f"nonlinearity term {item!r} is not of the form coef:a:b")
        try:
            monomials.append(Monomial(float(pieces[0]), int(pieces[1]), int(pieces[2])))
        except ValueError as exc:
            raise ConfigurationError(f"nonlinearity term {item!r}: {exc}") from exc
    return tuple(monomials)


def format_nonlinearity(monomials) -> str:
    return ", ".join(m.label() for m in monomials)


def problem_from_expressions(name: str, drift: str, terminal: str, t: float = 0.0, x: float = 0.0,
                             t_end: float = 1.0, terminal_d1: Optional[str] = None,
                             terminal_d2: Optional[str] = None, analytic: Optional[str] = None,
                             nonlinearity=(), working_interval=None, perturbation_sigma=None,
                             builtin=None) -> ProblemSpec:
    """Problem built from expression strings"""
    drift_expr = Expression.parse(drift)
    terminal_expr = Expression.parse(terminal)
    if "t" in terminal_expr.variables:
        raise ConfigurationError(f"terminal condition {terminal!r} must not depend on t")
    sources = [("drift", drift_expr.source), ("terminal", terminal_expr.source)]
    d1 = d2 = solution = None
    if terminal_d1:
        d1 = Expression.parse(terminal_d1).of_x()
        sources.append(("terminal_d1", d1.expression.source))
    if terminal_d2:
        d2 = Expression.parse(terminal_d2).of_x()
        sources.append(("terminal_d2", d2.expression.source))
    if analytic:
        solution = Expression.parse(analytic)
        sources.append(("analytic", solution.source))
    if isinstance(nonlinearity, str):
        nonlinearity = parse_nonlinearity(nonlinearity)
    nonlinearity = tuple(m if isinstance(m, Monomial) else Monomial(*m) for m in nonlinearity)
    return ProblemSpec(
        name=name,
        drift=drift_expr,
        terminal=terminal_expr.of_x(),
        t_start=float(t),
        t_end=float(t_end),
        x0=float(x),
        terminal_d1=d1,
        terminal_d2=d2,
        nonlinearity=nonlinearity,
        analytic_solution=solution,
        space_dependent="x" in drift_expr.variables,
        working_interval=tuple(working_interval) if working_interval else None,
        perturbation_sigma=perturbation_sigma,
        builtin=builtin,
        sources=tuple(sources),
    )


def resolve_builtin_name(name: str) -> str:
    key = name.strip().lower()
    key = PROBLEM_ALIASES.get(key, key)
    if key not in builtin_problems:
        known = ", ".join(sorted(builtin_problems))
        raise ConfigurationError(f"unknown built-in problem {name!r} (known: {known})")
    return key


def builtin_problem(name: str) -> ProblemSpec:
    """Named problem from the built-in registry"""
    key = resolve_builtin_name(name)
    entry = builtin_problems[key]
    return problem_from_expressions(
        name=key,
        drift=entry["drift"],
        terminal=entry["terminal"],
        t=entry["t"],
        x=entry["x"],
        t_end=entry["t_end"],
        terminal_d1=entry.get("terminal_d1"),
        terminal_d2=entry.get("terminal_d2"),
        analytic=entry.get("analytic"),
        nonlinearity=entry["nonlinearity"],
        perturbation_sigma=entry.get("perturbation_sigma"),
        builtin=key,
    )
