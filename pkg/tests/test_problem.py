"""Expression grammar, problem definitions and the built-in registry."""

import math

import pytest

from config.problems import builtin_problems
from problems.expressions import Expression, match_cosine
from problems.problem import (
    CentralDifference,
    Monomial,
    builtin_problem,
    drift_integral,
    format_nonlinearity,
    parse_nonlinearity,
    problem_from_expressions,
)
from utils.errors import ConfigurationError, DomainError, ProblemError


class TestExpression:

    @pytest.mark.parametrize("source, t, x, expected", [
        ("1", 0.0, 0.0, 1.0),
        ("10*cos(x-6)", 0.0, 6.0, 10.0),
        ("-2^2", 0.0, 0.0, -4.0),
        ("2^3^2", 0.0, 0.0, 512.0),
        ("(1 + t) * x / 2", 1.0, 3.0, 3.0),
        ("exp(-t) + sin(pi/2)", 0.0, 0.0, 2.0),
        ("1.5e-1 * x", 0.0, 2.0, 0.3),
    ])
    def test_evaluation(self, source, t, x, expected):
        assert Expression.parse(source)(t, x) == pytest.approx(expected)

    def test_variables(self):
        assert Expression.parse("t + cos(x)").variables == {"t", "x"}
        assert Expression.parse("2*pi").is_constant

    @pytest.mark.parametrize("source", ["", "1 +", "cos(x", "foo(x)", "y", "2 $ 3", "(1))"])
    def test_malformed(self, source):
        with pytest.raises(ProblemError):
            Expression.parse(source)

    def test_evaluation_error_is_problem_error(self):
        with pytest.raises(ProblemError):
            Expression.parse("1/x")(0.0, 0.0)

    def test_of_x(self):
        assert Expression.parse("x^2").of_x()(3.0) == pytest.approx(9.0)


class TestMatchCosine:

    def test_scaled_shifted_cosine(self):
        amplitude, phase = match_cosine(Expression.parse("10*cos(x-6)"))
        assert amplitude == pytest.approx(10.0)
        assert phase == pytest.approx(-6.0)

    def test_reflected_argument(self):
        amplitude, phase = match_cosine(Expression.parse("cos(1-x)"))
        assert amplitude == pytest.approx(1.0)
        assert phase == pytest.approx(-1.0)

    @pytest.mark.parametrize("source", ["sin(x)", "cos(2*x)", "x", "cos(x) + 1", "cos(x - t)"])
    def test_non_cosines(self, source):
        assert match_cosine(Expression.parse(source)) is None


class TestMonomials:

    def test_call_and_offspring(self):
        monomial = Monomial(0.1, 2, 1)
        assert monomial(2.0, 3.0) == pytest.approx(1.2)
        assert monomial.offspring == 3

    def test_negative_power_rejected(self):
        with pytest.raises(ConfigurationError):
            Monomial(1.0, -1, 0)

    def test_parse_and_format(self):
        monomials = parse_nonlinearity("0.1:0:2, 0.1:2:0, -0.1:0:0")
        assert monomials == (Monomial(0.1, 0, 2), Monomial(0.1, 2, 0), Monomial(-0.1, 0, 0))
        assert parse_nonlinearity(format_nonlinearity(monomials)) == monomials

    def test_malformed_term(self):
        with pytest.raises(ConfigurationError):
            parse_nonlinearity("0.1:2")


class TestProblemSpec:

    def test_builtin_linear(self, linear_problem):
        assert linear_problem.is_linear
        assert linear_problem.x0 == 10.0
        assert linear_problem.g(11.0) == pytest.approx(10 * math.cos(5.0))
        assert linear_problem.constant_drift == 1.0
        assert not linear_problem.space_dependent

    def test_builtin_nonlinear(self, nonlinear_problem):
        assert not nonlinear_problem.is_linear
        assert len(nonlinear_problem.nonlinearity) == 3
        assert nonlinear_problem.analytic_solution(0.0, 1.0) == pytest.approx(math.cos(1.0))

    def test_every_builtin_builds(self):
        for name in builtin_problems:
            assert builtin_problem(name).name == name

    def test_aliases(self):
        assert builtin_problem("linear").name == "paper-linear"

    def test_unknown_builtin(self):
        with pytest.raises(ConfigurationError, match="unknown built-in"):
            builtin_problem("heat")

    def test_at_moves_the_point(self, linear_problem):
        moved = linear_problem.at(0.5, 2.0)
        assert (moved.t_start, moved.x0) == (0.5, 2.0)
        assert moved.t_end == linear_problem.t_end

    def test_requires_t_before_horizon(self):
        with pytest.raises(DomainError):
            problem_from_expressions("bad", "1", "x", t=1.0, t_end=1.0)

    def test_terminal_must_not_depend_on_time(self):
        with pytest.raises(ConfigurationError):
            problem_from_expressions("bad", "1", "x + t")

    def test_space_dependent_drift_detected(self):
        assert problem_from_expressions("ou", "-x", "cos(x)").space_dependent

    def test_numerical_derivatives_when_missing(self):
        problem = problem_from_expressions("plain", "1", "sin(x)")
        assert isinstance(problem.g_prime, CentralDifference)
        assert problem.g_prime(0.3) == pytest.approx(math.cos(0.3), abs=1e-8)
        assert problem.g_second(0.3) == pytest.approx(-math.sin(0.3), abs=1e-6)

    def test_non_finite_terminal(self):
        problem = problem_from_expressions("blowup", "1", "exp(x)")
        with pytest.raises(ProblemError):
            problem.g(1000.0)

    def test_drift_integral(self):
        problem = problem_from_expressions("time", "t", "cos(x)")
        assert drift_integral(problem, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)
        assert drift_integral(builtin_problem("paper-linear"), 0.25, 1.0) == pytest.approx(0.75)
