"""INI configuration parsing, validation and canonical formatting."""

import pytest

from estimators.branching import EventDistribution
from reports.config_file import format_config, load_config, parse_config, sample_config
from utils.errors import ConfigurationError

CUSTOM = """\
# time-dependent drift with a cosine terminal
[problem]
name = time-drift
drift = t
terminal = cos(x)
terminal_d1 = -sin(x)
t = 0
x = 0.5
t_end = 2

[estimator]
method = derivative
order = 2

[lifetimes]
eta = 1.5

[sigma]
sigma0 = 0.5
n = -1.5

[mc]
samples = 2000
repeats = 3
levels = 100, 1000
seed = 42
confidence = 0.8
methods = unbiased, derivative
"""


class TestParse:

    def test_builtin_defaults(self):
        bundle = parse_config("[problem]\nbuiltin = paper-linear\n")
        assert bundle.problem.name == "paper-linear"
        assert bundle.problem.x0 == 10.0
        assert bundle.params.kappa == 0.5
        assert bundle.schedule.n == -1.0
        assert bundle.mc.confidence_level == 0.9
        assert bundle.estimator.method == "unbiased"
        assert bundle.sigma == 0.1

    def test_builtin_point_override(self):
        bundle = parse_config("[problem]\nbuiltin = linear\nt = 0.5\nx = 3\n")
        assert (bundle.problem.t_start, bundle.problem.x0) == (0.5, 3.0)

    def test_custom_problem(self):
        bundle = parse_config(CUSTOM)
        problem = bundle.problem
        assert problem.name == "time-drift"
        assert problem.t_end == 2.0
        assert problem.x0 == 0.5
        assert bundle.params.eta == 1.5
        assert bundle.schedule.sigma0 == 0.5
        assert bundle.mc.sample_levels == (100, 1000)
        assert bundle.mc.methods == ("unbiased", "derivative")
        assert bundle.estimator.order == 2
        task = bundle.task()
        assert task.label == "derivative2"

    def test_events_section(self):
        text = "[problem]\nbuiltin = paper-nonlinear\n[events]\ncorrection = 0.4\nmonomials = 0.2, 0.2, 0.2\n"
        bundle = parse_config(text)
        assert bundle.events == EventDistribution(0.4, (0.2, 0.2, 0.2))

    def test_at(self):
        moved = parse_config(CUSTOM).at(1.0, 2.0)
        assert (moved.problem.t_start, moved.problem.x0) == (1.0, 2.0)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(CUSTOM, encoding="utf-8")
        assert load_config(path) == parse_config(CUSTOM)


class TestErrors:

    @pytest.mark.parametrize("text, line", [
        ("[problem]\nbuiltin = paper-linear\ncolour = red\n", 3),
        ("[problem]\nbuiltin = paper-linear\n[plot]\nstyle = x\n", 3),
        ("[problem]\nbuiltin = paper-linear\n[lifetimes]\nkappa = 1.0\n", 4),
        ("[problem]\nbuiltin = paper-linear\n[mc]\nconfidence = 1.5\n", None),
        ("[problem]\nbuiltin = nowhere\n", 2),
        ("[problem]\ndrift = 1\n", None),
        ("[problem]\nbuiltin = paper-linear\ndrift = 2\n", 3),
        ("[problem]\nbuiltin = paper-linear\n[estimator]\nmethod = magic\n", 4),
        ("[problem]\nbuiltin = paper-linear\n[sigma]\nsigma0 = abc\n", 4),
        ("samples = 10\n", 1),
    ])
    def test_rejected(self, text, line):
        with pytest.raises(ConfigurationError) as info:
            parse_config(text)
        if line is not None:
            assert info.value.line == line
            assert str(info.value).startswith(f"line {line}:")

    def test_missing_problem_section(self):
        with pytest.raises(ConfigurationError, match="missing section"):
            parse_config("[mc]\nsamples = 10\n")

    def test_unsafe_flag_allows_other_shapes(self):
        bundle = parse_config("[problem]\nbuiltin = paper-linear\n[lifetimes]\nkappa = 1.0\n"
                              "[mc]\nunsafe_variance = true\n")
        assert bundle.params.kappa == 1.0

    def test_space_dependent_drift_needs_unsafe_flag(self):
        text = "[problem]\ndrift = -x\nterminal = cos(x)\n"
        with pytest.raises(ConfigurationError):
            parse_config(text)
        assert parse_config(text + "[mc]\nunsafe_variance = yes\n").problem.space_dependent

    def test_event_law_must_match_problem(self):
        text = "[problem]\nbuiltin = paper-nonlinear\n[events]\ncorrection = 0.5\nmonomials = 0.5\n"
        with pytest.raises(ConfigurationError):
            parse_config(text)


class TestFormat:

    @pytest.mark.parametrize("name", ["paper-linear", "paper-nonlinear", "constant-drift-linear", "source-term"])
    def test_builtin_round_trip(self, name):
        text, bundle = sample_config(name)
        assert parse_config(text) == bundle
        assert format_config(parse_config(text)) == text

    def test_custom_round_trip(self):
        bundle = parse_config(CUSTOM)
        text = format_config(bundle)
        assert parse_config(text) == bundle
        assert format_config(parse_config(text)) == text

    def test_nonlinearity_and_events_round_trip(self):
        text = ("[problem]\ndrift = 1\nterminal = cos(x)\nnonlinearity = 0.1:2:0, -0.3:0:1\n"
                "[events]\ncorrection = 0.5\nmonomials = 0.25, 0.25\n")
        bundle = parse_config(text)
        assert parse_config(format_config(bundle)) == bundle


class TestSmallDocuments:

    def test_expression_problem_evaluates(self):
        bundle = parse_config("[problem]\ndrift = t\nterminal = cos(x)\n")
        assert bundle.problem.drift(0.0, 0.0) == 0.0
        assert bundle.problem.g(0.0) == 1.0

    def test_weak_sigma_exponent_rejected(self):
        with pytest.raises(ConfigurationError, match="finite-variance"):
            parse_config("[problem]\nbuiltin = paper-linear\n[sigma]\nn = -0.5\n")
