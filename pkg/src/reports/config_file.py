"""
Configuration Files
INI documents describing the problem, estimator, lifetime law, diffusion
schedule, Monte Carlo settings and event law of a run
"""
import configparser
import io
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from config.defaults import (
    DEFAULT_CONFIDENCE,
    DEFAULT_ETA,
    DEFAULT_KAPPA,
    DEFAULT_MAX_DEPTH,
    DEFAULT_REPEATS,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DEFAULT_SIGMA0,
    DEFAULT_SIGMA_EXPONENT,
    default_worker_count,
)
from estimators.branching import EventDistribution
from estimators.tasks import METHODS, EstimatorTask, make_task
from montecarlo.harness import McConfig
from paths.mesh_path import SigmaSchedule
from problems.problem import (
    ProblemSpec,
    builtin_problem,
    format_nonlinearity,
    problem_from_expressions,
    resolve_builtin_name,
)
from sampling.distributions import LifetimeParams
from utils.errors import ConfigurationError, ProblemError

logger = logging.getLogger(__name__)

# ===================== DOCUMENT LAYOUT =====================
SECTION_KEYS = {
    "problem": ("builtin", "name", "drift", "terminal", "terminal_d1", "terminal_d2", "analytic",
                "nonlinearity", "t", "x", "t_end", "working_interval"),
    "estimator": ("method", "perturbation_sigma", "order", "half_v", "max_depth"),
    "lifetimes": ("kappa", "eta"),
    "sigma": ("sigma0", "n"),
    "mc": ("samples", "repeats", "levels", "seed", "confidence", "methods", "unsafe_variance"),
    "events": ("correction", "monomials"),
}
REQUIRED_SECTIONS = ("problem",)
BUILTIN_OVERRIDES = ("builtin", "t", "x")


@dataclass(frozen=True)
class EstimatorSettings:
    method: str = "unbiased"
    perturbation_sigma: Optional[float] = None
    order: int = 1
    half_v: bool = False
    max_depth: int = DEFAULT_MAX_DEPTH


@dataclass(frozen=True)
class ConfigBundle:
    """Everything a configuration document specifies"""
    problem: ProblemSpec
    mc: McConfig
    schedule: SigmaSchedule
    params: LifetimeParams
    events: Optional[EventDistribution] = None
    estimator: EstimatorSettings = EstimatorSettings()

    def at(self, t: float, x: float) -> "ConfigBundle":
        return replace(self, problem=self.problem.at(t, x))

    @property
    def sigma(self):
        if self.estimator.perturbation_sigma is not None:
            return self.estimator.perturbation_sigma
        return self.problem.perturbation_sigma

    def task(self, method: Optional[str] = None) -> EstimatorTask:
        settings = self.estimator
        return make_task(method or settings.method, self.problem, self.schedule, self.params, self.events,
                         self.sigma, settings.order, settings.half_v, settings.max_depth)


class _Document:
    """Parsed INI text that remembers where each key was written"""

    def __init__(self, text: str):
        self.parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                                default_section="__defaults__")
        try:
            self.parser.read_string(text)
        except configparser.MissingSectionHeaderError as exc:
            raise ConfigurationError("key outside of any [section]", line=exc.lineno) from exc
        except configparser.DuplicateSectionError as exc:
            raise ConfigurationError(f"duplicate section [{exc.section}]", line=exc.lineno) from exc
        except configparser.DuplicateOptionError as exc:
            raise ConfigurationError(f"duplicate key {exc.option!r} in [{exc.section}]", line=exc.lineno) from exc
        except configparser.ParsingError as exc:
            lineno = exc.errors[0][0] if exc.errors else None
            raise ConfigurationError("malformed line", line=lineno) from exc
        self.lines = self._index(text)

    @staticmethod
    def _index(text):
        lines = {}
        section = None
        for number, raw in enumerate(text.splitlines(), start=1):
            stripped = raw.strip()
            if not stripped or stripped[0] in "#;":
                continue
            if stripped.startswith("[") and "]" in stripped:
                section = stripped[1:stripped.index("]")].strip()
                lines[(section, None)] = number
                continue
            for separator in ("=", ":"):
                if separator in stripped and section is not None:
                    key = stripped.split(separator, 1)[0].strip().lower()
                    lines.setdefault((section, key), number)
                    break
        return lines

    def line(self, section, key=None):
        return self.lines.get((section, key))

    def check_layout(self):
        for section in self.parser.sections():
            if section not in SECTION_KEYS:
                raise ConfigurationError(f"unknown section [{section}]", line=self.line(section))
            for key in self.parser[section]:
                if key not in SECTION_KEYS[section]:
                    raise ConfigurationError(f"unknown key {key!r} in [{section}]", line=self.line(section, key))
        for section in REQUIRED_SECTIONS:
            if not self.parser.has_section(section):
                raise ConfigurationError(f"missing section [{section}]")

    def raw(self, section, key):
        if not self.parser.has_section(section):
            return None
        value = self.parser[section].get(key)
        return value.strip() if value is not None else None

    def get(self, section, key, convert, default=None):
        value = self.raw(section, key)
        if value is None or value == "":
            return default
        try:
            return convert(value)
        except (ValueError, ConfigurationError, ProblemError) as exc:
            raise ConfigurationError(f"[{section}] {key}: {exc}", line=self.line(section, key)) from exc

    def fail(self, section, key, message):
        raise ConfigurationError(f"[{section}] {key}: {message}", line=self.line(section, key))


def _finite_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not a finite number")
    return value


def _boolean(text):
    states = configparser.ConfigParser.BOOLEAN_STATES
    if text.lower() not in states:
        raise ValueError(f"{text!r} is not a boolean")
    return states[text.lower()]


def _float_list(text):
    return tuple(_finite_float(item) for item in text.split(",") if item.strip())


def _int_list(text):
    return tuple(int(float(item)) for item in text.split(",") if item.strip())


def _name_list(text):
    return tuple(item.strip().lower() for item in text.split(",") if item.strip())


def _parse_problem(doc: _Document) -> ProblemSpec:
    builtin = doc.raw("problem", "builtin")
    if builtin:
        for key in doc.parser["problem"]:
            if key not in BUILTIN_OVERRIDES:
                doc.fail("problem", key, f"cannot be combined with builtin = {builtin}")
        try:
            problem = builtin_problem(resolve_builtin_name(builtin))
        except ConfigurationError as exc:
            raise ConfigurationError(str(exc), line=doc.line("problem", "builtin")) from exc
        t = doc.get("problem", "t", _finite_float, problem.t_start)
        x = doc.get("problem", "x", _finite_float, problem.x0)
        if not t < problem.t_end:
            doc.fail("problem", "t", f"must lie before T = {problem.t_end}")
        return problem.at(t, x)

    for key in ("drift", "terminal"):
        if not doc.raw("problem", key):
            doc.fail("problem", key, "required unless builtin is given")
    interval = doc.get("problem", "working_interval", _float_list)
    if interval is not None and (len(interval) != 2 or not interval[0] < interval[1]):
        doc.fail("problem", "working_interval", "expected 'low, high' with low < high")
    t = doc.get("problem", "t", _finite_float, 0.0)
    t_end = doc.get("problem", "t_end", _finite_float, 1.0)
    if not t < t_end:
        doc.fail("problem", "t", f"must lie before t_end = {t_end}")
    try:
        return problem_from_expressions(
            name=doc.raw("problem", "name") or "custom",
            drift=doc.raw("problem", "drift"),
            terminal=doc.raw("problem", "terminal"),
            t=t,
            x=doc.get("problem", "x", _finite_float, 0.0),
            t_end=t_end,
            terminal_d1=doc.raw("problem", "terminal_d1") or None,
            terminal_d2=doc.raw("problem", "terminal_d2") or None,
            analytic=doc.raw("problem", "analytic") or None,
            nonlinearity=doc.raw("problem", "nonlinearity") or (),
            working_interval=interval,
        )
    except (ConfigurationError, ProblemError) as exc:
        raise ConfigurationError(f"[problem] {exc}", line=doc.line("problem")) from exc


def _parse_settings(doc: _Document) -> EstimatorSettings:
    method = doc.get("estimator", "method", str.lower, "unbiased")
    if method not in METHODS:
        doc.fail("estimator", "method", f"unknown method {method!r} (known: {', '.join(METHODS)})")
    order = doc.get("estimator", "order", int, 1)
    if order not in (1, 2):
        doc.fail("estimator", "order", "must be 1 or 2")
    max_depth = doc.get("estimator", "max_depth", int, DEFAULT_MAX_DEPTH)
    if max_depth < 1:
        doc.fail("estimator", "max_depth", "must be at least 1")
    return EstimatorSettings(
        method=method,
        perturbation_sigma=doc.get("estimator", "perturbation_sigma", _finite_float),
        order=order,
        half_v=doc.get("estimator", "half_v", _boolean, False),
        max_depth=max_depth,
    )


def _construct(doc, section, key, factory):
    """Build a validated object, pinning its error on the section's first line"""
    try:
        return factory()
    except ConfigurationError as exc:
        raise ConfigurationError(f"[{section}] {exc}", line=doc.line(section, key) or doc.line(section)) from exc


def parse_config(text: str) -> ConfigBundle:
    """Validated bundle from INI text; errors carry the offending line number"""
    doc = _Document(text)
    doc.check_layout()
    problem = _parse_problem(doc)
    settings = _parse_settings(doc)
    unsafe = doc.get("mc", "unsafe_variance", _boolean, False)

    kappa = doc.get("lifetimes", "kappa", _finite_float, DEFAULT_KAPPA)
    eta = doc.get("lifetimes", "eta", _finite_float, DEFAULT_ETA)
    params = _construct(doc, "lifetimes", "kappa", lambda: LifetimeParams(kappa, eta, unsafe))
    sigma0 = doc.get("sigma", "sigma0", _finite_float, DEFAULT_SIGMA0)
    n = doc.get("sigma", "n", _finite_float, DEFAULT_SIGMA_EXPONENT)
    schedule = _construct(doc, "sigma", "n", lambda: SigmaSchedule(sigma0, n, unsafe))

    methods = doc.get("mc", "methods", _name_list, (settings.method,))
    for method in methods:
        if method not in METHODS:
            doc.fail("mc", "methods", f"unknown method {method!r} (known: {', '.join(METHODS)})")
    mc = _construct(doc, "mc", "samples", lambda: McConfig(
        n_samples=doc.get("mc", "samples", int, DEFAULT_SAMPLES),
        n_repeats=doc.get("mc", "repeats", int, DEFAULT_REPEATS),
        sample_levels=doc.get("mc", "levels", _int_list, ()),
        master_seed=doc.get("mc", "seed", int, DEFAULT_SEED),
        confidence_level=doc.get("mc", "confidence", _finite_float, DEFAULT_CONFIDENCE),
        methods=methods,
        unsafe_variance=unsafe,
        workers=default_worker_count(),
    ))

    events = None
    if doc.parser.has_section("events"):
        correction = doc.get("events", "correction", _finite_float)
        if correction is None:
            doc.fail("events", "correction", "required in [events]")
        monomials = doc.get("events", "monomials", _float_list, ())
        events = _construct(doc, "events", "correction", lambda: EventDistribution(correction, monomials))
        _construct(doc, "events", "monomials", lambda: events.check_against(problem))

    if problem.space_dependent and not unsafe:
        doc.fail("problem", "drift", "a drift depending on x needs unsafe_variance = true")
    return ConfigBundle(problem, mc, schedule, params, events, settings)


def load_config(path) -> ConfigBundle:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def _number(value):
    return repr(float(value))


def format_config(bundle: ConfigBundle) -> str:
    """Canonical text form; parsing it gives back an equal bundle"""
    problem = bundle.problem
    writer = configparser.ConfigParser(interpolation=None)
    if problem.builtin:
        writer["problem"] = {"builtin": problem.builtin, "t": _number(problem.t_start), "x": _number(problem.x0)}
    else:
        section = {"name": problem.name}
        for key in ("drift", "terminal", "terminal_d1", "terminal_d2", "analytic"):
            source = problem.source(key)
            if source:
                section[key] = source
        if problem.nonlinearity:
            section["nonlinearity"] = format_nonlinearity(problem.nonlinearity)
        section.update(t=_number(problem.t_start), x=_number(problem.x0), t_end=_number(problem.t_end))
        if problem.working_interval:
            section["working_interval"] = ", ".join(_number(v) for v in problem.working_interval)
        writer["problem"] = section

    settings = bundle.estimator
    estimator = {"method": settings.method, "order": str(settings.order),
                 "half_v": str(settings.half_v).lower(), "max_depth": str(settings.max_depth)}
    if settings.perturbation_sigma is not None:
        estimator["perturbation_sigma"] = _number(settings.perturbation_sigma)
    writer["estimator"] = estimator
    writer["lifetimes"] = {"kappa": _number(bundle.params.kappa), "eta": _number(bundle.params.eta)}
    writer["sigma"] = {"sigma0": _number(bundle.schedule.sigma0), "n": _number(bundle.schedule.n)}

    mc = bundle.mc
    mc_section = {"samples": str(mc.n_samples), "repeats": str(mc.n_repeats), "seed": str(mc.master_seed),
                  "confidence": _number(mc.confidence_level), "methods": ", ".join(mc.methods),
                  "unsafe_variance": str(mc.unsafe_variance).lower()}
    if mc.sample_levels:
        mc_section["levels"] = ", ".join(str(level) for level in mc.sample_levels)
    writer["mc"] = mc_section
    if bundle.events is not None:
        writer["events"] = {"correction": _number(bundle.events.correction),
                            "monomials": ", ".join(_number(p) for p in bundle.events.monomials)}

    buffer = io.StringIO()
    writer.write(buffer)
    return buffer.getvalue()


def sample_config(name: str) -> Tuple[str, ConfigBundle]:
    """Canonical configuration of a built-in problem with default settings"""
    text = f"[problem]\nbuiltin = {resolve_builtin_name(name)}\n"
    bundle = parse_config(text)
    return format_config(bundle), bundle
