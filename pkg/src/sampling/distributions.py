"""
Lifetime and Brownian Increment Sampling
Gamma lifetime law (sampling, density, survival) and Gaussian increments
drawn from reproducible counter-based streams
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from config.defaults import DEFAULT_ETA, DEFAULT_KAPPA
from utils.errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

_UINT64_MASK = 0xFFFF_FFFF_FFFF_FFFF
_FLOAT_MAX = float(np.finfo(float).max)


@dataclass(frozen=True)
class LifetimeParams:
    """Gamma(kappa, eta) lifetime law of the switching times"""
    kappa: float = DEFAULT_KAPPA
    eta: float = DEFAULT_ETA
    unsafe_variance: bool = False

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ConfigurationError(f"Gamma shape kappa must be positive, got {self.kappa}")
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigurationError(f"Gamma scale eta must be positive, got {self.eta}")
        if self.kappa != 0.5:
            if not self.unsafe_variance:
                raise ConfigurationError(
                    f"kappa = {self.kappa} violates the finite-variance assumption "
                    "(Gamma shape kappa = 1/2); set unsafe_variance = true to override"
                )
            logger.warning("Gamma shape kappa = %s accepted under unsafe_variance", self.kappa)

    @property
    def is_half_shape(self):
        return self.kappa == 0.5

    @property
    def log_normalizer(self):
        """log(Gamma(kappa) * eta^kappa)"""
        return float(special.gammaln(self.kappa)) + self.kappa * math.log(self.eta)


@dataclass(frozen=True)
class RngStream:
    """
    Counter-based random stream for one Monte Carlo sample.

    A Philox generator keyed by (master_seed, stream_index): distinct keys give
    independent sequences and the same key replays bit-identical draws.
    """
    master_seed: int
    stream_index: int
    _generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        key = np.array([self.stream_index & _UINT64_MASK, self.master_seed & _UINT64_MASK],
                       dtype=np.uint64)
        object.__setattr__(self, "_generator", np.random.Generator(np.random.Philox(key=key)))

    def __getstate__(self):
        return {"master_seed": self.master_seed, "stream_index": self.stream_index,
                "state": self._generator.bit_generator.state}

    def __setstate__(self, state):
        object.__setattr__(self, "master_seed", state["master_seed"])
        object.__setattr__(self, "stream_index", state["stream_index"])
        generator = np.random.Generator(np.random.Philox())
        generator.bit_generator.state = state["state"]
        object.__setattr__(self, "_generator", generator)

    def replay(self):
        """Fresh stream with the same key, positioned at the first draw"""
        return RngStream(self.master_seed, self.stream_index)

    def normal(self):
        return float(self._generator.standard_normal())

    def uniform(self):
        return float(self._generator.random())

    def categorical(self, probabilities):
        """Index drawn from a discrete law given as a sequence of probabilities"""
        u = self.uniform()
        cumulative = 0.0
        for index, p in enumerate(probabilities):
            cumulative += p
            if u < cumulative:
                return index
        return len(probabilities) - 1


def derive_seed(*components):
    """64-bit seed hashed from integer components (master seed, level, repeat, ...)"""
    sequence = np.random.SeedSequence([int(c) & _UINT64_MASK for c in components])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _sample_gamma_unit(shape, rng):
    """Marsaglia-Tsang sampler for Gamma(shape, 1), shape >= 1"""
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        z = rng.normal()
        v = 1.0 + c * z
        if v <= 0.0:
            continue
        v = v * v * v
        u = rng.uniform()
        if u < 1.0 - 0.0331 * z ** 4:
            return d * v
        if u > 0.0 and math.log(u) < 0.5 * z * z + d * (1.0 - v + math.log(v)):
            return d * v


def sample_lifetime(params: LifetimeParams, rng: RngStream) -> float:
    """Draw a Gamma(kappa, eta) lifetime; kappa = 1/2 uses (eta/2) Z^2"""
    if params.is_half_shape:
        z = rng.normal()
        draw = 0.5 * params.eta * z * z
    elif params.kappa >= 1.0:
        draw = params.eta * _sample_gamma_unit(params.kappa, rng)
    else:
        # Shape boost: Gamma(k) = Gamma(k + 1) * U^(1/k)
        boosted = _sample_gamma_unit(params.kappa + 1.0, rng)
        u = rng.uniform()
        draw = params.eta * boosted * u ** (1.0 / params.kappa)
    # A zero draw would make every density divisor blow up
    return draw if draw > 0.0 else float(np.nextafter(0.0, 1.0))


def lifetime_density(params: LifetimeParams, s: float) -> float:
    """Gamma density s^(kappa-1) exp(-s/eta) / (Gamma(kappa) eta^kappa)"""
    if not s > 0:
        raise DomainError(f"lifetime density evaluated at s = {s}; requires s > 0")
    if params.is_half_shape:
        value = math.exp(-s / params.eta) / math.sqrt(math.pi * params.eta * s)
    else:
        log_value = (params.kappa - 1.0) * math.log(s) - s / params.eta - params.log_normalizer
        value = math.exp(log_value) if log_value < 709.0 else math.inf
    return value if math.isfinite(value) else _FLOAT_MAX


def lifetime_survival(params: LifetimeParams, s: float) -> float:
    """Survival function P[tau >= s]"""
    if s < 0:
        raise DomainError(f"lifetime survival evaluated at s = {s}; requires s >= 0")
    if s == 0:
        return 1.0
    if params.is_half_shape:
        return float(special.erfc(math.sqrt(s / params.eta)))
    return float(special.gammaincc(params.kappa, s / params.eta))


def sample_gaussian_increment(rng: RngStream, dt: float) -> float:
    """Brownian increment over a step of length dt"""
    if not dt > 0:
        raise DomainError(f"Brownian increment requires dt > 0, got {dt}")
    return math.sqrt(dt) * rng.normal()


# Keeps block keys apart from the per-sample stream keys of the same run
_BLOCK_STREAM_TAG = 0x626C6F636B


def block_generator(run_key: int, block_index: int) -> np.random.Generator:
    """Philox generator shared by the samples of one vectorised block"""
    key = np.array([block_index & _UINT64_MASK, derive_seed(run_key, _BLOCK_STREAM_TAG)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_lifetime_array(params: LifetimeParams, generator: np.random.Generator, size: int) -> np.ndarray:
    """size independent Gamma(kappa, eta) lifetimes; kappa = 1/2 uses (eta/2) Z^2"""
    if params.is_half_shape:
        z = generator.standard_normal(size)
        draws = 0.5 * params.eta * z * z
    else:
        draws = generator.gamma(params.kappa, params.eta, size)
    return np.where(draws > 0.0, draws, np.nextafter(0.0, 1.0))


def lifetime_density_array(params: LifetimeParams, s) -> np.ndarray:
    """Elementwise lifetime_density for s > 0"""
    s = np.asarray(s, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        if params.is_half_shape:
            values = np.exp(-s / params.eta) / np.sqrt(math.pi * params.eta * s)
        else:
            log_values = (params.kappa - 1.0) * np.log(s) - s / params.eta - params.log_normalizer
            values = np.where(log_values >= 709.0, np.inf, np.exp(np.minimum(log_values, 709.0)))
    return np.where(np.isfinite(values), values, _FLOAT_MAX)


def lifetime_survival_array(params: LifetimeParams, s) -> np.ndarray:
    """Elementwise P[tau >= s] for s >= 0"""
    s = np.asarray(s, dtype=float)
    if params.is_half_shape:
        return special.erfc(np.sqrt(s / params.eta))
    return special.gammaincc(params.kappa, s / params.eta)
