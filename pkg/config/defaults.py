"""
Solver defaults and run settings
"""
import os

# Lifetime law (Gamma shape / scale)
DEFAULT_KAPPA = 0.5
DEFAULT_ETA = 2.0

# Mesh-dependent diffusion coefficient
DEFAULT_SIGMA0 = 0.1
DEFAULT_SIGMA_EXPONENT = -1.0

# Explosion probability of the sigma switching clock
DEFICIT_CHAINS = 200_000
DEFICIT_SEED = 20190607
DEFICIT_MAX_JUMPS = 64
DEFICIT_TOLERANCE = 1e-3

# Perturbation baseline
DEFAULT_PERTURBATION_SIGMA = 0.1

# Branching estimators
DEFAULT_MAX_DEPTH = 50
MAX_PARTICLES = 1_000_000

# Monte Carlo harness
DEFAULT_SEED = 20190601
DEFAULT_SAMPLES = 10_000
DEFAULT_REPEATS = 1
DEFAULT_CONFIDENCE = 0.90
CHUNK_SIZE = 4096

# Workers
THREADS_ENV_VAR = "REGIME_MC_THREADS"
DEFAULT_EXECUTOR = "process"

# Numerical checks
DERIVATIVE_STEP = 1e-6
SECOND_DERIVATIVE_STEP = 1e-4
RESIDUAL_STEP = 1e-5
RESIDUAL_TOLERANCE = 1e-4
RESIDUAL_GRID = 50
QUADRATURE_TOLERANCE = 1e-12
UNBOUNDED_GROWTH_FACTOR = 2.0
LIPSCHITZ_SAMPLES = 200

# Variance diagnostics
VARIANCE_DRIFT_TOLERANCE = 0.20
MAX_SAMPLE_SHARE = 0.10
VARIANCE_CHECK_MIN_SAMPLES = 1000
PREFIX_FRACTION = 0.10

# CSV output
CSV_FLOAT_FORMAT = "%.17g"
CSV_LIST_SEPARATOR = ";"

# Vectorised sampling: samples per random block
STREAM_BLOCK = 1024

# File paths
OUTPUT_DIRECTORY = os.environ.get("REGIME_MC_OUTPUT", "results")


def default_worker_count():
    """Worker count from the environment, 1 when unset or malformed"""
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    try:
        count = int(raw)
    except ValueError:
        return 1
    return max(count, 1)
