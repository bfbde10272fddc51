import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)
sys.path.insert(0, os.path.join(ROOT, "src"))

from paths.mesh_path import SigmaSchedule  # noqa: E402
from problems.problem import builtin_problem  # noqa: E402
from sampling.distributions import LifetimeParams, RngStream  # noqa: E402


@pytest.fixture
def params():
    return LifetimeParams()


@pytest.fixture
def schedule():
    return SigmaSchedule()


@pytest.fixture
def linear_problem():
    return builtin_problem("paper-linear")


@pytest.fixture
def nonlinear_problem():
    return builtin_problem("paper-nonlinear")


@pytest.fixture
def calibration_problem():
    return builtin_problem("constant-drift-linear")


@pytest.fixture
def rng():
    return RngStream(12345, 0)
