import numpy as np
import pytest

from visclimit.figures import illustration_coeffs
from visclimit.polyparams import Coeffs
from visclimit.riccati import solve_interior, solve_lower, solve_upper
from visclimit.settings import LabSettings


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def light_settings():
    """Coarser sampling grid for tests that only need a handful of profiles"""
    return LabSettings(cheb_points=401)


@pytest.fixture(scope="session")
def symmetric_c():
    return Coeffs(c1=1.0, c2=1.0, c3=0.0)


@pytest.fixture(scope="session")
def double_root_c():
    return illustration_coeffs()


@pytest.fixture(scope="module")
def upper_symmetric(symmetric_c, light_settings):
    return solve_upper(0.05, symmetric_c, settings=light_settings)


@pytest.fixture(scope="module")
def lower_symmetric(symmetric_c, light_settings):
    return solve_lower(0.05, symmetric_c, settings=light_settings)


@pytest.fixture(scope="module")
def interior_double_root(double_root_c, light_settings):
    return solve_interior(0.05, double_root_c, 0.0, settings=light_settings)
