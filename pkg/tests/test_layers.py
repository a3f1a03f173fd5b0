import math

import numpy as np
import pytest

from visclimit.errors import MismatchError, ParameterDomainError
from visclimit.layers import (
    core_identity_residual,
    default_K,
    edge_jumps,
    layer_error,
    layer_spec,
    log_nu,
    matched_profile,
    tanh_core,
)
from visclimit.polyparams import Coeffs, eval_poly
from visclimit.riccati import solve_interior


@pytest.fixture(scope="module")
def c():
    return Coeffs(c1=1.0, c2=1.0, c3=0.0)


def test_log_nu_is_clamped():
    assert log_nu(1.0) == 1.0
    assert log_nu(0.9) == 1.0
    assert log_nu(1e-3) == pytest.approx(math.log(1e3))


def test_spec_fields(c):
    spec = layer_spec(0.01, c, 0.0)
    assert spec.amplitude == pytest.approx(2.0)
    assert spec.core_scale == pytest.approx(2.0 / (2 * 0.01))
    assert spec.window_halfwidth == pytest.approx(spec.K * 0.01 * math.log(100.0))
    lo, hi = spec.window
    assert lo == pytest.approx(-hi)


def test_default_K_floor_and_condition(c):
    K = default_K(0.01, c, 0.0)
    assert K >= 4.0
    half = K * 0.01 * log_nu(0.01)
    xs = np.linspace(-half, half, 101)
    assert K * math.sqrt(2 * float(np.min(eval_poly(c, xs)))) >= 2.0 - 1e-12


def test_tanh_core_solves_frozen_equation(rng, c):
    for _ in range(20):
        nu = float(10 ** rng.uniform(-3, -1))
        x_k = float(rng.uniform(-0.8, 0.8))
        spec = layer_spec(nu, c, x_k)
        xs = x_k + np.linspace(-5, 5, 41) / spec.core_scale
        assert np.max(core_identity_residual(spec, xs)) <= 1e-8 * (1 + spec.amplitude ** 2)


def test_tanh_core_vanishes_at_centre(c):
    spec = layer_spec(0.01, c, 0.3)
    assert tanh_core(spec, 0.3) == 0.0


def test_matched_profile_outside_window(c):
    spec = layer_spec(0.01, c, 0.0)
    assert matched_profile(spec, -0.9) == pytest.approx(-2.0)
    assert matched_profile(spec, 0.9) == pytest.approx(2.0)
    assert matched_profile(spec, 0.0) == 0.0


def test_edge_jumps_are_small(c):
    spec = layer_spec(0.01, c, 0.0)
    left, right = edge_jumps(spec)
    assert left < 1e-3 and right < 1e-3


def test_layer_spec_preconditions(c):
    with pytest.raises(ParameterDomainError):
        layer_spec(0.01, c, 1.0)
    with pytest.raises(ParameterDomainError):
        layer_spec(0.0, c, 0.0)
    with pytest.raises(ParameterDomainError):
        layer_spec(0.01, Coeffs(c1=25 / 9, c2=1 / 9, c3=-2.0), 2 / 3)


def test_layer_error_requires_matching_profile(c, light_settings):
    p = solve_interior(0.05, c, 0.0, settings=light_settings)
    with pytest.raises(MismatchError):
        layer_error(p, layer_spec(0.05, c, 0.1))
    with pytest.raises(MismatchError):
        layer_error(p, layer_spec(0.04, c, 0.0))
    assert layer_error(p, layer_spec(0.05, c, 0.0)) < 0.5


@pytest.mark.slow
def test_layer_error_scaling(c):
    e_coarse = layer_error(solve_interior(1e-2, c, 0.0), layer_spec(1e-2, c, 0.0))
    e_fine = layer_error(solve_interior(1e-3, c, 0.0), layer_spec(1e-3, c, 0.0))
    predicted = e_coarse * (1e-3 * math.log(1e-3) ** 2) / (1e-2 * math.log(1e-2) ** 2)
    assert e_fine <= 4.0 * predicted
