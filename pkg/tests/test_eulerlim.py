import math

import numpy as np
import pytest

from visclimit.errors import ParameterDomainError, SingularityError
from visclimit.eulerlim import (
    EulerSign,
    SignKind,
    closed_form_pressure,
    euler_field,
    euler_pressure_ode,
    euler_profile,
    euler_slopes,
    euler_values,
)
from visclimit.polyparams import Coeffs, eval_poly


def test_plus_branch_solves_reduced_euler(double_root_c):
    e = euler_profile(double_root_c, EulerSign.plus())
    assert np.max(np.abs(0.5 * e.values ** 2 - eval_poly(double_root_c, e.grid))) < 1e-12
    assert e.nu == 0.0


def test_glued_profile_jump(double_root_c):
    e = euler_profile(double_root_c, EulerSign.glued(0.0))
    assert 0.0 in e.grid
    assert e(-0.5) < 0 < e(0.5)
    assert e.jump() == pytest.approx(2 * math.sqrt(2 * 8 / 9))


def test_double_root_is_flagged(double_root_c):
    e = euler_profile(double_root_c, EulerSign.plus(), grid=np.array([-0.5, 2 / 3, 0.9]))
    assert e.flagged == pytest.approx([2 / 3])
    slopes, flagged = euler_slopes(double_root_c, EulerSign.plus(), np.array([0.5, 2 / 3, 0.8]))
    assert flagged.tolist() == [False, True, False]
    assert slopes[1] == pytest.approx(2.0)
    assert slopes[0] == pytest.approx(-2.0)


def test_smooth_branches_cross_at_double_root(double_root_c):
    xs = np.linspace(-1, 1, 201)
    V = euler_values(double_root_c, EulerSign(kind=SignKind.SMOOTH_PLUS), xs)
    assert np.allclose(V, 2.0 * (xs - 2 / 3))
    assert np.max(np.abs(0.5 * V ** 2 - eval_poly(double_root_c, xs))) < 1e-12
    slopes, _ = euler_slopes(double_root_c, EulerSign(kind=SignKind.SMOOTH_MINUS), xs)
    assert np.allclose(slopes, -2.0)


def test_smooth_branches_need_double_root():
    with pytest.raises(ParameterDomainError):
        euler_values(Coeffs(c1=1, c2=1, c3=0), EulerSign(kind=SignKind.SMOOTH_PLUS), 0.0)


def test_profiles_need_J0():
    with pytest.raises(ParameterDomainError):
        euler_profile(Coeffs(c1=-1, c2=1, c3=0), EulerSign.plus())


def test_sign_labels_round_trip():
    for sign in (EulerSign.plus(), EulerSign.minus(), EulerSign.glued(0.25),
                 EulerSign(kind=SignKind.SMOOTH_MINUS)):
        assert EulerSign.from_label(sign.label()) == sign


def test_closed_form_pressure_example():
    c = Coeffs(c1=1, c2=1, c3=0)
    assert closed_form_pressure(c, math.pi / 2) == pytest.approx(-2.0)
    assert closed_form_pressure(c, math.pi / 2, r=2.0) == pytest.approx(-0.5)


def test_pressure_from_momentum_balance_matches_closed_form(rng):
    c = Coeffs(c1=1.0, c2=2.0, c3=0.5)
    thetas = rng.uniform(0.3, 2.8, 10)
    for sign in (EulerSign.plus(), EulerSign.minus()):
        q = euler_pressure_ode(c, sign, thetas)
        exact = [closed_form_pressure(c, t) for t in thetas]
        assert np.allclose(q, exact, atol=1e-6)


def test_euler_field_values():
    c = Coeffs(c1=1, c2=1, c3=0)
    v_r, v_theta, q = euler_field(c, EulerSign.plus(), math.pi / 2)
    assert v_r == pytest.approx(0.0, abs=1e-15)
    assert v_theta == pytest.approx(2.0)
    assert q == pytest.approx(-2.0)


def test_euler_field_singular_at_root(double_root_c):
    with pytest.raises(SingularityError):
        euler_field(double_root_c, EulerSign.plus(), math.acos(2 / 3))
    with pytest.raises(ParameterDomainError):
        euler_field(double_root_c, EulerSign.plus(), 0.0)
