import math

import numpy as np
import pytest

from visclimit.errors import ParameterDomainError, RegionError, UsageError
from visclimit.polyparams import (
    Coeffs,
    RegimeKind,
    c3_bar,
    c3_star,
    classify,
    eval_poly,
    from_monomial,
    in_J,
    in_interior_J0,
    in_partial_prime_J0,
    poly_deriv,
    poly_min,
    tau,
    to_monomial,
)


def test_endpoint_values_are_exact():
    c = Coeffs(c1=0.3, c2=1.7, c3=-0.4)
    assert eval_poly(c, -1.0) == 2 * c.c1
    assert eval_poly(c, 1.0) == 2 * c.c2
    assert eval_poly(c, 0.0) == pytest.approx(c.c1 + c.c2 + c.c3)


def test_eval_poly_rejects_points_outside_interval():
    with pytest.raises(ParameterDomainError):
        eval_poly(Coeffs(c1=1, c2=1, c3=0), 1.5)
    with pytest.raises(ParameterDomainError):
        eval_poly(Coeffs(c1=1, c2=1, c3=0), np.array([0.0, -1.01]))


def test_poly_deriv_matches_finite_difference(rng):
    for _ in range(20):
        c = Coeffs(c1=rng.uniform(-2, 2), c2=rng.uniform(-2, 2), c3=rng.uniform(-2, 2))
        x = rng.uniform(-0.9, 0.9)
        h = 1e-6
        fd = (eval_poly(c, x + h) - eval_poly(c, x - h)) / (2 * h)
        assert poly_deriv(c, x) == pytest.approx(fd, abs=1e-7)


def test_monomial_conversion_of_illustration_polynomial():
    c = from_monomial(8 / 9, -8 / 3, 2.0)
    assert c.as_tuple() == pytest.approx((25 / 9, 1 / 9, -2.0), abs=1e-14)
    assert to_monomial(c) == pytest.approx((8 / 9, -8 / 3, 2.0), abs=1e-14)


def test_c3_bar_reduces_to_c3_star_at_zero_viscosity():
    assert c3_bar(25 / 9, 1 / 9, 0.0) == pytest.approx(c3_star(25 / 9, 1 / 9))
    assert c3_star(25 / 9, 1 / 9) == pytest.approx(-2.0)
    assert c3_bar(0.0, 0.0, 0.1) == pytest.approx(-4 * 0.1 ** 2)


def test_c3_bar_rejects_negative_radicands():
    with pytest.raises(ParameterDomainError):
        c3_bar(-1.0, 0.0, 0.1)


@pytest.mark.parametrize(
    "c, kind, alpha, kappa",
    [
        ((1.0, 1.0, 0.0), RegimeKind.INTERIOR_J0, 1.0, 1),
        ((25 / 9, 1 / 9, -2.0), RegimeKind.DOUBLE_ROOT, 2 / 3, 0),
        ((0.0, 1.0, 0.0), RegimeKind.EDGE_C1_ZERO, 0.5, 0),
        ((1.0, 0.0, 0.0), RegimeKind.EDGE_C2_ZERO, 0.5, 0),
        ((0.0, 0.0, 1.0), RegimeKind.EDGE_BOTH_ZERO, 0.5, 0),
        ((-1.0, 1.0, 0.0), RegimeKind.OUTSIDE_J0, None, None),
        ((1.0, 1.0, -3.0), RegimeKind.OUTSIDE_J0, None, None),
    ],
)
def test_classify(c, kind, alpha, kappa):
    regime = classify(Coeffs(c1=c[0], c2=c[1], c3=c[2]))
    assert regime.kind == kind
    if alpha is None:
        assert regime.alpha is None
    else:
        assert regime.alpha == pytest.approx(alpha)
        assert regime.kappa == kappa


def test_double_root_location():
    regime = classify(from_monomial(8 / 9, -8 / 3, 2.0))
    assert regime.xbar == pytest.approx(2 / 3)
    assert str(regime.alpha_fraction()) == "2/3"


def test_classify_rejects_zero_vector():
    with pytest.raises(ParameterDomainError):
        classify(Coeffs(c1=0, c2=0, c3=0))


def _random_coeffs(rng, count):
    # a third of the draws sit on the faces c1 = 0 or c2 = 0 where the boundary predicate matters
    for k in range(count):
        c1, c2, c3 = rng.uniform(-5.0, 5.0, size=3)
        if k % 3 == 1:
            c1 = 0.0 if k % 2 else c1
            c2 = c2 if k % 2 else 0.0
        elif k % 6 == 2:
            c1 = c2 = 0.0
        yield Coeffs(c1=c1, c2=c2, c3=c3)


def _oracle_grid(closed):
    # refined towards both ends, where the faces c1 = 0 and c2 = 0 hide their negative dips
    offsets = np.geomspace(1e-8, 1e-2, 120)
    inner = np.concatenate([-1.0 + offsets, np.linspace(-1.0, 1.0, 10001)[1:-1], 1.0 - offsets])
    return np.concatenate([[-1.0], inner, [1.0]]) if closed else inner


def test_J0_membership_agrees_with_grid_minimum(rng):
    xs = _oracle_grid(closed=True)
    disagreements = []
    for c in _random_coeffs(rng, 10000):
        if in_J(0.0, c) != (float(np.min(eval_poly(c, xs))) >= -1e-9):
            disagreements.append(c.as_tuple())
    assert not disagreements, f"membership differs from grid minimum for {disagreements[:3]}"


@pytest.mark.slow
def test_interior_and_boundary_predicates_agree_with_grid_minimum(rng):
    closed, opened = _oracle_grid(closed=True), _oracle_grid(closed=False)
    disagreements = []
    for c in _random_coeffs(rng, 10000):
        positive_closed = float(np.min(eval_poly(c, closed))) > 0
        positive_open = float(np.min(eval_poly(c, opened))) > 0
        if in_interior_J0(c) != positive_closed:
            disagreements.append(("interior", c.as_tuple()))
        if (in_interior_J0(c) or in_partial_prime_J0(c)) != positive_open:
            disagreements.append(("open", c.as_tuple()))
    assert not disagreements, disagreements[:3]


def test_poly_min_matches_grid(rng):
    xs = np.linspace(-1.0, 1.0, 20001)
    for _ in range(50):
        c = Coeffs(c1=rng.uniform(-2, 2), c2=rng.uniform(-2, 2), c3=rng.uniform(-3, 3))
        _, value = poly_min(c)
        assert value == pytest.approx(float(np.min(eval_poly(c, xs))), abs=1e-7), c


def test_interior_and_boundary_of_J0():
    assert in_interior_J0(Coeffs(c1=1, c2=1, c3=0))
    assert not in_interior_J0(Coeffs(c1=0, c2=1, c3=0))
    assert in_partial_prime_J0(Coeffs(c1=0, c2=1, c3=0))
    assert in_partial_prime_J0(Coeffs(c1=1, c2=0, c3=-0.5))
    assert not in_partial_prime_J0(Coeffs(c1=1, c2=0, c3=-0.6))
    assert not in_partial_prime_J0(Coeffs(c1=1, c2=1, c3=0))


def test_tau_solves_endpoint_quadratics(rng):
    for _ in range(30):
        nu = rng.uniform(1e-3, 1.0)
        c = Coeffs(c1=rng.uniform(0, 5), c2=rng.uniform(0, 5), c3=rng.uniform(0, 2))
        t1, t2, t1p, t2p = tau(nu, c)
        for U in (t1, t2):
            assert -2 * nu * U + 0.5 * U * U == pytest.approx(2 * c.c1, abs=1e-9)
        for U in (t1p, t2p):
            assert 2 * nu * U + 0.5 * U * U == pytest.approx(2 * c.c2, abs=1e-9)
        assert t1 * t2 == pytest.approx(-4 * c.c1, abs=1e-9)
        assert t2 - t1 == pytest.approx(4 * math.sqrt(nu * nu + c.c1))


def test_tau_outside_region():
    with pytest.raises(RegionError):
        tau(0.1, Coeffs(c1=1, c2=1, c3=-10))


@pytest.mark.parametrize("text", ["25/9,1,0", "1, 1,0", "1,1", "a,b,c", "1,1,inf"])
def test_coeffs_from_cli_rejects_malformed(text):
    with pytest.raises(UsageError):
        Coeffs.from_cli(text)


def test_coeffs_cli_round_trip():
    c = Coeffs(c1=25 / 9, c2=1 / 9, c3=-2.0)
    assert Coeffs.from_cli(c.to_cli()) == c
