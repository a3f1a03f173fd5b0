import math

import numpy as np
import pytest

from visclimit.errors import (
    BracketError,
    DegenerateEndpointError,
    NonconvergenceError,
    ParameterDomainError,
    RegionError,
)
from visclimit.polyparams import Coeffs, c3_bar, c3_star, in_interior_J0, tau
from visclimit.riccati import (
    Branch,
    Side,
    apriori_bound,
    chebyshev_grid,
    closed_form_star,
    endpoint_derivative,
    rescale_by_norm,
    rescale_by_nu,
    residual,
    solve,
    solve_anchored,
    solve_interior,
    solve_lower,
    solve_upper,
    start_gap,
)
from visclimit.settings import LabSettings


def test_chebyshev_grid_shape():
    grid = chebyshev_grid(11)
    assert grid[0] == -1.0 and grid[-1] == 1.0
    assert grid[5] == 0.0
    assert np.all(np.diff(grid) > 0)


def test_start_gap_bounds():
    assert start_gap(1.0) == 1e-6
    assert start_gap(1e-3) == 1e-8
    assert start_gap(0.05) == pytest.approx(2.5e-7)


def test_affine_solution_example():
    p = closed_form_star(0.1, 0.0, 0.0)
    assert np.allclose(p.values, -0.4 * p.grid, atol=1e-15)
    assert p(0.0) == pytest.approx(0.0, abs=1e-15)
    assert p.slope(0.3) == pytest.approx(-0.4)
    assert p.residual_sup < 1e-12


def test_branch_labels_round_trip():
    for branch in (Branch.upper(), Branch.lower(), Branch.star(), Branch.interior(0.25),
                   Branch.anchored(-0.5, 1.25)):
        assert Branch.from_label(branch.label()) == branch


def test_extremal_endpoint_values_are_tau(upper_symmetric, lower_symmetric, symmetric_c):
    t1, t2, t1p, t2p = tau(0.05, symmetric_c)
    assert upper_symmetric.values[0] == t2
    assert lower_symmetric.values[-1] == t1p
    assert upper_symmetric.values[-1] == t2p
    assert lower_symmetric.values[0] == t1


def test_far_endpoint_defect_within_tolerance(upper_symmetric, lower_symmetric, symmetric_c, light_settings):
    # the integrated far end has to meet the tangent line through tau on its own
    interior = solve_interior(0.05, symmetric_c, 0.0, settings=light_settings)
    for p in (upper_symmetric, lower_symmetric, interior):
        assert p.endpoint_defect <= light_settings.endpoint_tolerance(p.c.norm()), (p.branch.label(), p.endpoint_defect)


def test_far_endpoint_defect_above_hard_limit(symmetric_c):
    strict = LabSettings(cheb_points=401, endpoint_defect_factor=1e-30)
    with pytest.raises(NonconvergenceError):
        solve_lower(0.05, symmetric_c, settings=strict)


def test_extremal_residuals_below_threshold(upper_symmetric, lower_symmetric, symmetric_c):
    threshold = 1e-6 * (1.0 + symmetric_c.norm())
    for p in (upper_symmetric, lower_symmetric):
        assert p.residual_sup <= threshold
        assert residual(p) == pytest.approx(p.residual_sup)


def test_extremal_signs(upper_symmetric, lower_symmetric):
    inside = upper_symmetric.interior_mask()
    assert np.all(upper_symmetric.values[inside] > 0)
    inside = lower_symmetric.interior_mask()
    assert np.all(lower_symmetric.values[inside] < 0)


def test_reflection_symmetry(upper_symmetric, lower_symmetric):
    xs = chebyshev_grid(401)[1:-1]
    assert np.max(np.abs(upper_symmetric(xs) + lower_symmetric(-xs))) <= 1e-8


def test_apriori_bound_holds(upper_symmetric, lower_symmetric, interior_double_root):
    for p in (upper_symmetric, lower_symmetric, interior_double_root):
        assert p.max_abs() <= apriori_bound(p.c)


def test_interior_solution_has_its_zero(interior_double_root):
    p = interior_double_root
    k = int(np.nonzero(p.grid == 0.0)[0][0])
    assert abs(p.values[k]) <= 1e-9
    assert p.sign_changes(1e-12) == 1
    assert p.zeros(-0.5, 0.5) == pytest.approx([0.0], abs=1e-9)


def test_zeros_between_samples(light_settings):
    c1, c2 = 25 / 9, 1 / 9
    p = solve_upper(0.1, Coeffs(c1=c1, c2=c2, c3=c3_bar(c1, c2, 0.1) + 1e-3), settings=light_settings)
    found = p.zeros()
    assert found
    for z in found:
        assert abs(p(z)) <= 1e-10
    # a window edge between a crossing and its neighbouring samples keeps the crossing
    z = found[-1]
    assert p.zeros(z - 1e-12, 1.0)[0] == pytest.approx(z, abs=1e-12)
    assert p.zeros(-1.0, z + 1e-12)[-1] == pytest.approx(z, abs=1e-12)


def _assert_foliated(nu, c, x_k, settings):
    upper = solve_upper(nu, c, settings=settings)
    lower = solve_lower(nu, c, settings=settings)
    middle = solve_interior(nu, c, x_k, settings=settings)
    xs = chebyshev_grid(settings.cheb_points)[1:-1]
    assert np.max(middle(xs) - upper(xs)) <= 1e-8, (nu, c, x_k)
    assert np.min(middle(xs) - lower(xs)) >= -1e-8, (nu, c, x_k)
    assert np.all(upper(xs) > 0) and np.all(lower(xs) < 0), (nu, c)


def test_foliation_between_extremal_solutions(rng, light_settings):
    for _ in range(3):
        c = Coeffs(c1=rng.uniform(0.2, 3.0), c2=rng.uniform(0.2, 3.0), c3=rng.uniform(0.0, 1.0))
        _assert_foliated(0.1, c, float(rng.uniform(-0.5, 0.5)), light_settings)


@pytest.mark.parametrize("c, x_k", [
    (Coeffs(c1=2.608, c2=4.757, c3=-0.140), -0.301),
    (Coeffs(c1=3.448, c2=3.957, c3=-0.021), -0.494),
])
def test_foliation_where_interior_branch_merges_with_upper(c, x_k, light_settings):
    _assert_foliated(0.01, c, x_k, light_settings)


@pytest.mark.slow
@pytest.mark.parametrize("nu", [0.1, 0.01])
def test_foliation_random_batch(rng, light_settings, nu):
    for _ in range(20):
        c1, c2 = float(rng.uniform(0.1, 5.0)), float(rng.uniform(0.1, 5.0))
        c = Coeffs(c1=c1, c2=c2, c3=float(rng.uniform(c3_star(c1, c2) + 0.5, 1.0)))
        assert in_interior_J0(c)
        _assert_foliated(nu, c, float(rng.uniform(-0.5, 0.5)), light_settings)


def test_degenerate_parameters_give_affine_solution(rng, light_settings):
    for _ in range(3):
        nu = float(rng.uniform(0.05, 1.0))
        c1, c2 = float(rng.uniform(0, 10)), float(rng.uniform(0, 10))
        c = Coeffs(c1=c1, c2=c2, c3=c3_bar(c1, c2, nu))
        star = closed_form_star(nu, c1, c2)
        for p in (solve_upper(nu, c, settings=light_settings), solve_lower(nu, c, settings=light_settings)):
            gap = np.max(np.abs(p.values - star(p.grid)))
            assert gap <= 1e-8, (nu, c1, c2, gap)


@pytest.mark.slow
def test_degenerate_parameters_random_batch(rng):
    for _ in range(50):
        nu = float(10 ** rng.uniform(-3, 0))
        c1, c2 = float(rng.uniform(0, 10)), float(rng.uniform(0, 10))
        c = Coeffs(c1=c1, c2=c2, c3=c3_bar(c1, c2, nu))
        star = closed_form_star(nu, c1, c2)
        for p in (solve_upper(nu, c), solve_lower(nu, c)):
            assert np.max(np.abs(p.values - star(p.grid))) <= 1e-8, (nu, c1, c2)


def test_anchored_solution_inside_envelope(symmetric_c, upper_symmetric, lower_symmetric, light_settings):
    x_a = -0.3
    U_a = 0.5 * (upper_symmetric(x_a) + lower_symmetric(x_a))
    p = solve_anchored(0.05, symmetric_c, x_a, U_a, settings=light_settings)
    assert p(x_a) == pytest.approx(U_a, abs=1e-9)
    xs = p.grid[p.interior_mask()]
    assert np.all(p.values[p.interior_mask()] <= upper_symmetric(xs) + 1e-7)
    assert np.all(p.values[p.interior_mask()] >= lower_symmetric(xs) - 1e-7)
    assert p.residual_sup <= 1e-6 * (1.0 + symmetric_c.norm())


def test_anchored_solution_near_left_end_with_c1_zero(light_settings):
    c = Coeffs(c1=0.0, c2=1.0, c3=0.0)
    nu = 0.1
    upper = solve_upper(nu, c, settings=light_settings)
    lower = solve_lower(nu, c, settings=light_settings)
    x_a = -0.95
    U_a = 0.5 * (upper(x_a) + lower(x_a))
    p = solve(nu, c, Branch.anchored(x_a, U_a), settings=light_settings)
    xs = p.grid[p.interior_mask()]
    assert np.all(p.values[p.interior_mask()] <= upper(xs) + 1e-7)
    assert np.all(p.values[p.interior_mask()] >= lower(xs) - 1e-7)
    assert p.residual_sup <= 1e-6 * (1.0 + c.norm())


def test_anchored_value_outside_envelope(symmetric_c, upper_symmetric, light_settings):
    with pytest.raises(BracketError):
        solve_anchored(0.05, symmetric_c, 0.0, upper_symmetric(0.0) + 1.0, settings=light_settings)


def test_rescalings_keep_residual_small(upper_symmetric):
    threshold = 1e-5
    scaled = rescale_by_norm(upper_symmetric, 4.0)
    assert scaled.nu == pytest.approx(0.025)
    assert scaled.c.as_tuple() == pytest.approx((0.25, 0.25, 0.0))
    assert scaled.residual_sup <= threshold
    unit = rescale_by_nu(upper_symmetric)
    assert unit.nu == 1.0
    assert unit.c.c1 == pytest.approx(400.0)
    assert unit.residual_sup / 400.0 <= threshold



def test_rescale_by_norm_matches_direct_solve(upper_symmetric, symmetric_c, light_settings):
    lam = symmetric_c.norm()
    scaled = rescale_by_norm(upper_symmetric, lam)
    direct = solve_upper(0.05 / math.sqrt(lam), symmetric_c.scaled(1.0 / lam), settings=light_settings)
    assert scaled.nu == pytest.approx(direct.nu, rel=1e-15)
    xs = chebyshev_grid(401)[1:-1]
    assert np.max(np.abs(scaled(xs) - direct(xs))) <= 1e-8


def test_region_errors():
    with pytest.raises(RegionError):
        solve_upper(0.1, Coeffs(c1=1.0, c2=1.0, c3=-10.0))
    with pytest.raises(ParameterDomainError):
        solve_upper(0.0, Coeffs(c1=1.0, c2=1.0, c3=0.0))
    with pytest.raises(ParameterDomainError):
        solve_upper(0.1, Coeffs(c1=0.0, c2=0.0, c3=0.0))
    with pytest.raises(ParameterDomainError):
        solve_interior(0.1, Coeffs(c1=1.0, c2=1.0, c3=0.0), 1.0)


def test_endpoint_derivative_formula():
    c = Coeffs(c1=1.0, c2=1.0, c3=0.0)
    _, t2, _, _ = tau(0.1, c)
    slope = endpoint_derivative(0.1, c, Side.LEFT, t2)
    assert slope == pytest.approx((0.0 - 0.2 * t2) / t2)
    with pytest.raises(DegenerateEndpointError):
        endpoint_derivative(0.1, c, Side.RIGHT, 0.1)


def test_upper_endpoint_slope_matches_interior_slope(upper_symmetric):
    # the one-sided slope at x = -1 continues the samples next to it
    p = upper_symmetric
    fd = (p.values[1] - p.values[0]) / (p.grid[1] - p.grid[0])
    assert p.deriv[0] == pytest.approx(fd, rel=1e-2, abs=1e-3)
    assert math.isfinite(p.deriv[-1])
