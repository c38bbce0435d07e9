import numpy as np
import pytest

from nahmpole import first_integral_check, invert_by_bisection, solve_mikhaylov_ode
from nahmpole.errors import DomainError


@pytest.fixture(scope="module")
def sol():
    return solve_mikhaylov_ode(tol=1e-10)


def test_tolerance_validation():
    with pytest.raises(DomainError, match="tolerance out of range"):
        solve_mikhaylov_ode(tol=1e-3)
    with pytest.raises(DomainError):
        solve_mikhaylov_ode(tol=1e-15)


def test_quadrature_schemes_agree_at_one(sol):
    lo, hi = sol.u1_schemes
    assert abs(hi - lo) <= 1e-8
    assert sol.u_at(1.0) == pytest.approx(hi, abs=2e-8)


def test_near_boundary_product_profile(sol):
    # u(y) + log y -> 0 at the wall
    y = 1e-3
    assert abs(sol.u_at(y) + np.log(y)) <= 1e-3
    y = 1e-5
    assert abs(sol.u_at(y) + np.log(y)) <= 1e-4


def test_far_field_rate(sol):
    assert sol.far_rate == pytest.approx(np.sqrt(2.0), rel=0.01)
    assert sol.far_C > 0


def test_first_integral_against_independent_ivp(sol):
    # (u')^2 = e^{2u} - 2u - 1 holds along an independently integrated branch
    max_gap, defect = first_integral_check(sol)
    assert max_gap <= 1e-6
    assert defect <= 1e-6


def test_solution_monotone_decreasing_and_positive(sol):
    y = np.linspace(1e-3, 12.0, 500)
    u = sol.u_at(y)
    assert np.all(np.diff(u) < 0)
    assert np.all(u > 0)


def test_derivative_matches_first_integral(sol):
    y = np.array([0.05, 0.3, 1.0, 2.5])
    u = sol.u_at(y)
    du = sol.du_at(y)
    rhs = np.expm1(2 * u) - 2 * u
    assert np.allclose(du ** 2, rhs, rtol=1e-7, atol=1e-9)
    assert np.all(du < 0)


def test_bisection_inversion_cross_check(sol):
    # independent per-point quadrature inversion agrees with the table
    for y_target in (0.2, 1.0, 3.0):
        u_star = invert_by_bisection(y_target, tol=1e-12)
        assert sol.u_at(y_target) == pytest.approx(u_star, abs=5e-9)


def test_scheme_gap_reported(sol):
    assert sol.scheme_gap <= 1e-10
    assert sol.tol == 1e-10


def test_interpolant_spans_clamp_regions(sol):
    # evaluation well below and above the table falls back to asymptotics
    assert sol.u_at(1e-9) == pytest.approx(-np.log(1e-9), rel=1e-4)
    big = sol.u_at(40.0)
    assert 0 < big < 1e-5
