import numpy as np
import pytest

from nahmpole import eval_Sn, eval_Un, eval_Un_grad, eval_Un_lap, eval_model_phi
from nahmpole.errors import CoordinateSingularity, DomainError
from nahmpole.models import (
    ModelSolution,
    eval_Un_direct,
    eval_sinh_family,
    model_solution,
    un_form_delta,
)


def test_Sn_frozen_values():
    # S_n(psi) = sum_k (1+sin)^{n-k} (1-sin)^k
    assert eval_Sn(2, np.pi / 2) == pytest.approx(4.0)
    assert eval_Sn(2, 0.0) == pytest.approx(3.0)
    assert eval_Sn(0, 0.7) == 1.0
    assert eval_Sn(1, np.pi / 2) == pytest.approx(2.0)


def test_Sn_matches_geometric_sum():
    rng = np.random.default_rng(3)
    for n in range(5):
        psi = rng.uniform(0, np.pi / 2, size=50)
        s = np.sin(psi)
        direct = sum((1 + s) ** (n - k) * (1 - s) ** k for k in range(n + 1))
        assert np.allclose(eval_Sn(n, psi), direct, rtol=1e-13)


def test_U1_frozen_value():
    assert eval_Un(1, 1.0, 1.0) == pytest.approx(-0.5 * np.log(2.0), abs=1e-14)


def test_Un_axis_value():
    # on the axis r = 0 the profile is -(n+1) log y + log((n+1)/2^n)
    y = 0.37
    for n in range(4):
        want = -(n + 1) * np.log(y) + np.log((n + 1.0) / 2.0 ** n)
        assert eval_Un(n, 0.0, y) == pytest.approx(want, rel=1e-13)


def test_two_forms_agree():
    rng = np.random.default_rng(11)
    r = 10.0 ** rng.uniform(-3, 2, size=10000)
    y = 10.0 ** rng.uniform(-3, 2, size=10000)
    for n in range(5):
        assert float(np.max(un_form_delta(n, r, y))) < 1e-10


def test_direct_form_overflow_guard():
    # the decomposed form stays finite where the direct form overflows
    val = eval_Un(3, 1e200, 1e200)
    assert np.isfinite(val)
    with np.errstate(over="ignore", invalid="ignore"):
        assert not np.isfinite(eval_Un_direct(3, 1e200, 1e200))


def _central_second(f, x, h):
    return (f(x + h) - 2 * f(x) + f(x - h)) / h ** 2


def test_gradient_against_central_differences():
    h = 1e-5
    for n, r, y in [(0, 0.4, 0.9), (1, 1.3, 0.2), (2, 0.7, 0.31), (3, 2.0, 1.5)]:
        ur, uy = eval_Un_grad(n, r, y)
        fr = (eval_Un(n, r + h, y) - eval_Un(n, r - h, y)) / (2 * h)
        fy = (eval_Un(n, r, y + h) - eval_Un(n, r, y - h)) / (2 * h)
        assert ur == pytest.approx(fr, rel=2e-8, abs=2e-8)
        assert uy == pytest.approx(fy, rel=2e-8, abs=2e-8)


def test_laplacian_identity_matches_stencil():
    # closed form: (lap) U_n = r^{2n} e^{2 U_n}, checked against differences
    h = 1e-4
    for n, r, y in [(0, 0.5, 0.8), (1, 1.1, 0.6), (2, 0.7, 0.31)]:
        lap = _central_second(lambda rr: eval_Un(n, rr, y), r, h) \
            + _central_second(lambda yy: eval_Un(n, r, yy), y, h) \
            + (eval_Un(n, r + h, y) - eval_Un(n, r - h, y)) / (2 * h * r)
        want = eval_Un_lap(n, r, y)
        assert want == pytest.approx(r ** (2 * n) * np.exp(2 * eval_Un(n, r, y)),
                                     rel=1e-12)
        assert lap == pytest.approx(want, rel=1e-6)


def test_laplacian_identity_on_axis():
    # r = 0: exp(2 U_n) carries r^{2n}; only n = 0 has a nonzero limit
    assert eval_Un_lap(0, 0.0, 0.5) == pytest.approx(np.exp(2 * eval_Un(0, 0.0, 0.5)))
    assert eval_Un_lap(2, 0.0, 0.5) == 0.0


def test_model_phi_nahm_pole_case():
    # n = 0 on the axis is the plain product profile: |phi_z| = 1/y
    mag, diag = eval_model_phi(0, 2.0, np.pi / 2)
    assert mag == pytest.approx(1.0 / 2.0, rel=1e-12)
    assert diag == pytest.approx(1.0 / (2 * 2.0), rel=1e-12)


def test_model_phi_matches_derivative_route():
    # the diagonal entry is -dU_n/dy / 2 evaluated in polar form
    for n, R, psi in [(1, 1.3, 0.7), (2, 0.9, 0.4), (3, 2.2, 1.1)]:
        r, y = R * np.cos(psi), R * np.sin(psi)
        mag, diag = eval_model_phi(n, R, psi)
        _, uy = eval_Un_grad(n, r, y)
        assert diag == pytest.approx(-0.5 * uy, rel=1e-11)
        want_mag = (n + 1) * np.cos(psi) ** n / (R * np.sin(psi) * eval_Sn(n, psi))
        assert mag == pytest.approx(want_mag, rel=1e-12)


def test_model_phi_boundary_singularity():
    with pytest.raises(CoordinateSingularity):
        eval_model_phi(1, 1.0, 0.0)


def test_sinh_family_solves_its_equation():
    # u = log(C / sinh(C y)) has u'' = e^{2u} exactly; h balances the
    # truncation of the stencil against roundoff amplified by 1/h^2
    h = 1e-4
    for C, y in [(0.5, 0.8), (1.0, 2.0), (2.0, 0.3)]:
        upp = _central_second(lambda t: eval_sinh_family(C, t), y, h)
        assert upp == pytest.approx(np.exp(2 * eval_sinh_family(C, y)), rel=1e-5)


def test_sinh_family_small_C_limit():
    # C -> 0 recovers the product profile -log y
    y = np.array([0.2, 1.0, 3.0])
    assert np.allclose(eval_sinh_family(1e-8, y), -np.log(y), atol=1e-7)


def test_sinh_family_large_argument_stable():
    assert np.isfinite(eval_sinh_family(2.0, 500.0))


def test_model_solution_wrapper():
    m = model_solution(2)
    assert isinstance(m, ModelSolution)
    assert m.n == 2
    r, y = 0.6, 0.45
    assert m.eval_rz(r, y) == pytest.approx(eval_Un(2, r, y))
    R = np.hypot(r, y)
    psi = np.arctan2(y, r)
    assert m.eval_Rpsi(R, psi) == pytest.approx(eval_Un(2, r, y), rel=1e-13)
    assert m.consistency_delta(r, y) < 1e-12


def test_model_solution_validates_order():
    with pytest.raises(DomainError):
        model_solution(-1)
