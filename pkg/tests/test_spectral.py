import numpy as np
import pytest

from nahmpole import Spectrum, eigen_J, indicial_boundary, indicial_radial
from nahmpole.errors import CoordinateSingularity, DomainError, SolveError
from nahmpole.spectral import eval_T


@pytest.fixture(scope="module")
def spec0():
    return eigen_J(0)


def test_ground_state_value(spec0):
    # analytic anchor: mu = sin^2 psi with eigenvalue 6
    assert spec0.eigenvalues[0] == pytest.approx(6.0, abs=1e-4)


def test_ground_state_n1_value():
    # second closed-form case: for n=1 the potential is 2 cot^2 psi and
    # sin^2 psi is again an eigenfunction, now with eigenvalue 4
    sp = eigen_J(1)
    assert sp.eigenvalues[0] == pytest.approx(4.0, abs=1e-4)


def test_ground_state_profile(spec0):
    # cos-weight normalization of sin^2 is sqrt(5) sin^2
    psi = spec0.psi
    want = np.sqrt(5.0) * np.sin(psi) ** 2
    got = spec0.eigenfunctions[0]
    assert np.max(np.abs(got - want)) < 2e-3
    assert np.all(got >= 0)


def test_mu0_interpolant(spec0):
    psi = np.array([0.3, 0.9, 1.3])
    want = np.sqrt(5.0) * np.sin(psi) ** 2
    assert np.allclose(spec0.mu0(psi), want, atol=2e-3)
    # pinned zero at the pole face and clipping outside the closed quadrant
    assert spec0.mu0(0.0) == 0.0
    assert spec0.mu0(-0.5) == 0.0
    assert spec0.mu0(2.0) == pytest.approx(spec0.mu0(np.pi / 2))


def test_quadratic_vanishing_at_pole_face(spec0):
    # mu0 ~ c psi^2: the ratio mu0/psi^2 stabilizes as psi -> 0
    r1 = spec0.mu0(1e-3) / 1e-6
    r2 = spec0.mu0(2e-3) / 4e-6
    assert r1 == pytest.approx(r2, rel=0.02)
    assert r1 == pytest.approx(np.sqrt(5.0), rel=0.02)


def test_flux_identity_continuum():
    # J sin^2 = 6 sin^2 for n=0, checked by a fresh finite difference of the
    # continuum operator at scattered interior points
    h = 1e-6
    for psi in (0.4, 0.8, 1.2):
        c = np.cos
        mu = lambda p: np.sin(p) ** 2
        flux = lambda p: c(p) * 2 * np.sin(p) * np.cos(p)
        dflux = (flux(psi + h) - flux(psi - h)) / (2 * h)
        val = -dflux / c(psi) + eval_T(0, psi) * mu(psi)
        assert val == pytest.approx(6.0 * mu(psi), rel=1e-8)


def test_spectrum_is_ordered_and_orthonormal(spec0):
    lam = np.array(spec0.eigenvalues)
    assert np.all(np.diff(lam) > 0)
    assert spec0.orthogonality_defect() < 1e-8
    assert isinstance(spec0, Spectrum)


def test_eigenvalue_tower_n0(spec0):
    # the whole n=0 tower is polynomial: lambda_k = (2k+2)(2k+3)
    for k in range(4):
        want = (2 * k + 2) * (2 * k + 3)
        assert spec0.eigenvalues[k] == pytest.approx(want, abs=2e-3)


def test_extrapolated_close_to_raw(spec0):
    raw = np.array(spec0.eigenvalues_raw)
    ex = np.array(spec0.eigenvalues)
    rel = np.abs(raw - ex) / ex
    assert np.max(rel) < 1e-4
    assert np.max(rel) > 0


def test_angular_momentum_raises_ground_state(spec0):
    sp1 = eigen_J(0, m=1)
    assert sp1.eigenvalues[0] > spec0.eigenvalues[0]
    sp2 = eigen_J(0, m=2, count=2)
    assert sp2.eigenvalues[0] > sp1.eigenvalues[0]


def test_displayed_potential_differs():
    sp = eigen_J(0, displayed_potential=True, count=1)
    assert abs(sp.eigenvalues[0] - 6.0) > 0.5


def test_indicial_radial_values():
    assert indicial_radial(6.0) == pytest.approx((2.0, -3.0))
    dp, dm = indicial_radial(0.0)
    assert (dp, dm) == pytest.approx((0.0, -1.0))
    with pytest.raises(DomainError):
        indicial_radial(-0.3)


def test_indicial_boundary_pair():
    assert indicial_boundary() == (2, -1)


def test_delta_plus_of_ground_state(spec0):
    assert spec0.delta_plus() == pytest.approx(2.0, abs=1e-4)
    sp1 = eigen_J(1, count=1)
    assert sp1.delta_plus() == pytest.approx(-0.5 + 0.5 * np.sqrt(17.0), abs=1e-4)


def test_potential_validation_and_shape():
    with pytest.raises(CoordinateSingularity):
        eval_T(0, 0.0)
    psi = np.linspace(0.1, np.pi / 2, 20)
    T = eval_T(2, psi)
    assert T.shape == psi.shape
    assert np.all(T > 0)
    # pole-face strength is order independent: psi^2 T -> 2
    assert 1e-6 ** 2 * eval_T(3, 1e-6) == pytest.approx(2.0, rel=1e-5)


def test_argument_validation():
    with pytest.raises(DomainError):
        eigen_J(0, count=0)
    with pytest.raises(DomainError):
        eigen_J(0, count=30)
    with pytest.raises(DomainError):
        eigen_J(0, resolution=32)


def test_nonconvergence_reported():
    with pytest.raises(SolveError, match="non-convergent"):
        eigen_J(0, resolution=64, _tol=1e-14)
