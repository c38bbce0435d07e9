"""Hemisphere link operator of the knot model and its indicial data.

Linearizing the model equation around U_n and separating off R^delta e^{i m
theta} leaves the operator

    J = -(1/cos psi) d_psi (cos psi d_psi .) + m^2/cos^2 psi + T(psi)

on psi in (0, pi/2] with weight cos psi, where T is the linearization of the
exponential term at the model:

    T(psi) = 2 (n+1)^2 cos^{2n} psi / (sin^2 psi S_n(psi)^2).

T ~ 2/psi^2 at the pole face for every n (since S_n(0) = n+1), which forces
the Friedrichs behavior mu ~ psi^2 there; at psi = pi/2 regularity is
cos^{|m|} psi.  Radial rates of the half-space model operator then follow
from each eigenvalue lambda through delta(delta + 1) = lambda, i.e.

    delta_pm = -1/2 +- (1/2) sqrt(1 + 4 lambda),

and the flat Nahm-pole face has the fixed indicial pair {2, -1} from
gamma(gamma - 1) = 2.

For n = 0, m = 0 the ground state is exactly mu_0 = sin^2 psi with
lambda_0 = 6; this is the analytic anchor of the whole module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import eigh_tridiagonal

from .errors import CoordinateSingularity, DomainError, SolveError
from .models import eval_Sn


def eval_T(n, psi, displayed=False):
    """Potential of the hemisphere operator; strictly positive on (0, pi/2).

    displayed=True evaluates the weaker variant (n+1)^2/(sin^2 psi S_n^2)
    without the factor 2 and the cos^{2n}; it is kept for comparison only
    and does not reproduce the n=0 ground state 6.
    """
    psi_arr = np.asarray(psi, dtype=float)
    if np.any(psi_arr <= 0) or np.any(psi_arr > math.pi / 2 + 1e-15):
        raise CoordinateSingularity("T(psi) is singular at psi = 0; need psi in (0, pi/2]")
    s = np.sin(psi_arr)
    Sn = eval_Sn(n, psi_arr)
    if displayed:
        out = (n + 1) ** 2 / (s ** 2 * Sn ** 2)
    else:
        out = 2.0 * (n + 1) ** 2 * np.cos(psi_arr) ** (2 * n) / (s ** 2 * Sn ** 2)
    return out if np.ndim(out) else float(out)


def _assemble(n, m, N, displayed):
    """Symmetric tridiagonal (d, e) and node data for the discrete J.

    psi-nodes psi_j = (pi/2) j/N, j = 1..N, uniform: the eigenfunctions are
    smooth up to the psi^2 vanishing, and clustering toward psi = 0 would
    push the potential entry T(psi_1) ~ N^4 into the matrix, whose norm then
    amplifies the eigensolver's absolute roundoff past the discretization
    gain.  The ghost node psi = 0 carries mu = 0 (Friedrichs), eliminated
    into the first row.  For m != 0 the pole node psi = pi/2 is likewise
    eliminated (mu ~ cos^{|m|}); for m = 0 it stays as an unknown with the
    natural zero-flux closure (the weight cos psi vanishes there).
    """
    t = np.arange(1, N + 1, dtype=float) / N
    psi = (math.pi / 2) * t
    if m != 0:
        psi = psi[:-1]
    npts = len(psi)
    cw = np.cos(psi)

    diag = np.zeros(npts)
    h = np.diff(psi)
    c_mid = 0.5 * (cw[:-1] + cw[1:])
    diag[:-1] += c_mid / h
    diag[1:] += c_mid / h
    off = -c_mid / h
    # ghost elimination at psi = 0, where mu = 0 (Friedrichs)
    h0 = psi[0]
    c0 = 0.5 * (1.0 + cw[0])
    diag[0] += c0 / h0
    # for m != 0 the pole node was dropped: eliminate the ghost at pi/2 too
    if m != 0:
        hp = math.pi / 2 - psi[-1]
        diag[-1] += 0.5 * cw[-1] / hp
    # lumped mass in the cos weight (trapezoid on half cells)
    mass = np.zeros(npts)
    mass[:-1] += h / 2 * 0.5 * (cw[:-1] + c_mid)
    mass[1:] += h / 2 * 0.5 * (cw[1:] + c_mid)
    mass[0] += h0 / 2 * 0.5 * (cw[0] + c0)
    if m != 0:
        hp = math.pi / 2 - psi[-1]
        mass[-1] += hp / 2 * 0.5 * (cw[-1] + 0.5 * cw[-1])
    pot = eval_T(n, psi, displayed=displayed)
    if m != 0:
        pot = pot + m ** 2 / cw ** 2
    d_sym = (diag + mass * pot) / mass
    e_sym = off / np.sqrt(mass[:-1] * mass[1:])
    return psi, mass, d_sym, e_sym


def _eigs(n, m, count, N, displayed, want_vectors=False):
    psi, mass, d, e = _assemble(n, m, N, displayed)
    if want_vectors:
        vals, vecs = eigh_tridiagonal(d, e, select="i",
                                      select_range=(0, count - 1))
        # transform back: mu = w / sqrt(mass), then normalize in cos weight
        mus = vecs / np.sqrt(mass)[:, None]
        norms = np.sqrt(np.sum(mass[:, None] * mus ** 2, axis=0))
        mus = mus / norms
        # fix signs so each eigenfunction has positive mean
        sgn = np.sign(np.sum(mass[:, None] * mus, axis=0))
        sgn[sgn == 0] = 1.0
        # one eigenfunction per row from here on
        return psi, mass, vals, (mus * sgn).T
    vals = eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1),
                            eigvals_only=True)
    return psi, mass, vals, None


@dataclass(frozen=True)
class Spectrum:
    """Extrapolated eigendata of the hemisphere operator."""

    n: int
    m: int
    eigenvalues: tuple          # Richardson-extrapolated
    eigenvalues_raw: tuple      # finest-grid values (Rayleigh-exact)
    resolution: int
    psi: np.ndarray             # finest psi-nodes
    mass: np.ndarray            # cos-weighted lumped mass on psi
    eigenfunctions: np.ndarray  # (count, len(psi)), cos-weight normalized

    def __post_init__(self):
        for name in ("psi", "mass", "eigenfunctions"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        # The ground state obeys mu0 ~ c psi^2 at the pinned end (indicial
        # exponent 2 of the 2/psi^2 potential), so interpolate the smooth
        # quotient mu0 / sin^2(psi) instead of mu0 itself; direct
        # interpolation is off by tens of percent below the first node,
        # which ruins the near-wall cancellation in barrier residuals.
        q = self.eigenfunctions[0] / np.sin(self.psi) ** 2
        # linear-in-psi^2 extrapolation of the quotient to psi = 0
        t0, t1 = self.psi[0] ** 2, self.psi[1] ** 2
        q0 = q[0] - (q[1] - q[0]) * t0 / (t1 - t0)
        pts = np.concatenate([[0.0], self.psi])
        vals = np.concatenate([[q0], q])
        object.__setattr__(self, "_mu0q_itp", PchipInterpolator(pts, vals))

    def mu0(self, psi):
        """Ground eigenfunction, interpolated; positive on (0, pi/2]."""
        psi = np.asarray(psi, dtype=float)
        pc = np.clip(psi, 0.0, math.pi / 2)
        out = self._mu0q_itp(pc) * np.sin(pc) ** 2
        return out if out.ndim else float(out)

    def delta_plus(self, i=0):
        return indicial_radial(self.eigenvalues[i])[0]

    def orthogonality_defect(self):
        G = (self.eigenfunctions * self.mass) @ self.eigenfunctions.T
        return float(np.max(np.abs(G - np.eye(len(G)))))


def eigen_J(n, m=0, count=6, resolution=768, displayed_potential=False,
            _tol=1e-6) -> Spectrum:
    """Lowest eigenvalues/functions of J with Richardson extrapolation.

    Runs the symmetric tridiagonal eigensolve at resolution/2, resolution,
    and 2*resolution; reports (4 L_{2N} - L_N)/3 and errors out when the two
    successive extrapolations disagree beyond 1e-6 (non-convergence).
    """
    if count > 20:
        raise DomainError("count capped at 20")
    if count < 1:
        raise DomainError("count must be >= 1")
    if resolution < 64:
        raise DomainError("resolution must be >= 64")
    N = int(resolution)
    _, _, lam_half, _ = _eigs(n, m, count, N // 2, displayed_potential)
    _, _, lam_mid, _ = _eigs(n, m, count, N, displayed_potential)
    psi, mass, lam_fine, mus = _eigs(n, m, count, 2 * N, displayed_potential,
                                     want_vectors=True)
    ex_lo = (4 * lam_mid - lam_half) / 3
    ex_hi = (4 * lam_fine - lam_mid) / 3
    gap = np.max(np.abs(ex_hi - ex_lo) / np.maximum(1.0, np.abs(ex_hi)))
    if gap > _tol:
        raise SolveError(
            "non-convergent extrapolation: successive Richardson values "
            "disagree by %.3g (> %.0e)" % (gap, _tol),
            history=[tuple(ex_lo), tuple(ex_hi)])
    if np.any(mus[0] <= 0):
        # ground state must be nodeless; tiny negative undershoots near the
        # pinned end are a discretization artifact worth surfacing
        worst = float(np.min(mus[0]))
        if worst < -1e-8:
            raise SolveError("ground state changed sign (min %.3g)" % worst)
        mus = mus.copy()
        mus[0] = np.maximum(mus[0], 0.0)
    return Spectrum(n=n, m=m, eigenvalues=tuple(float(v) for v in ex_hi),
                    eigenvalues_raw=tuple(float(v) for v in lam_fine),
                    resolution=2 * N, psi=psi, mass=mass, eigenfunctions=mus)


def indicial_radial(lam):
    """Radial rates delta_pm = -1/2 +- sqrt(1 + 4 lambda)/2 of R^delta modes."""
    if lam <= -0.25:
        raise DomainError("complex indicial roots: lambda must exceed -1/4")
    root = math.sqrt(1.0 + 4.0 * lam)
    return (-0.5 + 0.5 * root, -0.5 - 0.5 * root)


def indicial_boundary():
    """Indicial pair of (-d_y^2 + 2/y^2): roots of gamma(gamma-1) = 2."""
    return (2, -1)
