"""Closed-form model solutions for the Nahm pole and knot singularities.

The order-n model on the half space is built from spherical coordinates
R = sqrt(r^2 + y^2), sin(psi) = y/R around the knot.  With

    S_n(psi) = sum_{k=0}^{n} (1 + sin psi)^{n-k} (1 - sin psi)^k

the model solution has the two equivalent forms

    U_n = log( 2(n+1) / ((R+y)^{n+1} - (R-y)^{n+1}) )
        = -log y - n log R + log( (n+1) / S_n(psi) )

(the second form is cancellation-free and is what gets evaluated), and it
satisfies the exact identity

    (Delta + d_y^2) U_n = r^{2n} e^{2 U_n},

which this module exposes so that defect terms of spliced approximate
solutions can be assembled analytically instead of by stencil.

n = 0 collapses to the plain Nahm pole -log y.  The y-translated family
log(C / sinh(C y)) solving -u'' + e^{2u} = 0 lives here too.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CoordinateSingularity, DomainError


def _check_n(n):
    if int(n) != n or n < 0:
        raise DomainError("model order n must be a nonnegative integer")
    return int(n)


def eval_Sn(n, psi):
    """S_n(psi) by direct summation; always >= 1 on [0, pi/2].

    S_0 = 1, S_1 = 2 identically, S_n(0) = n+1, S_n(pi/2) = 2^n.
    """
    n = _check_n(n)
    s = np.sin(np.asarray(psi, dtype=float))
    a = 1.0 + s
    b = 1.0 - s
    total = np.zeros_like(s)
    for k in range(n + 1):
        total = total + a ** (n - k) * b ** k
    return total if total.ndim else float(total)


def _spherical(r, y):
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    R = np.hypot(r, y)
    if np.any(R == 0):
        raise CoordinateSingularity("coordinate singularity at the knot point")
    s = np.clip(y / R, -1.0, 1.0)
    return r, y, R, s


def eval_Un(n, r, y):
    """Model solution of order n at cylindrical (r, y), y > 0.

    Evaluates the stable decomposition form; see `un_form_delta` for the
    recorded consistency gap against the direct closed form.
    """
    n = _check_n(n)
    r, y, R, s = _spherical(r, y)
    if np.any(y <= 0):
        raise DomainError("eval_Un requires y > 0")
    psi = np.arcsin(s)
    out = -np.log(y) - n * np.log(R) + np.log((n + 1) / eval_Sn(n, psi))
    return out if out.ndim else float(out)


def eval_Un_direct(n, r, y):
    """Direct closed form log(2(n+1) / ((R+y)^{n+1} - (R-y)^{n+1})).

    Loses precision for y << R (difference of nearby powers); kept as the
    consistency oracle for the stable form.
    """
    n = _check_n(n)
    r, y, R, s = _spherical(r, y)
    q = (R + y) ** (n + 1) - (R - y) ** (n + 1)
    out = np.log(2 * (n + 1) / q)
    return out if out.ndim else float(out)


def un_form_delta(n, r, y):
    """|stable - direct| consistency gap between the two forms of U_n."""
    return np.abs(eval_Un(n, r, y) - eval_Un_direct(n, r, y))


def eval_Un_grad(n, r, y):
    """(dU_n/dr, dU_n/dy), cancellation-free.

    dU/dr = -(n+1) r S_{n-1} / (R^2 S_n)          (S_{-1} := 0)
    dU/dy = -(n+1) P_n / (2 y S_n),  P_n = (1+s)^{n+1} + (1-s)^{n+1}
    """
    n = _check_n(n)
    r, y, R, s = _spherical(r, y)
    psi = np.arcsin(s)
    Sn = eval_Sn(n, psi)
    Snm1 = eval_Sn(n - 1, psi) if n >= 1 else np.zeros_like(R)
    Pn = (1.0 + s) ** (n + 1) + (1.0 - s) ** (n + 1)
    dr = -(n + 1) * r * Snm1 / (R ** 2 * Sn)
    dy = -(n + 1) * Pn / (2.0 * y * Sn)
    return dr, dy


def eval_Un_dr_over_r(n, r, y):
    """(1/r) dU_n/dr, finite on the axis r = 0."""
    n = _check_n(n)
    r, y, R, s = _spherical(r, y)
    psi = np.arcsin(s)
    Sn = eval_Sn(n, psi)
    Snm1 = eval_Sn(n - 1, psi) if n >= 1 else np.zeros_like(R)
    return -(n + 1) * Snm1 / (R ** 2 * Sn)


def eval_Un_lap(n, r, y):
    """(Delta + d_y^2) U_n = r^{2n} e^{2 U_n} = (n+1)^2 r^{2n} / (y R^n S_n)^2.

    Exact identity of the model; this is how spliced defects get their
    model contribution without any stencil.
    """
    n = _check_n(n)
    r, y, R, s = _spherical(r, y)
    psi = np.arcsin(s)
    Sn = eval_Sn(n, psi)
    cos2n = (r / R) ** (2 * n)
    out = (n + 1) ** 2 * cos2n / (y * Sn) ** 2
    return out if np.ndim(out) else float(out)


def eval_model_phi(n, R, psi, theta=0.0):
    """Unitary-gauge field magnitudes of the order-n model.

    Returns (|phi_z|, phi_1 diagonal value):

        |phi_z|  = (n+1) cos^n(psi) / (R sin(psi) S_n(psi))
        phi_1    = (n+1)/(2R) * P_n / ((1+s)^{n+1} - (1-s)^{n+1})

    The diagonal of phi_1 equals -(1/2) dU_n/dy, which is the cross-check
    used in the tests.  psi = 0 sits on the Nahm pole face.
    """
    n = _check_n(n)
    R = np.asarray(R, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if np.any(R <= 0):
        raise DomainError("eval_model_phi requires R > 0")
    if np.any(psi <= 0) or np.any(psi > np.pi / 2 + 1e-15):
        raise CoordinateSingularity(
            "boundary singularity: psi must lie in (0, pi/2]")
    s = np.sin(psi)
    Sn = eval_Sn(n, psi)
    mag = (n + 1) * np.cos(psi) ** n / (R * s * Sn)
    Pn = (1.0 + s) ** (n + 1) + (1.0 - s) ** (n + 1)
    Qn = (1.0 + s) ** (n + 1) - (1.0 - s) ** (n + 1)
    phi1 = (n + 1) / (2.0 * R) * Pn / Qn
    if np.ndim(mag):
        return mag, phi1
    return float(mag), float(phi1)


def eval_sinh_family(C, y):
    """log(C / sinh(C y)): solves -u'' + e^{2u} = 0 exactly for every C > 0.

    C -> 0 recovers -log y; for large y the member decays linearly like
    log(2C) - C y.
    """
    if not np.all(np.asarray(C) > 0):
        raise DomainError("eval_sinh_family requires C > 0")
    if not np.all(np.asarray(y) > 0):
        raise DomainError("eval_sinh_family requires y > 0")
    C = np.asarray(C, dtype=float)
    y = np.asarray(y, dtype=float)
    # log(C/sinh(Cy)) = log C - Cy - log((1 - e^{-2Cy})/2), overflow-safe
    out = np.log(C) - C * y - np.log1p(-np.exp(-2 * C * y)) + np.log(2.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ModelSolution:
    """Order-n model with both evaluation charts bundled."""

    n: int

    def eval_rz(self, r, y):
        return eval_Un(self.n, r, y)

    def eval_Rpsi(self, R, psi):
        R = np.asarray(R, dtype=float)
        psi = np.asarray(psi, dtype=float)
        return eval_Un(self.n, R * np.cos(psi), R * np.sin(psi))

    def consistency_delta(self, r, y):
        return un_form_delta(self.n, r, y)

    def grad(self, r, y):
        return eval_Un_grad(self.n, r, y)

    def lap(self, r, y):
        return eval_Un_lap(self.n, r, y)


def model_solution(n):
    return ModelSolution(_check_n(n))
