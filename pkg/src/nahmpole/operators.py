"""Finite difference building blocks on graded tensor grids.

Two families of discrete operators live here:

* symmetric flux-form (lumped finite element) stiffness and mass per axis,
  assembled into tensor-product weighted Laplacians with nonpositive
  off-diagonal entries (M-matrix structure, which is what the monotone
  solver's comparison arguments need);

* plain nodal first/second difference matrices (three-point, one-sided at
  ends) used for residual evaluation and gauge reconstruction, so residual
  orders are comparable across modules.

The axisymmetric radial direction carries the coefficient r in the flux
form; the half-cell mass at the axis node r = 0 is h^2/8, which reproduces
the standard regularity stencil 4(u_0 - u_1)/h^2 there without any special
casing.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .grids import AXISYM_SLAB, Axis, GradedGrid


def axis_stiffness_mass(axis: Axis, coef=None):
    """Flux-form stiffness K and lumped mass m for -d/dx(c(x) d/dx).

    c defaults to 1.  Returns (K csr, m array) over all nodes with natural
    (zero-flux) closure at non-periodic ends; Dirichlet faces are imposed
    later by row masking at the problem level.  The nodal operator
    (K u)_i / m_i is the usual nonuniform three-point stencil.
    """
    x = axis.nodes
    n = len(x)
    c = np.ones(n) if coef is None else np.asarray(coef, dtype=float)
    if c.shape != (n,):
        raise DomainError("coefficient shape mismatch on axis %r" % axis.name)
    rows, cols, vals = [], [], []
    mass = np.zeros(n)

    def add_edge(i, j, h, cmid):
        w = cmid / h
        rows.extend([i, j, i, j])
        cols.extend([i, j, j, i])
        vals.extend([w, w, -w, -w])
        # half-cell mass on each side, trapezoid with the midpoint value
        mass[i] += h / 2 * 0.5 * (c[i] + cmid)
        mass[j] += h / 2 * 0.5 * (c[j] + cmid)

    for i in range(n - 1):
        h = x[i + 1] - x[i]
        add_edge(i, i + 1, h, 0.5 * (c[i] + c[i + 1]))
    if axis.periodic:
        h = axis.period - (x[-1] - x[0])
        add_edge(n - 1, 0, h, 0.5 * (c[-1] + c[0]))
    K = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    if np.any(mass <= 0):
        raise DomainError("nonpositive lumped mass on axis %r" % axis.name)
    return K, mass


def tensor_laplacian(grid: GradedGrid, horizontal_factor=1.0):
    """Weighted stiffness L_W and flattened mass for -(Delta_h + d_y^2).

    horizontal_factor multiplies the horizontal part (1/g0^2 for conformal
    horizontal metrics).  On axisymmetric grids the radial part carries the
    coefficient r and the mass carries the r measure, so L_W/mass is
    -d_rr - (1/r) d_r - d_yy with built-in regularity at the axis.

    Returns (L_W csr, mass flat array); L_W is symmetric with nonpositive
    off-diagonals, and the quadratic form v^T L_W v is the discrete
    Dirichlet energy.
    """
    parts = []
    masses = []
    for ax in grid.axes:
        coef = ax.nodes.copy() if (grid.kind == AXISYM_SLAB and ax.name == "r") \
            else None
        K, m = axis_stiffness_mass(ax, coef)
        parts.append(K)
        masses.append(m)

    size = grid.size
    L = sp.csr_matrix((size, size))
    for d, K in enumerate(parts):
        factor = 1.0
        if grid.axes[d].name not in ("y",):
            factor = horizontal_factor
        term = None
        for e, m in enumerate(masses):
            blk = K if e == d else sp.diags(m)
            term = blk if term is None else sp.kron(term, blk, format="csr")
        L = L + factor * term
    mass = masses[0]
    for m in masses[1:]:
        mass = np.multiply.outer(mass, m)
    return L.tocsr(), mass.reshape(-1)


def d1_matrix(axis: Axis):
    """Second-order first derivative: centered interior, one-sided ends."""
    x = axis.nodes
    n = len(x)
    rows, cols, vals = [], [], []

    def stencil_row(i, js):
        # differentiation weights via local quadratic through three nodes
        xi = x[i]
        xs = [x[j] for j in js]
        # Lagrange derivative weights at xi
        for a in range(3):
            others = [xs[b] for b in range(3) if b != a]
            denom = (xs[a] - others[0]) * (xs[a] - others[1])
            w = ((xi - others[0]) + (xi - others[1])) / denom
            rows.append(i)
            cols.append(js[a])
            vals.append(w)

    if axis.periodic:
        hs = axis.spacings
        # uniform periodic axes: simple centered difference with wrap
        h = hs[0]
        if not np.allclose(hs, h):
            raise DomainError("periodic axes must be uniform")
        for i in range(n):
            rows.extend([i, i])
            cols.extend([(i + 1) % n, (i - 1) % n])
            vals.extend([1.0 / (2 * h), -1.0 / (2 * h)])
    else:
        for i in range(n):
            if i == 0:
                stencil_row(i, [0, 1, 2])
            elif i == n - 1:
                stencil_row(i, [n - 3, n - 2, n - 1])
            else:
                stencil_row(i, [i - 1, i, i + 1])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def d2_matrix(axis: Axis):
    """Three-point second derivative; first-order one-sided at ends."""
    x = axis.nodes
    n = len(x)
    rows, cols, vals = [], [], []

    def add(i, js):
        xs = [x[j] for j in js]
        for a in range(3):
            others = [xs[b] for b in range(3) if b != a]
            denom = (xs[a] - others[0]) * (xs[a] - others[1])
            rows.append(i)
            cols.append(js[a])
            vals.append(2.0 / denom)

    if axis.periodic:
        hs = axis.spacings
        h = hs[0]
        if not np.allclose(hs, h):
            raise DomainError("periodic axes must be uniform")
        for i in range(n):
            rows.extend([i, i, i])
            cols.extend([(i - 1) % n, i, (i + 1) % n])
            vals.extend([1.0 / h ** 2, -2.0 / h ** 2, 1.0 / h ** 2])
    else:
        for i in range(n):
            js = [i - 1, i, i + 1]
            if i == 0:
                js = [0, 1, 2]
            elif i == n - 1:
                js = [n - 3, n - 2, n - 1]
            add(i, js)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def apply_along(mat, arr, axis):
    """Apply a (n, n) matrix along one axis of an nd array (real or complex)."""
    moved = np.moveaxis(arr, axis, 0)
    shape = moved.shape
    flat = moved.reshape(shape[0], -1)
    out = mat @ flat
    return np.moveaxis(out.reshape(shape), 0, axis)


def nodal_laplacian(grid: GradedGrid, values, horizontal_factor=1.0):
    """(Delta_h + d_y^2) of nodal values by the same stencils the solver
    uses (note the sign: this is the plain Laplacian, not its negative)."""
    L, mass = tensor_laplacian(grid, horizontal_factor)
    flat = np.asarray(values, dtype=float).reshape(-1)
    return (-(L @ flat) / mass).reshape(grid.shape)
