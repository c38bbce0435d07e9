"""Polyhomogeneous boundary expansion of the scalar solution at y = 0.

Writing u = -log y + v and collecting powers, the defect operator becomes

    (-d_y^2 + 2/y^2) v + (1/y^2)(e^{2v} - 2v - 1) - |beta|^2 y^2 e^{-2v}
        - Lap v + K

and the ansatz v = sum a_{jl} y^j (log y)^l is solved stage by stage using

    (-d_y^2 + 2/y^2) [y^j L^l] =
        y^{j-2} [ (2 - j(j-1)) L^l - l(2j-1) L^{l-1} - l(l-1) L^{l-2} ],

L = log y.  Stage j kills the y^{j-2} terms of the defect.  The indicial
factor 2 - j(j-1) vanishes exactly at j = 2, where the chain is solved from
the top log power downward, leaving a_{20} free (supplied by the caller,
default 0) and forcing a_{21} = K/3.  The |beta|^2 term carries an explicit
y^2 and therefore enters first at stage 4 (through a_{40}), two orders after
the curvature.  The exponential nonlinearity feeds products of earlier
coefficients into later stages, e.g. a_{42} = a_{21}^2 / 5.

Everything here works for constant coefficient data; nodal coefficient
fields are accepted when a horizontal grid is supplied for the Lap terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grids import HiggsData

MAX_ORDER = 6


def _series_mul(A, B, jmax):
    out = {}
    for (ja, la), ca in A.items():
        for (jb, lb), cb in B.items():
            j, l = ja + jb, la + lb
            if j > jmax:
                continue
            out[(j, l)] = out.get((j, l), 0.0) + ca * cb
    return out


def _series_scale(A, s):
    return {k: s * c for k, c in A.items()}


def _series_add(A, B):
    out = dict(A)
    for k, c in B.items():
        out[k] = out.get(k, 0.0) + c
    return out


def _exp_series(A, jmax):
    """Power series of exp(A) - 1 for A with all powers j >= 2."""
    out = {}
    term = {(0, 0): 1.0}
    mmax = max(1, jmax // 2)
    for m in range(1, mmax + 1):
        term = _series_scale(_series_mul(term, A, jmax), 1.0 / m)
        out = _series_add(out, term)
    return out


@dataclass(frozen=True)
class ExpansionTable:
    """Coefficients a_{jl} of v = sum a_{jl} y^j (log y)^l."""

    coeffs: dict
    order: int
    a20: float

    def a(self, j, l):
        return self.coeffs.get((j, l), 0.0)

    def terms(self):
        return sorted(self.coeffs.items())

    def evaluate_v(self, y):
        """v(y); array coefficients broadcast with y on the last axis."""
        y = np.asarray(y, dtype=float)
        L = np.log(y)
        out = 0.0
        for (j, l), c in self.coeffs.items():
            base = y ** j * L ** l
            if np.ndim(c):
                out = out + np.multiply.outer(np.asarray(c), base)
            else:
                out = out + c * base
        return out + np.zeros_like(y)

    def evaluate_u(self, y):
        return -np.log(np.asarray(y, dtype=float)) + self.evaluate_v(y)


def formal_expansion(data: HiggsData, order: int, a20=0.0,
                     lap=None) -> ExpansionTable:
    """Solve the boundary recurrence through y^order.

    lap: optional callable applying the horizontal Laplacian to coefficient
    fields (required when data carries nodal K or beta_sq); constants need
    nothing.
    """
    if order > MAX_ORDER:
        raise DomainError("expansion order capped at %d" % MAX_ORDER)
    K = data.K
    b2 = data.beta_sq
    is_field = any(np.ndim(x) > 0 for x in (K, b2, a20))
    if is_field and lap is None:
        raise DomainError("field coefficients need a horizontal Laplacian")
    if lap is None:
        lap = lambda c: 0.0 * c

    coeffs = {}
    if order < 2:
        return ExpansionTable(coeffs={}, order=order, a20=float(a20))

    def known_series():
        return dict(coeffs)

    for j0 in range(2, order + 1):
        v = known_series()
        # defect contributions at y^{j0-2}, by log power
        source = {}

        def add(l, val):
            if np.ndim(val) == 0 and val == 0.0:
                return
            source[l] = source.get(l, 0.0) + val

        if j0 == 2:
            add(0, K)
        # (1/y^2) * (e^{2v} - 2v - 1): powers y^{j}, j >= 4, land at stage j
        two_v = _series_scale(v, 2.0)
        E = _series_add(_exp_series(two_v, j0), _series_scale(two_v, -1.0))
        for (j, l), c in E.items():
            if j == j0:
                add(l, c)
        # -|beta|^2 y^2 e^{-2v}: defect power y^{2+j}, matched to y^{j0-2}
        em = _series_add({(0, 0): 1.0}, _exp_series(_series_scale(v, -2.0),
                                                    max(0, j0 - 4)))
        for (j, l), c in em.items():
            if j + 4 == j0:
                add(l, -b2 * c)
        # -Lap v at power y^{j0-2}; constants have zero Laplacian
        if is_field:
            for (j, l), c in v.items():
                if j == j0 - 2:
                    add(l, -lap(c))

        cj = 2 - j0 * (j0 - 1)
        lmax = max(source.keys(), default=-1)
        if j0 == 2:
            # indicial stage: solve the chain downward, a_{20} is free
            stage = {0: np.asarray(a20, dtype=float) if np.ndim(a20) else float(a20)}
            # a_{2,l+1} determined by the L^l equation
            for l in range(lmax, -1, -1):
                upper2 = stage.get(l + 2, 0.0)
                s = source.get(l, 0.0)
                stage[l + 1] = (s - (l + 2) * (l + 1) * upper2) / (3.0 * (l + 1))
            for l, val in stage.items():
                if np.ndim(val) or val != 0.0:
                    coeffs[(2, l)] = val
        else:
            stage = {}
            for l in range(lmax, -1, -1):
                up1 = stage.get(l + 1, 0.0)
                up2 = stage.get(l + 2, 0.0)
                s = source.get(l, 0.0)
                val = ((l + 1) * (2 * j0 - 1) * up1
                       + (l + 2) * (l + 1) * up2 - s) / cj
                if np.ndim(val) or val != 0.0:
                    stage[l] = val
            for l, val in stage.items():
                coeffs[(j0, l)] = val

    return ExpansionTable(coeffs=coeffs, order=order,
                          a20=a20 if np.ndim(a20) else float(a20))


def fit_boundary_coefficients(y, v, window=(0.02, 0.45)):
    """Least-squares fit of v against {y^2 log y, y^2, y^3 log y, y^3}.

    Returns (a21, a20, a31, a30).  Columns are max-normalized before the
    solve so the small-y window stays well conditioned.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    sel = (y >= window[0]) & (y <= window[1])
    if np.count_nonzero(sel) < 8:
        raise DomainError("fit window [%g, %g] holds fewer than 8 nodes"
                          % window)
    yy = y[sel]
    L = np.log(yy)
    cols = np.column_stack([yy ** 2 * L, yy ** 2, yy ** 3 * L, yy ** 3])
    scale = np.max(np.abs(cols), axis=0)
    sol, *_ = np.linalg.lstsq(cols / scale, v[sel], rcond=None)
    return tuple(sol / scale)
