"""Spliced approximate solutions near the y = 0 wall.

The approximate solution u-hat carries the boundary singularity exactly:
-log y plus the log of the Higgs zero structure, corrected near each knot
so that it coincides with the exact model profile there.  Everything the
elliptic solvers need downstream is precomputed here in forms that do not
lose the built-in cancellations:

  * cplus  = |alpha|^2 exp(2 u-hat)   (the e^{2u} coefficient at v = 0)
  * cminus = |beta|^2  exp(-2 u-hat)
  * f      = continuum residual N(u-hat), identically zero wherever the
             profile is an exact local solution, also in floating point.

Blending happens in the angle psi_j = atan2(y, |z - p_j|) around each knot,
not in the ball radius alone.  A radial cut between the two constituent
profiles cannot work: they differ by n log(R/r), which diverges on the
vertical axis above the knot, so any partial radial weight would put
+-inf at axis nodes.  The angle window is 1 near the axis and 0 near the
wall; it is widened inside the ball core so the profile is exactly the
model profile on the inner half of each knot ball as well.
"""

import functools
import math

import numpy as np

from .errors import DomainError
from .grids import (
    AXISYM_SLAB,
    PLANE_HALF_SPACE,
    TORUS_HALF_CYLINDER,
    GradedGrid,
    HiggsData,
    ScalarField,
)
from .models import eval_Un

# angle window: zero weight below 0.3 * (pi/2), full weight above 0.6 * (pi/2)
ANGLE_WINDOW = (0.3 * (math.pi / 2), 0.6 * (math.pi / 2))
# radial core window inside the knot ball, fractional on [0.5, 0.9] rho
BALL_WINDOW = (0.5, 0.9)
# fraction of the free distance (other knots, lateral boundary) a ball takes
BALL_FRACTION = 0.45


def smoothstep(s, deriv=0):
    """Quintic smoothstep: 0 for s <= 0, 1 for s >= 1, C^2 across the ends.

    deriv selects the value (0) or the first or second derivative in s.
    """
    s = np.asarray(s, dtype=float)
    t = np.clip(s, 0.0, 1.0)
    if deriv == 0:
        return t ** 3 * (10.0 + t * (6.0 * t - 15.0))
    if deriv == 1:
        return 30.0 * (t * (1.0 - t)) ** 2 * ((s > 0.0) & (s < 1.0))
    if deriv == 2:
        return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) * ((s > 0.0) & (s < 1.0))
    raise DomainError("deriv must be 0, 1 or 2")


def _angle_weight(psi):
    """Window m(psi) with two derivatives; exactly 0 / 1 outside the band."""
    lo, hi = ANGLE_WINDOW
    s = (psi - lo) / (hi - lo)
    m = smoothstep(s)
    m1 = smoothstep(s, 1) / (hi - lo)
    m2 = smoothstep(s, 2) / (hi - lo) ** 2
    return m, m1, m2


def _core_weight(R, rho):
    """Ball-core window b(R): 1 inside 0.5 rho, 0 outside 0.9 rho."""
    lo = BALL_WINDOW[0] * rho
    width = (BALL_WINDOW[1] - BALL_WINDOW[0]) * rho
    s = (R - lo) / width
    b = 1.0 - smoothstep(s)
    b1 = -smoothstep(s, 1) / width
    b2 = -smoothstep(s, 2) / width ** 2
    return b, b1, b2


def _column(val, grid):
    """Broadcast a scalar or horizontal field against the full grid shape."""
    arr = np.asarray(val, dtype=float)
    if arr.ndim == 0:
        return arr
    if arr.shape == grid.shape:
        return arr
    if arr.shape == grid.shape[:-1]:
        return arr[..., None]
    raise DomainError("coefficient shape %s fits neither the grid %s nor "
                      "its horizontal section" % (arr.shape, grid.shape))


def _Sn_derivs(n, s):
    """S_n and its first two derivatives in s = sin(psi), termwise sums."""
    s = np.asarray(s, dtype=float)
    S = np.zeros_like(s)
    S1 = np.zeros_like(s)
    S2 = np.zeros_like(s)
    up = 1.0 + s
    dn = 1.0 - s
    for k in range(n + 1):
        i = n - k
        S += up ** i * dn ** k
        if i:
            S1 += i * up ** (i - 1) * dn ** k
        if k:
            S1 -= k * up ** i * dn ** (k - 1)
        if i > 1:
            S2 += i * (i - 1) * up ** (i - 2) * dn ** k
        if i and k:
            S2 -= 2.0 * i * k * up ** (i - 1) * dn ** (k - 1)
        if k > 1:
            S2 += k * (k - 1) * up ** i * dn ** (k - 2)
    return S, S1, S2


def model_angle_profile(n, psi):
    """G_n(psi) = log((n+1) cos^n psi / S_n) and psi-derivatives.

    Returns (G, G', G'', aop) with aop = G'' - tan(psi) G'.  The first three
    blow up at psi = pi/2 for n >= 1; aop is returned in an algebraically
    cancelled form that stays finite there (its axis value is -1 for every
    n >= 1, matching e^{2G} - 1 = -1).
    """
    psi = np.asarray(psi, dtype=float)
    s = np.sin(psi)
    c = np.cos(psi)
    S, S1, S2 = _Sn_derivs(n, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        G = math.log(n + 1) + n * np.log(c) - np.log(S)
        G1 = -n * s / c - S1 * c / S
        G2 = -n / c ** 2 - (S2 * c ** 2 - S1 * s) / S + (S1 * c / S) ** 2
    aop = -float(n) - c ** 2 * (S2 * S - S1 ** 2) / S ** 2 + 2.0 * s * S1 / S
    return G, G1, G2, aop


def knot_ball_radii(spec):
    """Default ball radius per knot: a fixed fraction of the free distance."""
    knots = spec.knots
    out = []
    for j, k in enumerate(knots):
        d = math.inf
        for i, other in enumerate(knots):
            if i != j:
                d = min(d, abs(k.position - other.position))
        if spec.kind == AXISYM_SLAB:
            d = min(d, spec.r_max)
        elif spec.box is not None:
            lx, lz = spec.box
            dx = lx / 2 - abs(k.position.real - spec.box_center.real)
            dz = lz / 2 - abs(k.position.imag - spec.box_center.imag)
            d = min(d, dx, dz)
        if not math.isfinite(d):
            d = 2.0  # lone knot on an unbounded section: fixed unit scale
        out.append(BALL_FRACTION * d)
    return tuple(out)


def _check_balls(spec, radii):
    knots = spec.knots
    if len(radii) != len(knots):
        raise DomainError("need one ball radius per knot, got %d for %d"
                          % (len(radii), len(knots)))
    for rho in radii:
        if not rho > 0:
            raise DomainError("ball radii must be positive")
    for j in range(len(knots)):
        for i in range(j):
            gap = abs(knots[j].position - knots[i].position)
            if radii[i] + radii[j] > gap:
                raise DomainError(
                    "overlapping knot balls: %g + %g > distance %g"
                    % (radii[i], radii[j], gap))


class KnotFrame:
    """Per-knot spherical coordinates and blend weight on the grid."""

    def __init__(self, knot, rho, r, R, psi, m):
        self.knot = knot
        self.rho = rho
        self.r = r
        self.R = R
        self.psi = psi
        self.m = m


class SplicedModel:
    """Approximate solution u-hat with its derived coefficient fields.

    w is the pole-free part u-hat + log y; it extends continuously to the
    wall (w_at_wall) except at the knot points themselves.
    """

    def __init__(self, grid, data, w, corr, cplus, cminus, f_analytic,
                 frames=(), far_center=None, far_logc=None,
                 u_far=None, wall=None, core_mask=None):
        self.grid = grid
        self.data = data
        self.w = w
        self.corr = corr
        self.cplus = cplus
        self.cminus = cminus
        self.f_analytic = f_analytic
        self.frames = tuple(frames)
        self.far_center = far_center
        self.far_logc = far_logc
        self.u_far = u_far
        self._wall = wall
        self.core_mask = core_mask
        y = grid.y.reshape((1,) * (grid.ndim - 1) + (-1,))
        self.uhat = ScalarField(grid, w - np.log(y), name="uhat")

    def source(self, mode="analytic"):
        if mode != "analytic":
            raise DomainError("source mode %r not provided here; stencil "
                              "sources are assembled by the solver" % (mode,))
        return self.f_analytic

    def w_at_wall(self):
        """Limit of w on the y = 0 face; -inf at the knot points."""
        return self._wall

    def far_field_values(self):
        """Target values of v = u - u-hat from the leading far-field profile.

        Only meaningful for knot-plane problems: the single-monopole profile
        with the total charge, centered at the order-weighted root centroid,
        shifted by the leading coefficient.
        """
        if self.far_center is None:
            raise DomainError("far-field profile is only defined for "
                              "knot-plane data")
        grid = self.grid
        if grid.kind == AXISYM_SLAB:
            rr = grid.coords()[0]
        else:
            rr = np.abs(grid.horizontal_complex() - self.far_center)
        y = grid.y.reshape((1,) * (grid.ndim - 1) + (-1,))
        n0 = sum(k.order for k in self.data.knots)
        far = eval_Un(n0, np.broadcast_to(rr, grid.shape),
                      np.broadcast_to(y, grid.shape)) - self.far_logc
        return far - self.uhat.values


def _polynomial_parts(data, knots):
    """Leading coefficient of polynomial alpha, checked against the knots."""
    if data.poly is None:
        raise DomainError("knot construction requires polynomial data "
                          "(HiggsData.poly)")
    coeffs = np.asarray(data.poly, dtype=complex)
    if coeffs.size == 0 or coeffs[-1] == 0:
        raise DomainError("polynomial leading coefficient must be nonzero")
    degree = coeffs.size - 1
    total = sum(k.order for k in knots)
    if degree != total:
        raise DomainError("polynomial degree %d != sum of knot orders %d"
                          % (degree, total))
    return complex(coeffs[-1]), degree


def build_plane_profile(grid, data, ball_radii=None):
    """u-hat for knot planes and axisymmetric slabs (alpha = p(z))."""
    spec = grid.spec
    knots = spec.knots if spec is not None else data.knots
    if grid.kind == AXISYM_SLAB:
        if len(knots) > 1 or (knots and knots[0].position != 0):
            raise DomainError("axisymmetric slab supports a single knot "
                              "at the origin")
    y1 = grid.y.reshape((1,) * (grid.ndim - 1) + (-1,))
    y = np.broadcast_to(y1, grid.shape)

    if not knots:
        if data.poly is not None:
            if len(data.poly) != 1 or data.poly[0] == 0:
                raise DomainError("knotless polynomial data must be a "
                                  "nonzero constant")
            logc = math.log(abs(complex(data.poly[0])))
            prof = -logc
        else:
            logc = 0.0
            prof = -0.5 * np.log(np.asarray(data.alpha_sq, dtype=float))
        w = np.broadcast_to(_column(prof, grid), grid.shape).astype(float)
        corr = np.zeros(grid.shape)
        hor_lap = _horizontal_laplacian(grid, prof) / data.g0_sq
        return _finish_plane(grid, data, w, corr, (), None, logc,
                             hor_lap=hor_lap)

    c_lead, _ = _polynomial_parts(data, knots)
    logc = math.log(abs(c_lead))
    if ball_radii is None:
        radii = knot_ball_radii(spec)
    else:
        if np.isscalar(ball_radii):
            radii = (float(ball_radii),) * len(knots)
        else:
            radii = tuple(float(r) for r in ball_radii)
    _check_balls(spec, radii)

    if grid.kind == AXISYM_SLAB:
        rads = [np.broadcast_to(grid.coords()[0], grid.shape).astype(float)]
    else:
        zz = grid.horizontal_complex()
        rads = [np.broadcast_to(np.abs(zz - k.position), grid.shape)
                for k in knots]

    Rs = [np.hypot(r, y) for r in rads]

    # Bulk profile -log|c| - sum_k n_k log R_k with R_k the distance to the
    # knot through the half space, not along the wall.  It has the exact wall
    # trace -log|p| (every log(R/r) factor dies at y = 0), stays finite on
    # vertical axes, solves the flat equation exactly for one monomial knot,
    # and its source vanishes quadratically at the wall in general.
    w = np.full(grid.shape, -logc)
    corr = np.zeros(grid.shape)
    lap_w = np.zeros(grid.shape)
    for k, R in zip(knots, Rs):
        w -= k.order * np.log(R)
        lap_w -= k.order / R ** 2
        # n log cos(psi_k) without cancellation at small angles; -inf on the
        # vertical axis through the knot, where |p| e^{u-hat} genuinely dies
        with np.errstate(divide="ignore"):
            corr += 0.5 * k.order * np.log1p(-np.minimum((y / R) ** 2, 1.0))

    # Each knot ball swaps the bulk for the exact local model through a
    # radial window; the step is diff = delta_n(psi) + sum_{o} n_o log(R_o/r_o)
    # which vanishes on the wall so the Nahm trace survives the blend.
    frames = []
    if grid.kind != AXISYM_SLAB:
        zz = np.broadcast_to(grid.horizontal_complex(), grid.shape)
    for j, (k, rho, r, R) in enumerate(zip(knots, radii, rads, Rs)):
        n = k.order
        psi = np.arctan2(y, r)
        b, b1, b2 = _core_weight(R, rho)
        act = b > 0.0
        if np.any(act):
            s = np.sin(psi[act])
            S, S1, S2 = _Sn_derivs(n, s)
            diff = math.log(n + 1) - np.log(S)
            # R^2 * spherical Laplacian of delta_n, written in s = sin(psi)
            # so nothing blows up on the axis
            lapd = ((1.0 - s ** 2) * (S1 ** 2 / S ** 2 - S2 / S)
                    + 2.0 * s * S1 / S) / R[act] ** 2
            cross = np.zeros(diff.shape)
            for o, (ko, ro, Ro) in enumerate(zip(knots, rads, Rs)):
                if o == j:
                    continue
                ra, Ra = ro[act], Ro[act]
                diff += ko.order * (np.log(Ra) - np.log(ra))
                lapd += ko.order / Ra ** 2
                # radial derivative seen from this knot: Rhat . grad log(R_o/r_o)
                doth = (zz[act] - k.position).real * (zz[act] - ko.position).real \
                    + (zz[act] - k.position).imag * (zz[act] - ko.position).imag
                dot3 = doth + y[act] ** 2
                cross += ko.order * (dot3 / (R[act] * Ra ** 2)
                                     - doth / (R[act] * ra ** 2))
            ba, b1a, b2a = b[act], b1[act], b2[act]
            step = ba * diff
            w[act] += step
            corr[act] += step
            lap_w[act] += (diff * (b2a + 2.0 * b1a / R[act])
                           + 2.0 * b1a * cross + ba * lapd)
        frames.append(KnotFrame(k, rho, r, R, psi, b))

    return _finish_plane(grid, data, w, corr, frames, lap_w, logc,
                         knots=knots)


def _finish_plane(grid, data, w, corr, frames, lap_sum, logc, knots=(),
                  hor_lap=0.0):
    y1 = grid.y.reshape((1,) * (grid.ndim - 1) + (-1,))
    ysq = np.broadcast_to(y1, grid.shape) ** 2
    with np.errstate(over="ignore"):
        cplus = np.exp(2.0 * corr) / ysq
        # beta^2 e^{-2 uhat} = beta^2 y^2 e^{-2w}; w is finite on y > 0
        cminus = _column(data.beta_sq, grid) * ysq * np.exp(-2.0 * w)
    K = _column(data.K, grid)
    f = K + np.expm1(2.0 * corr) / ysq - cminus - _column(hor_lap, grid)
    f = np.broadcast_to(f, grid.shape).astype(float)
    if frames:
        f = f - lap_sum
        pure = np.zeros(grid.shape, dtype=bool)
        for fr in frames:
            this = fr.m == 1.0
            for other in frames:
                if other is not fr:
                    this &= other.m == 0.0
            pure |= this
        # exact local solution there: the flat-model part cancels identically,
        # curvature and beta survive
        f = np.where(pure, np.broadcast_to(K - cminus, grid.shape), f)

    center = None
    if knots:
        n0 = sum(k.order for k in knots)
        center = sum(k.order * k.position for k in knots) / n0
        if grid.kind == AXISYM_SLAB:
            center = 0j
    wall = _plane_wall(grid, data, logc, knots)
    return SplicedModel(grid, data, w, corr, cplus,
                        np.broadcast_to(cminus, grid.shape),
                        f, frames=frames, far_center=center, far_logc=logc,
                        wall=wall)


def _plane_wall(grid, data, logc, knots):
    """w on the y = 0 face: -log|p(z)| (or the knotless profile value)."""
    if grid.kind == AXISYM_SLAB:
        hor = np.asarray(grid.axes[0].nodes, dtype=float)
        if not knots:
            if data.poly is not None:
                return np.full(hor.shape, -logc)
            prof = -0.5 * np.log(np.asarray(data.alpha_sq, dtype=float))
            return np.broadcast_to(prof, hor.shape).astype(float)
        with np.errstate(divide="ignore"):
            return -logc - knots[0].order * np.log(hor)
    zz = np.asarray(grid.horizontal_complex())
    zz = np.broadcast_to(zz[..., 0], grid.shape[:-1])
    if not knots:
        if data.poly is not None:
            return np.full(zz.shape, -logc)
        prof = -0.5 * np.log(np.asarray(data.alpha_sq, dtype=float))
        return np.broadcast_to(prof, zz.shape).astype(float)
    out = np.full(zz.shape, -logc)
    with np.errstate(divide="ignore"):
        for k in knots:
            out = out - k.order * np.log(np.abs(zz - k.position))
    return out


@functools.lru_cache(maxsize=4)
def _profile_ode(tol=1e-10):
    from .mikhaylov import solve_mikhaylov_ode
    return solve_mikhaylov_ode(tol)


def build_cylinder_profile(grid, data, u_far=None):
    """u-hat for knotless half-cylinders.

    With a limit surface solution u_far the profile is the rescaled decaying
    ODE solution riding on it, u-hat = u_far + U(kappa y) with
    kappa^2 = alpha_sq e^{2 u_far}: near the wall
    u-hat = -log y - (1/2) log alpha_sq + O(y^2 log y), far up it decays
    onto u_far exponentially, and its y-part solves
    -u'' + alpha_sq e^{2u} = kappa^2 exactly.  The leftover source then
    comes only from beta_sq and from horizontal variation of kappa; for
    constant coefficients with beta_sq = 0 it vanishes identically.

    Without u_far (nonnegative effective curvature) the profile stays on
    -log y - (1/2) log alpha_sq all the way up.
    """
    if data.knots or (grid.spec is not None and grid.spec.knots):
        raise DomainError("knot points on a half-cylinder are not supported; "
                          "use the knot-plane solver")
    alpha_sq = np.asarray(data.alpha_sq, dtype=float)
    if not np.all(alpha_sq > 0):
        raise DomainError("alpha_sq must be strictly positive on a "
                          "half-cylinder")
    logas = _column(np.log(alpha_sq), grid)
    a = -0.5 * logas

    yn = grid.y
    y1 = yn.reshape((1,) * (grid.ndim - 1) + (-1,))
    y = np.broadcast_to(y1, grid.shape)

    K = _column(data.K, grid)
    beta_sq = _column(data.beta_sq, grid)

    if u_far is None:
        w = np.broadcast_to(a, grid.shape).astype(float)
        corr = np.zeros(grid.shape)
        cplus = np.broadcast_to(1.0 / y ** 2, grid.shape)
        cminus = np.broadcast_to(beta_sq * y ** 2 * np.exp(-2.0 * w),
                                 grid.shape)
        lap_a = _horizontal_laplacian(grid, np.asarray(a)) / data.g0_sq
        f = K - cminus - _column(lap_a, grid)
        uf = None
    else:
        uf = _column(u_far, grid)
        kappa = np.exp(uf - a)
        sol = _profile_ode()
        s = kappa * y
        uM = np.asarray(sol.u_at(s))
        # corr = uM + log s is the log-correction of cplus against 1/y^2;
        # it goes to 0 like s^2 log s at the wall without cancellation
        # trouble because u_at switches to the series there
        corr = uM + np.log(s)
        w = a + corr
        with np.errstate(over="ignore"):
            cplus = np.exp(2.0 * corr) / y ** 2
            cminus = np.broadcast_to(beta_sq * y ** 2 * np.exp(-2.0 * w),
                                     grid.shape)
        # first-integral identities keep the derivatives consistent with
        # the tabulated values: U'' = e^{2U} - 1, (U')^2 = e^{2U} - 2U - 1
        e2m = np.expm1(2.0 * uM)
        uM1 = -np.sqrt(np.maximum(e2m - 2.0 * uM, 0.0))
        f = -beta_sq * np.exp(-2.0 * uf) * np.expm1(-2.0 * uM)
        if np.ndim(kappa):
            k2 = kappa[..., 0] if kappa.ndim == grid.ndim else kappa
            lap_k = _horizontal_laplacian(grid, np.asarray(k2))
            grad2_k = _horizontal_gradient_sq(grid, np.asarray(k2))
            if np.any(lap_k) or np.any(grad2_k):
                f = f - (uM1 * y * _column(lap_k, grid)
                         + e2m * y ** 2 * _column(grad2_k, grid)) / data.g0_sq
    f = np.broadcast_to(f, grid.shape).astype(float)

    wall = np.broadcast_to(np.asarray(a)[..., 0] if np.ndim(a) else
                           np.asarray(a), grid.shape[:-1]).astype(float)
    return SplicedModel(grid, data, np.asarray(w, dtype=float),
                        np.asarray(corr, dtype=float), cplus, cminus, f,
                        u_far=uf, wall=wall)


def _horizontal_laplacian(grid, field):
    """Flat Laplacian of a horizontal coefficient profile, by stencils."""
    arr = np.asarray(field, dtype=float)
    if arr.ndim == 0:
        return 0.0
    from .operators import apply_along, d2_matrix

    created_column = False
    if arr.ndim == grid.ndim and arr.shape[-1] == 1:
        arr = arr[..., 0]
        created_column = True
    out = np.zeros_like(arr)
    for ax_i in range(grid.ndim - 1):
        out += apply_along(d2_matrix(grid.axes[ax_i]), arr, ax_i)
    return out[..., None] if created_column else out


def _horizontal_gradient_sq(grid, field):
    """Flat |grad field|^2 over the horizontal axes, by stencils."""
    arr = np.asarray(field, dtype=float)
    if arr.ndim == 0:
        return 0.0
    from .operators import apply_along, d1_matrix

    created_column = False
    if arr.ndim == grid.ndim and arr.shape[-1] == 1:
        arr = arr[..., 0]
        created_column = True
    out = np.zeros_like(arr)
    for ax_i in range(grid.ndim - 1):
        out += apply_along(d1_matrix(grid.axes[ax_i]), arr, ax_i) ** 2
    return out[..., None] if created_column else out


def effective_curvature(grid, data):
    """K-bar = K - Lap(a)/g0^2 with a = -(1/2) log alpha_sq.

    Nonnegative values anywhere mean the limit surface equation has no
    decaying solution and the cylinder profile must stay on the model
    branch.
    """
    alpha_sq = np.asarray(data.alpha_sq, dtype=float)
    a = -0.5 * np.log(alpha_sq)
    lap = _horizontal_laplacian(grid, a)
    return np.asarray(data.K, dtype=float) - np.asarray(lap) / data.g0_sq


def build_approximate_solution(grid, data, ball_radii=None):
    """Near-boundary approximate solution on a grid that excludes y = 0.

    Dispatches on the grid kind: knot planes and axisymmetric slabs get the
    spliced knot construction, half-cylinders the product profile.  The
    far-field blend of cylinders (toward the limit surface solution) is a
    solver concern and is not applied here.
    """
    if not isinstance(grid, GradedGrid) or not grid.has_y:
        raise DomainError("approximate solutions need a grid with a y-axis")
    if grid.includes_y0:
        raise DomainError("grid includes the y = 0 face; u-hat is singular "
                          "there, build on grid.without_y0()")
    if not isinstance(data, HiggsData):
        raise DomainError("data must be HiggsData")
    if grid.kind == TORUS_HALF_CYLINDER:
        return build_cylinder_profile(grid, data)
    if grid.kind in (PLANE_HALF_SPACE, AXISYM_SLAB):
        return build_plane_profile(grid, data, ball_radii=ball_radii)
    raise DomainError("no approximate solution construction for grid kind %r"
                      % (grid.kind,))
