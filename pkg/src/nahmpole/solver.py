"""Semilinear elliptic solves for the remainder v = u - u-hat.

All solvers work in the remainder formulation: given the spliced profile
u-hat with coefficient fields cplus, cminus and source f = N(u-hat), the
discrete problem for v is

    f + (L_W v) / mass + cplus (e^{2v} - 1) - cminus (e^{-2v} - 1) = 0

on interior nodes, with Dirichlet data for v on the y = 0 face (zero), the
top face and any lateral faces.  L_W is the flux-form stiffness matrix, so
L_W / mass is the negative Laplacian with the conformal horizontal weight.
"""

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .approx import (
    build_approximate_solution,
    build_cylinder_profile,
    build_plane_profile,
    effective_curvature,
)
from .errors import DomainError, SolveError
from .grids import (
    AXISYM_SLAB,
    LIMIT_SURFACE,
    PLANE_HALF_SPACE,
    TORUS_HALF_CYLINDER,
    DomainSpec,
    GradedGrid,
    HiggsData,
    KnotPoint,
    ScalarField,
    build_grid,
)
from .operators import tensor_laplacian

# above this many unknowns direct sparse factorization gives way to AMG
DIRECT_LIMIT = 40000


@dataclass
class SolveReport:
    """What happened during a solve, in the order it happened."""

    method: str = ""
    iterations: int = 0
    residual_norms: list = field(default_factory=list)
    monotone_flags: list = field(default_factory=list)
    bracket_flags: list = field(default_factory=list)
    final_residual: float = math.inf
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)


@dataclass
class SemilinearProblem:
    """Discrete remainder problem bound to a grid that includes its faces."""

    grid: GradedGrid
    L: sp.csr_matrix
    mass: np.ndarray
    cplus: np.ndarray
    cminus: np.ndarray
    f: np.ndarray
    bc: np.ndarray
    interior: np.ndarray
    model: object = None

    @property
    def size(self):
        return self.grid.size

    def residual(self, v):
        """Pointwise N-hat(v) - 0 on interior nodes, zero on boundary rows."""
        v = np.asarray(v).reshape(-1)
        r = self.f + (self.L @ v) / self.mass
        # zero coefficients annihilate their term even when the exponential
        # overflows (0 * inf would otherwise poison the row)
        with np.errstate(over="ignore", invalid="ignore"):
            r = r + np.where(self.cplus != 0.0,
                             self.cplus * np.expm1(2.0 * v), 0.0)
            r = r - np.where(self.cminus != 0.0,
                             self.cminus * np.expm1(-2.0 * v), 0.0)
        r[~self.interior] = 0.0
        return r

    def residual_norm(self, v):
        return float(np.max(np.abs(self.residual(v))))

    def start_vector(self):
        v = np.zeros(self.size)
        v[~self.interior] = self.bc[~self.interior]
        return v

    def interior_operator(self, potential=None):
        """(L + M diag(potential)) restricted to interior nodes."""
        idx = np.flatnonzero(self.interior)
        A = self.L[idx][:, idx]
        if potential is not None:
            pot = np.broadcast_to(potential, (self.size,))
            A = A + sp.diags(self.mass[idx] * pot[idx])
        return A.tocsr(), idx


def linear_solve(A, rhs, tol=1e-10):
    """Deterministic sparse solve: direct when small, AMG-CG when large.

    Raises SolveError when the residual check fails or the operator is
    singular; the error message carries the residual history so stalled
    iterations can be diagnosed.
    """
    A = sp.csr_matrix(A)
    rhs = np.asarray(rhs, dtype=float).reshape(-1)
    n = A.shape[0]
    if A.shape != (n, n) or rhs.shape != (n,):
        raise DomainError("operator/rhs shape mismatch: %s vs %s"
                          % (A.shape, rhs.shape))
    scale = float(np.max(np.abs(rhs))) if n else 0.0
    if scale == 0.0:
        return np.zeros(n)
    if n <= DIRECT_LIMIT:
        try:
            x = splu(A.tocsc()).solve(rhs)
        except RuntimeError as exc:
            raise SolveError("direct linear solve failed (%s); periodic "
                             "operators need a positive shift" % exc) from exc
        res = [float(np.max(np.abs(A @ x - rhs)))]
    else:
        import pyamg

        ml = pyamg.smoothed_aggregation_solver(A, max_coarse=500)
        history = []
        x = ml.solve(rhs, tol=tol * 1e-2, accel="cg", residuals=history,
                     maxiter=400)
        res = [float(np.max(np.abs(A @ x - rhs)))]
        if not np.all(np.isfinite(x)):
            raise SolveError("AMG solve produced non-finite values; "
                             "residual history %s" % history[-6:])
    if res[-1] > tol * (1.0 + scale):
        raise SolveError("linear solve stalled: residual %.3e exceeds "
                         "tol %.3e (scale %.3e)" % (res[-1], tol, scale))
    return x


def _dominating_potential(problem, v_high, v_low):
    """Pointwise bound 2 cplus e^{2 v_high} + 2 cminus e^{-2 v_low} on the
    nonlinearity derivative over [v_low, v_high]; zero coefficients stay
    exactly zero even when the exponential overflows."""
    with np.errstate(over="ignore", invalid="ignore"):
        pot = np.where(problem.cplus != 0.0,
                       2.0 * problem.cplus * np.exp(2.0 * v_high), 0.0) \
            + np.where(problem.cminus != 0.0,
                       2.0 * problem.cminus * np.exp(-2.0 * v_low), 0.0)
    return pot


def _sweep_solver(A):
    if A.shape[0] <= DIRECT_LIMIT:
        lu = splu(A.tocsc())
        return lu.solve
    import pyamg

    ml = pyamg.smoothed_aggregation_solver(A.tocsr(), max_coarse=500)
    return lambda rhs: ml.solve(rhs, tol=1e-10, accel="cg", maxiter=400)


def monotone_iterate(problem, start="upper", barriers=None, lam=None,
                     tol=1e-8, max_iter=200):
    """Ordered sweeps from a supersolution (decreasing) or subsolution.

    Each sweep solves (L/mass + potential) delta = -N-hat(v) and steps by
    delta.  By default the potential is the pointwise dominating bound
    2 cplus e^{2 v_k} + 2 cminus e^{-2 v-} recomputed from the current
    iterate, which tracks the singular 1/y^2 coefficient near the wall
    and sharpens to the true linearization as the sweep descends.  A
    scalar lam instead runs the classical fixed-shift iteration (one
    factorization, but the shift must dominate the same bound globally,
    which crawls on strongly graded grids).  A step against the sweep
    direction beyond rounding slack raises: the shift is too small or the
    barriers are not a valid bracket.
    """
    t0 = time.perf_counter()
    if isinstance(start, str):
        if barriers is None:
            raise DomainError("start %r needs a barrier pair" % start)
        if start == "upper":
            v = np.asarray(barriers.upper, dtype=float).reshape(-1).copy()
        elif start == "lower":
            v = np.asarray(barriers.lower, dtype=float).reshape(-1).copy()
        else:
            raise DomainError("start must be 'upper', 'lower' or a field")
        direction = start
    else:
        v = np.asarray(start, dtype=float).reshape(-1).copy()
        direction = None
    v[~problem.interior] = problem.bc[~problem.interior]
    if barriers is not None:
        bar_lo = np.asarray(barriers.lower, dtype=float).reshape(-1)
        bar_hi = np.asarray(barriers.upper, dtype=float).reshape(-1)
    else:
        bar_lo = bar_hi = None

    fixed_solve = None
    if lam is not None:
        if not np.isscalar(lam) or not lam > 0:
            raise DomainError("shift lam must be a positive scalar, got %r"
                              % (lam,))
        A, idx = problem.interior_operator(
            potential=np.full(problem.size, float(lam)))
        fixed_solve = _sweep_solver(A)
    else:
        idx = np.flatnonzero(problem.interior)

    report = SolveReport(method="monotone",
                         meta={"lam": lam if lam is not None
                               else "pointwise"})
    slack = 1e-10
    for it in range(max_iter):
        r = problem.residual(v)
        rn = float(np.max(np.abs(r)))
        report.residual_norms.append(rn)
        if bar_lo is not None:
            inside = bool(np.all(v[problem.interior]
                                 <= bar_hi[problem.interior] + 1e-9)
                          and np.all(v[problem.interior]
                                     >= bar_lo[problem.interior] - 1e-9))
            report.bracket_flags.append(inside)
        if rn <= tol:
            report.iterations = it
            report.final_residual = rn
            report.wall_time = time.perf_counter() - t0
            return v, report
        rhs = -(problem.mass * r)[idx]
        if fixed_solve is not None:
            delta = fixed_solve(rhs)
        else:
            if direction == "lower":
                high = bar_hi if bar_hi is not None else v
                pot = _dominating_potential(problem, high, v)
            else:
                low = bar_lo if bar_lo is not None else v
                pot = _dominating_potential(problem, v, low)
            if not np.all(np.isfinite(pot[problem.interior])):
                raise SolveError("dominating potential overflowed; the "
                                 "upper barrier is too large to sweep from",
                                 history=report.residual_norms)
            A, idx = problem.interior_operator(potential=pot)
            delta = _sweep_solver(A)(rhs)
        if direction is not None:
            if direction == "upper":
                drift = float(np.max(delta))
            else:
                drift = -float(np.min(delta))
            ok = drift <= slack * (1.0 + float(np.max(np.abs(v))))
            report.monotone_flags.append(ok)
            if not ok:
                raise SolveError(
                    "monotone step moved against the %s sweep by %.3e; "
                    "the shift is too small or the barriers are invalid"
                    % (direction, drift),
                    history=report.residual_norms)
        v[idx] += delta
        report.iterations = it + 1
    report.final_residual = report.residual_norms[-1]
    report.wall_time = time.perf_counter() - t0
    raise SolveError("monotone iteration did not reach tol %.1e in %d "
                     "sweeps; last residual %.3e"
                     % (tol, max_iter, report.final_residual))


def newton_solve(problem, v0=None, barriers=None, tol=1e-10, max_iter=40):
    """Damped Newton iteration on the remainder equation.

    The Jacobian potential 2 cplus e^{2v} + 2 cminus e^{-2v} is positive,
    so the linearized operator is definite.  A simple backtracking line
    search guards the early steps; when it cannot reduce the residual the
    error suggests the monotone scheme, which is slower but bracketed.
    When barriers are given each iterate is clipped into the bracket.
    """
    t0 = time.perf_counter()
    v = problem.start_vector() if v0 is None else \
        np.asarray(v0, dtype=float).reshape(-1).copy()
    v[~problem.interior] = problem.bc[~problem.interior]
    report = SolveReport(method="newton")
    for it in range(max_iter):
        r = problem.residual(v)
        rn = float(np.max(np.abs(r)))
        report.residual_norms.append(rn)
        if barriers is not None:
            lo = np.asarray(barriers.lower).reshape(-1)
            hi = np.asarray(barriers.upper).reshape(-1)
            inside = bool(np.all(v[problem.interior]
                                 <= hi[problem.interior] + 1e-9)
                          and np.all(v[problem.interior]
                                     >= lo[problem.interior] - 1e-9))
            report.bracket_flags.append(inside)
        if rn <= tol:
            report.iterations = it
            report.final_residual = rn
            report.wall_time = time.perf_counter() - t0
            return v, report
        with np.errstate(over="ignore"):
            pot = 2.0 * problem.cplus * np.exp(2.0 * v) \
                + 2.0 * problem.cminus * np.exp(-2.0 * v)
        A, idx = problem.interior_operator(potential=pot)
        delta = linear_solve(A, -(problem.mass * r)[idx],
                             tol=max(1e-12, 1e-6 * tol))
        step = 1.0
        while True:
            trial = v.copy()
            trial[idx] += step * delta
            if barriers is not None:
                lo = np.asarray(barriers.lower).reshape(-1)
                hi = np.asarray(barriers.upper).reshape(-1)
                trial = np.minimum(np.maximum(trial, lo), hi)
                trial[~problem.interior] = problem.bc[~problem.interior]
            tn = problem.residual_norm(trial)
            if tn <= (1.0 - 0.25 * step) * rn or tn <= tol:
                break
            step *= 0.5
            if step < 1e-7:
                report.wall_time = time.perf_counter() - t0
                raise SolveError(
                    "line search failed at residual %.3e; the problem may "
                    "sit outside the Newton basin, try monotone_iterate"
                    % rn)
        v = trial
        report.iterations = it + 1
    report.final_residual = report.residual_norms[-1]
    report.wall_time = time.perf_counter() - t0
    raise SolveError("Newton did not reach tol %.1e in %d iterations; "
                     "last residual %.3e" % (tol, max_iter,
                                             report.final_residual))


def assemble_problem(grid, data, model=None, source_mode="analytic",
                     bc=None):
    """Build the discrete remainder problem on a grid with its y = 0 face.

    The coefficient fields and source come from the spliced model (built
    on grid.without_y0() when not supplied).  source_mode 'analytic' uses
    the continuum N(u-hat); 'stencil' applies the grid Laplacian to the
    pole-free part w = u-hat + log y instead, so the source carries the
    same O(h^2) discretization as the operator.  Stencil rows whose
    neighborhood touches the singular wall value at a knot fall back to
    the analytic source.
    """
    if not isinstance(grid, GradedGrid):
        raise DomainError("grid must be a GradedGrid")
    if grid.has_y and not grid.includes_y0:
        raise DomainError("the remainder problem lives on a grid that "
                          "includes the y = 0 face")
    if model is None:
        model = build_approximate_solution(grid.without_y0(), data)
    horizontal = 1.0 / data.g0_sq
    L, mass = tensor_laplacian(grid, horizontal_factor=horizontal)
    codes = grid.boundary_codes().reshape(-1)
    interior = codes == 0

    shape = grid.shape
    cplus = np.zeros(shape)
    cminus = np.zeros(shape)
    f = np.zeros(shape)
    cplus[..., 1:] = model.cplus
    cminus[..., 1:] = model.cminus
    if source_mode == "analytic":
        f[..., 1:] = model.f_analytic
    elif source_mode == "stencil":
        f[..., 1:] = _stencil_source(grid, data, model, L, mass)
    else:
        raise DomainError("source_mode must be 'analytic' or 'stencil'")

    if not np.all(np.isfinite(f)):
        raise DomainError("source is not finite; the approximate solution "
                          "does not match the data")
    if bc is None:
        bc = _default_bc(grid, model)
    bc = np.asarray(bc, dtype=float).reshape(-1)
    problem = SemilinearProblem(grid=grid, L=L, mass=mass,
                                cplus=cplus.reshape(-1),
                                cminus=cminus.reshape(-1),
                                f=f.reshape(-1), bc=bc,
                                interior=interior, model=model)
    return problem


def _stencil_source(grid, data, model, L, mass):
    """Discrete N(u-hat) via the grid operator on the pole-free part."""
    shape = grid.shape
    w_ext = np.zeros(shape)
    w_ext[..., 1:] = model.w
    wall = model.w_at_wall()
    w_ext[..., 0] = wall
    y = grid.y.reshape((1,) * (grid.ndim - 1) + (-1,))
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        lap_w = (L @ np.where(np.isfinite(w_ext), w_ext,
                              0.0).reshape(-1)).reshape(shape) \
            / mass.reshape(shape)
        contaminated = ~np.isfinite(w_ext)
        # mark nodes whose vertical neighbor column carries the knot blowup
        touch = np.zeros(shape, dtype=bool)
        touch[..., 1:] |= contaminated[..., :-1]
        touch |= contaminated
        K = np.broadcast_to(np.asarray(data.K, dtype=float), shape) \
            if np.ndim(data.K) == 0 else _pad_column(data.K, shape)
        f_full = K + lap_w - 1.0 / y ** 2
        f_full[..., 1:] += model.cplus - model.cminus
    f = f_full[..., 1:]
    ana = model.f_analytic
    bad = touch[..., 1:] | ~np.isfinite(f)
    return np.where(bad, ana, f)


def _pad_column(val, shape):
    arr = np.asarray(val, dtype=float)
    if arr.shape == shape[:-1]:
        return np.broadcast_to(arr[..., None], shape)
    return np.broadcast_to(arr, shape)


def _default_bc(grid, model):
    """Dirichlet values for v: zero at the wall, far-field data elsewhere."""
    bc = np.zeros(grid.shape)
    codes = grid.boundary_codes()
    outer = (codes == 2) | (codes == 3)
    if not np.any(outer):
        return bc.reshape(-1)
    vals = np.zeros(grid.shape)
    if model.far_center is not None:
        vals[..., 1:] = model.far_field_values()
    elif model.u_far is not None:
        # cylinder: v target is u_far - uhat, exponentially small at the top
        uf = np.asarray(model.u_far, dtype=float)
        if uf.shape == model.grid.shape[:-1]:
            uf = uf[..., None]
        vals[..., 1:] = np.broadcast_to(uf, model.grid.shape) \
            - model.uhat.values
    bc[outer] = vals[outer]
    return bc.reshape(-1)


def solve_limit_surface(data, grid, tol=1e-10):
    """Solve the surface equation K + a2 e^{2u} - b2 e^{-2u} = Lap_g0 u.

    Needs alpha_sq positive somewhere; data with alpha_sq identically zero
    is rejected as unstable data.  Returns (field, report).
    """
    if not isinstance(grid, GradedGrid) or grid.has_y:
        raise DomainError("limit surface solves need a 2-d surface grid")
    a2 = np.broadcast_to(np.asarray(data.alpha_sq, dtype=float), grid.shape)
    b2 = np.broadcast_to(np.asarray(data.beta_sq, dtype=float), grid.shape)
    K = np.broadcast_to(np.asarray(data.K, dtype=float), grid.shape)
    if not np.any(a2 > 0):
        raise DomainError("unstable data: alpha_sq vanishes identically")

    # constant starting guess from the averaged algebraic balance
    Km, am, bm = float(np.mean(K)), float(np.mean(a2)), float(np.mean(b2))
    disc = Km * Km + 4.0 * am * bm
    t = (-Km + math.sqrt(disc)) / (2.0 * am) if am > 0 else 0.0
    if t <= 0:
        raise SolveError("no limit surface solution: K + a2 e^{2u} - b2 "
                         "e^{-2u} has no constant balance (mean K %.3g)"
                         % Km)
    u0 = 0.5 * math.log(t)

    L, mass = tensor_laplacian(grid, horizontal_factor=1.0 / data.g0_sq)
    u = np.full(grid.size, u0)
    a2f, b2f, Kf = a2.reshape(-1), b2.reshape(-1), K.reshape(-1)
    report = SolveReport(method="newton")
    t0 = time.perf_counter()

    def res(uv):
        with np.errstate(over="ignore"):
            return Kf + (L @ uv) / mass + a2f * np.exp(2.0 * uv) \
                - b2f * np.exp(-2.0 * uv)

    for it in range(60):
        r = res(u)
        rn = float(np.max(np.abs(r)))
        report.residual_norms.append(rn)
        if rn <= tol:
            report.iterations = it
            report.final_residual = rn
            report.wall_time = time.perf_counter() - t0
            return ScalarField(grid, u.reshape(grid.shape), "u_inf"), report
        with np.errstate(over="ignore"):
            pot = 2.0 * a2f * np.exp(2.0 * u) + 2.0 * b2f * np.exp(-2.0 * u)
        A = L + sp.diags(mass * pot)
        delta = linear_solve(A, -mass * r, tol=max(1e-13, 1e-6 * tol))
        step = 1.0
        while float(np.max(np.abs(res(u + step * delta)))) > \
                (1.0 - 0.25 * step) * rn and step > 1e-7:
            step *= 0.5
        if step <= 1e-7:
            raise SolveError("line search failed on the limit surface; "
                             "the data may admit no solution")
        u = u + step * delta
        report.iterations = it + 1
    raise SolveError("limit surface Newton did not converge: residual %.3e"
                     % report.residual_norms[-1])


def solve_half_cylinder(data, grid, tol=1e-8, method="newton",
                        source_mode="analytic", barriers=None):
    """Nahm-pole solve on a periodic half-cylinder without knots.

    Returns (u, report) with u = u-hat + v on the y > 0 part of the grid.
    When the effective curvature K - Lap(a)/g0^2 is negative the profile
    blends into the limit surface solution; otherwise a warning is issued
    and the pure model profile continues to the top.
    """
    if not isinstance(grid, GradedGrid) or grid.kind != TORUS_HALF_CYLINDER:
        raise DomainError("solve_half_cylinder needs a half-cylinder grid")
    if not grid.includes_y0:
        raise DomainError("the cylinder solve grid must include y = 0")
    if data.knots or (grid.spec is not None and grid.spec.knots):
        raise DomainError("knot points on a half-cylinder are not "
                          "supported; use the knot-plane solver")

    kbar = effective_curvature(grid, data)
    u_far = None
    surf_report = None
    if float(np.max(kbar)) >= 0.0:
        warnings.warn("effective curvature is nonnegative somewhere: the "
                      "limit surface equation has no solution, continuing "
                      "with the model profile", stacklevel=2)
    else:
        sgrid = GradedGrid(LIMIT_SURFACE, grid.axes[:-1], grid.spec)
        u_inf, surf_report = solve_limit_surface(data, sgrid,
                                                 tol=min(tol, 1e-10))
        u_far = u_inf.values

    inner = grid.without_y0()
    model = build_cylinder_profile(inner, data, u_far=u_far)
    problem = assemble_problem(grid, data, model=model,
                               source_mode=source_mode)
    if method == "newton":
        v, report = newton_solve(problem, barriers=barriers,
                                 tol=min(tol, 1e-10))
    elif method == "monotone":
        if barriers is None:
            from .barriers import build_barriers
            barriers = build_barriers(problem)
        v, report = monotone_iterate(problem, start="upper",
                                     barriers=barriers, tol=tol)
    else:
        raise DomainError("method must be 'newton' or 'monotone'")

    vg = v.reshape(grid.shape)
    u = model.uhat.values + vg[..., 1:]
    report.meta.update(model=model, problem=problem, v=vg,
                       surface_report=surf_report,
                       kbar_max=float(np.max(kbar)))
    return ScalarField(inner, u, "u"), report


def _taylor_shift(coeffs, z0):
    """Coefficients of p(z + z0), low order first, by synthetic division."""
    b = [complex(c) for c in coeffs]
    shifted = []
    while b:
        q = [0j] * (len(b) - 1)
        acc = 0j
        for k in range(len(b) - 1, 0, -1):
            acc = b[k] + acc * z0
            q[k - 1] = acc
        shifted.append(b[0] + acc * z0)
        b = q
    return shifted


def _check_roots(poly, knots):
    """Knot positions must be roots of p with the declared multiplicities."""
    coeffs = [complex(c) for c in poly]
    scale = max(abs(c) for c in coeffs)
    if scale == 0:
        raise DomainError("polynomial is identically zero")
    for k in knots:
        local = _taylor_shift(coeffs, k.position)
        mag = max(abs(c) * max(1.0, abs(k.position)) ** i
                  for i, c in enumerate(coeffs))
        for m in range(k.order):
            if abs(local[m]) > 1e-8 * mag:
                raise DomainError(
                    "knot at %s is not a root of order %d: |p^(%d)|/%d! = "
                    "%.3e exceeds the 1e-8 consistency bound"
                    % (k.position, k.order, m, m, abs(local[m])))
        if len(local) > k.order and abs(local[k.order]) <= 1e-8 * mag \
                and sum(kk.order for kk in knots) > k.order:
            raise DomainError("knot at %s has higher multiplicity than its "
                              "declared order %d" % (k.position, k.order))


def solve_knot_plane(poly, spec, resolution, tol=1e-8, method="newton",
                     source_mode="analytic", barriers=None,
                     ball_radii=None, grading=None):
    """Knot-plane solve: -(Lap + d_y^2) u + |p|^2 e^{2u} = 0.

    poly holds the coefficients of p low order first; the knot positions
    and orders in spec must match its roots (checked to 1e-8).  Monomial
    data on an axisymmetric spec runs on the fast (r, y) grid.  Returns
    (u, report) on the y > 0 part of the grid.
    """
    coeffs = tuple(complex(c) for c in poly)
    if len(coeffs) == 0 or coeffs[-1] == 0:
        raise DomainError("polynomial leading coefficient must be nonzero")
    if spec.kind not in (PLANE_HALF_SPACE, AXISYM_SLAB):
        raise DomainError("solve_knot_plane needs a plane or axisymmetric "
                          "domain spec")
    knots = spec.knots
    if sum(k.order for k in knots) != len(coeffs) - 1:
        raise DomainError("polynomial degree %d != sum of knot orders %d"
                          % (len(coeffs) - 1, sum(k.order for k in knots)))
    if knots:
        _check_roots(coeffs, knots)
    data = HiggsData(K=0.0, alpha_sq=1.0, beta_sq=0.0, knots=knots,
                     poly=coeffs)

    grid = build_grid(spec, resolution, grading)
    inner = grid.without_y0()
    model = build_plane_profile(inner, data, ball_radii=ball_radii)
    problem = assemble_problem(grid, data, model=model,
                               source_mode=source_mode)
    if method == "newton":
        v, report = newton_solve(problem, barriers=barriers,
                                 tol=min(tol, 1e-10))
    elif method == "monotone":
        if barriers is None:
            from .barriers import build_barriers
            barriers = build_barriers(problem)
        v, report = monotone_iterate(problem, start="upper",
                                     barriers=barriers, tol=tol)
    else:
        raise DomainError("method must be 'newton' or 'monotone'")
    vg = v.reshape(grid.shape)
    u = model.uhat.values + vg[..., 1:]
    report.meta.update(model=model, problem=problem, v=vg)
    return ScalarField(inner, u, "u"), report


def axisym_spec_for_monomial(spec, order):
    """Equivalent (r, y) domain for p = c z^order centered in a plane box."""
    if spec.kind == AXISYM_SLAB:
        return spec
    if spec.box is None:
        raise DomainError("monomial fast path needs a box or an "
                          "axisymmetric spec")
    r_max = 0.5 * min(spec.box)
    return DomainSpec(kind=AXISYM_SLAB, r_max=r_max, y_max=spec.y_max,
                      knots=(KnotPoint(0.0, order),))


@dataclass
class StudyReport:
    """Dyadic refinement study: errors, spacings and fitted order."""

    resolutions: tuple
    spacings: tuple
    errors: tuple
    pair_orders: tuple
    order: float

    def __str__(self):
        rows = ", ".join("%s: %.3e" % (r, e)
                         for r, e in zip(self.resolutions, self.errors))
        return "StudyReport(%s; order %.3f)" % (rows, self.order)


def convergence_study(runner, resolutions):
    """Run a refinement family and fit the convergence order.

    runner(resolution) must return (spacing, error).  At least three
    distinct resolutions are required; the order comes from a least
    squares fit of log error against log spacing, and pairwise orders
    are reported for inspection.
    """
    res = tuple(resolutions)
    if len(res) < 3:
        raise DomainError("need at least three resolutions, got %d"
                          % len(res))
    if len(set(res)) != len(res):
        raise DomainError("non-distinct resolutions in the study: %r"
                          % (res,))
    spacings = []
    errors = []
    for r in res:
        h, e = runner(r)
        if not (h > 0 and e >= 0):
            raise SolveError("runner returned invalid spacing/error "
                             "(%r, %r) at resolution %r" % (h, e, r))
        spacings.append(float(h))
        errors.append(float(e))
    pair = []
    for i in range(1, len(res)):
        if errors[i] > 0 and errors[i - 1] > 0:
            pair.append(math.log(errors[i - 1] / errors[i])
                        / math.log(spacings[i - 1] / spacings[i]))
        else:
            pair.append(math.inf)
    lo = np.log(spacings)
    le = np.log(np.maximum(errors, 1e-300))
    A = np.vstack([lo, np.ones_like(lo)]).T
    slope = float(np.linalg.lstsq(A, le, rcond=None)[0][0])
    return StudyReport(resolutions=res, spacings=tuple(spacings),
                       errors=tuple(errors), pair_orders=tuple(pair),
                       order=slope)
