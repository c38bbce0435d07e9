"""Domain specifications, graded tensor-product grids, and nodal scalar fields.

Domains are half-cylinders Sigma x (0, y_max] over a flat torus, half-space
boxes C x (0, y_max], axisymmetric (r, y) slabs, flat 2d tori (the y -> infinity
limit surface), and plain y-lines for the reduced ODE.  Grids are tensor
products of per-axis node vectors.  The y-axis is power-law graded toward the
singular face y = 0:

    y_j = y_max * (j / N)**g,   j = 1..N        (fields of the singular u)
    y_j,  j = 0..N  including y = 0             (fields of the remainder v)

so one grid object exists in two views, `with_y0` / `without_y0`, that share
the same grading map.  Horizontal axes are either periodic and uniform or
bounded with optional smooth refinement clustering near marked knot points.

Nothing here knows about equations; assembly lives in `operators` and
`solver`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erf

from .errors import CoordinateSingularity, DomainError

# Domain kinds.
ODE_LINE = "ode-line"
LIMIT_SURFACE = "limit-surface"
AXISYM_SLAB = "axisym-slab"
TORUS_HALF_CYLINDER = "torus-half-cylinder"
PLANE_HALF_SPACE = "plane-half-space"

DOMAIN_KINDS = (ODE_LINE, LIMIT_SURFACE, AXISYM_SLAB, TORUS_HALF_CYLINDER,
                PLANE_HALF_SPACE)

# Per-node boundary classification codes.
INTERIOR = 0
FACE_Y0 = 1
FACE_LATERAL = 2
FACE_TOP = 3

MIN_RESOLUTION = 8


@dataclass(frozen=True)
class KnotPoint:
    """Marked boundary point carrying a monopole order n >= 1."""

    position: complex
    order: int

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise DomainError("knot order must be a positive integer, got %r"
                              % (self.order,))
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "position", complex(self.position))


@dataclass(frozen=True)
class DomainSpec:
    """Geometry of one problem: kind, horizontal extent, height, knots.

    periods   -- (Lx, Lz) for periodic horizontal directions
    box       -- (Lx, Lz) full side lengths of a Dirichlet box
    box_center-- complex center of the box (plane domains)
    r_max     -- radial extent for axisymmetric slabs
    y_max     -- truncation height (> 0 for kinds with a y-axis)
    knots     -- marked points with orders
    far_field_degree -- N0, must equal the sum of knot orders (plane only)
    """

    kind: str
    y_max: float = 0.0
    periods: tuple[float, float] | None = None
    box: tuple[float, float] | None = None
    box_center: complex = 0j
    r_max: float = 0.0
    knots: tuple[KnotPoint, ...] = ()
    far_field_degree: int | None = None

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise DomainError("unknown domain kind %r" % (self.kind,))
        object.__setattr__(self, "knots", tuple(self.knots))
        if self.kind != LIMIT_SURFACE and not self.y_max > 0:
            raise DomainError("y_max must be > 0, got %r" % (self.y_max,))
        positions = [k.position for k in self.knots]
        for i, p in enumerate(positions):
            for q in positions[i + 1:]:
                if p == q:
                    raise DomainError("knot positions must be pairwise distinct")
        if self.kind in (LIMIT_SURFACE, TORUS_HALF_CYLINDER):
            if self.periods is None:
                raise DomainError("%s needs periods" % self.kind)
            if min(self.periods) <= 0:
                raise DomainError("periods must be positive")
        if self.kind == PLANE_HALF_SPACE:
            if self.box is None:
                raise DomainError("plane-half-space needs a bounding box")
            if min(self.box) <= 0:
                raise DomainError("box lengths must be positive")
            for k in self.knots:
                d = k.position - self.box_center
                if (abs(d.real) >= self.box[0] / 2
                        or abs(d.imag) >= self.box[1] / 2):
                    raise DomainError("knot %s lies outside the box" % k.position)
            total = sum(k.order for k in self.knots)
            if self.far_field_degree is None:
                object.__setattr__(self, "far_field_degree", total)
            elif self.far_field_degree != total:
                raise DomainError(
                    "far_field_degree %d != sum of knot orders %d"
                    % (self.far_field_degree, total))
        if self.kind == AXISYM_SLAB:
            if not self.r_max > 0:
                raise DomainError("axisym-slab needs r_max > 0")
            if len(self.knots) > 1 or any(k.position != 0 for k in self.knots):
                raise DomainError("axisym-slab admits a single knot at r = 0")
        if self.kind == TORUS_HALF_CYLINDER:
            for k in self.knots:
                # Positions are taken in the fundamental domain [0,Lx)x[0,Lz).
                x, z = k.position.real, k.position.imag
                if not (0 <= x < self.periods[0] and 0 <= z < self.periods[1]):
                    raise DomainError(
                        "torus knot %s outside fundamental domain" % k.position)


@dataclass(frozen=True)
class HiggsData:
    """Coefficients of the scalar boundary value problem.

    K        -- curvature of the background metric (constant or nodal field)
    alpha_sq -- |alpha|^2 >= 0, vanishing to order 2 n_j at the knots
    beta_sq  -- |beta|^2 >= 0
    g0_sq    -- conformal factor of the horizontal metric; a positive
                constant (non-constant factors are not supported by the
                tensor-product assembly and are rejected)
    knots    -- knot points consistent with the zeros of alpha_sq
    poly     -- optional coefficients (low order first) when alpha is a
                polynomial p(z); then alpha_sq = |p|^2 and knots must be
                roots of p
    """

    K: float | np.ndarray = 0.0
    alpha_sq: float | np.ndarray = 1.0
    beta_sq: float | np.ndarray = 0.0
    g0_sq: float = 1.0
    knots: tuple[KnotPoint, ...] = ()
    poly: tuple[complex, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple(self.knots))
        if self.poly is not None:
            object.__setattr__(self, "poly", tuple(complex(c) for c in self.poly))
        if not np.isscalar(self.g0_sq):
            raise DomainError("g0_sq must be a positive constant")
        if not self.g0_sq > 0:
            raise DomainError("g0_sq must be > 0")
        for name in ("alpha_sq", "beta_sq"):
            val = getattr(self, name)
            arr = np.asarray(val, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise DomainError("%s must be finite" % name)
            if np.any(arr < 0):
                raise DomainError("%s must be nonnegative" % name)
        if not np.all(np.isfinite(np.asarray(self.K, dtype=float))):
            raise DomainError("K must be finite")

    def constant_coefficients(self) -> bool:
        return (np.isscalar(self.K) or np.ndim(self.K) == 0) and \
               (np.isscalar(self.alpha_sq) or np.ndim(self.alpha_sq) == 0) and \
               (np.isscalar(self.beta_sq) or np.ndim(self.beta_sq) == 0)


# ---------------------------------------------------------------------------
# Grading maps.  Each maps the uniform parameter t in [0, 1] to a coordinate
# and owns an inverse; the round trip must hold to 1e-12 relative error.

@dataclass(frozen=True)
class PowerMap:
    """x(t) = x0 + length * t**exponent, closed-form inverse."""

    x0: float
    length: float
    exponent: float

    def forward(self, t):
        t = np.asarray(t, dtype=float)
        return self.x0 + self.length * t ** self.exponent

    def inverse(self, x):
        x = np.asarray(x, dtype=float)
        s = np.clip((x - self.x0) / self.length, 0.0, None)
        return s ** (1.0 / self.exponent)


@dataclass(frozen=True)
class ClusterMap:
    """Smooth refinement toward marked centers on a bounded interval.

    Node density rho(x) = 1 + sum_k a * exp(-((x-c_k)/w)^2).  The cumulative
    integral has a closed form in erf, which gives the inverse map x -> t
    directly; the forward map t -> x is obtained by a safeguarded Newton
    solve of the closed form, so the round trip is exact to solver tolerance
    (1e-14), well inside the 1e-12 grid invariant.
    """

    lo: float
    hi: float
    centers: tuple[float, ...]
    width: float
    strength: float

    def _cdf(self, x):
        x = np.asarray(x, dtype=float)
        total = x - self.lo
        for c in self.centers:
            total = total + self.strength * self.width * math.sqrt(math.pi) / 2 * (
                erf((x - c) / self.width) - erf((self.lo - c) / self.width))
        return total

    def _density(self, x):
        x = np.asarray(x, dtype=float)
        rho = np.ones_like(x)
        for c in self.centers:
            rho = rho + self.strength * np.exp(-((x - c) / self.width) ** 2)
        return rho

    def inverse(self, x):
        return self._cdf(x) / self._cdf(self.hi)

    def forward(self, t):
        t = np.asarray(t, dtype=float)
        target = t * self._cdf(self.hi)
        x = self.lo + t * (self.hi - self.lo)  # initial guess
        lo = np.full_like(x, self.lo)
        hi = np.full_like(x, self.hi)
        for _ in range(80):
            f = self._cdf(x) - target
            lo = np.where(f < 0, x, lo)
            hi = np.where(f > 0, x, hi)
            step = f / self._density(x)
            xn = x - step
            bad = (xn < lo) | (xn > hi)
            xn = np.where(bad, 0.5 * (lo + hi), xn)
            if np.max(np.abs(xn - x)) < 1e-15 * (self.hi - self.lo):
                x = xn
                break
            x = xn
        return x


@dataclass(frozen=True)
class Axis:
    """One grid direction: strictly increasing nodes, optional periodicity."""

    name: str
    nodes: np.ndarray
    periodic: bool = False
    period: float = 0.0
    gmap: PowerMap | ClusterMap | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise DomainError("axis %r needs at least two nodes" % self.name)
        if np.any(np.diff(nodes) <= 0):
            raise DomainError("axis %r nodes must be strictly increasing" % self.name)

    def __len__(self):
        return len(self.nodes)

    @property
    def spacings(self):
        if self.periodic:
            # wraparound spacing appended so len(spacings) == len(nodes)
            d = np.diff(self.nodes)
            return np.concatenate([d, [self.period - (self.nodes[-1] - self.nodes[0])]])
        return np.diff(self.nodes)

    def weights(self):
        """Trapezoidal quadrature weights (uniform cells when periodic)."""
        if self.periodic:
            return np.full(len(self.nodes), self.period / len(self.nodes))
        h = np.diff(self.nodes)
        w = np.zeros(len(self.nodes))
        w[:-1] += h / 2
        w[1:] += h / 2
        return w

    def measure(self):
        if self.periodic:
            return self.period
        return self.nodes[-1] - self.nodes[0]


@dataclass(frozen=True)
class GradedGrid:
    """Tensor product of axes with the y-axis last (when present)."""

    kind: str
    axes: tuple[Axis, ...]
    spec: DomainSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))

    # -- basic geometry ----------------------------------------------------
    @property
    def ndim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(len(ax) for ax in self.axes)

    @property
    def size(self):
        return int(np.prod(self.shape))

    def axis(self, name):
        for ax in self.axes:
            if ax.name == name:
                return ax
        raise DomainError("grid has no axis %r" % name)

    @property
    def has_y(self):
        return self.axes[-1].name == "y"

    @property
    def y(self):
        return self.axis("y").nodes

    def coords(self):
        """Broadcastable coordinate arrays, one per axis, indexing 'ij'."""
        return np.meshgrid(*(ax.nodes for ax in self.axes), indexing="ij",
                           sparse=True)

    def horizontal_complex(self):
        """Complex coordinate z = x + i*zeta on the horizontal plane."""
        if self.kind == AXISYM_SLAB:
            raise DomainError("axisym grid has no complex horizontal coordinate")
        if self.kind == ODE_LINE:
            raise DomainError("line grid has no horizontal coordinate")
        cs = self.coords()
        return cs[0] + 1j * cs[1]

    # -- y = 0 face views ----------------------------------------------------
    @property
    def includes_y0(self):
        return self.has_y and self.y[0] == 0.0

    def with_y0(self) -> "GradedGrid":
        """View including the y = 0 face (for remainder fields v)."""
        if not self.has_y or self.includes_y0:
            return self
        yax = self.axes[-1]
        nodes = np.concatenate([[0.0], yax.nodes])
        new = Axis("y", nodes, gmap=yax.gmap)
        return replace(self, axes=self.axes[:-1] + (new,))

    def without_y0(self) -> "GradedGrid":
        """View excluding the y = 0 face (for singular fields u)."""
        if not self.has_y or not self.includes_y0:
            return self
        yax = self.axes[-1]
        new = Axis("y", yax.nodes[1:], gmap=yax.gmap)
        return replace(self, axes=self.axes[:-1] + (new,))

    # -- boundary classification ---------------------------------------------
    def boundary_codes(self):
        """Integer code per node: 0 interior, 1 y=0 face, 2 lateral, 3 top."""
        codes = np.zeros(self.shape, dtype=np.int8)
        for d, ax in enumerate(self.axes):
            if ax.periodic:
                continue
            first = [slice(None)] * self.ndim
            last = [slice(None)] * self.ndim
            first[d] = 0
            last[d] = -1
            if ax.name == "y":
                codes[tuple(last)] = np.maximum(codes[tuple(last)], FACE_TOP)
                if ax.nodes[0] == 0.0:
                    codes[tuple(first)] = np.maximum(codes[tuple(first)], FACE_Y0)
            elif ax.name == "r":
                # r = 0 is a regularity axis, not a boundary face
                codes[tuple(last)] = np.maximum(codes[tuple(last)], FACE_LATERAL)
            elif ax.name == "psi":
                # spectral hemisphere axis: psi = 0 face behaves like y = 0
                codes[tuple(first)] = np.maximum(codes[tuple(first)], FACE_Y0)
            else:
                codes[tuple(first)] = np.maximum(codes[tuple(first)], FACE_LATERAL)
                codes[tuple(last)] = np.maximum(codes[tuple(last)], FACE_LATERAL)
        # y = 0 wins at edges shared with lateral faces: the Nahm pole face is
        # where homogeneous v data lives.
        if self.has_y and self.includes_y0:
            first = [slice(None)] * self.ndim
            first[-1] = 0
            codes[tuple(first)] = FACE_Y0
        return codes

    def interior_mask(self):
        return self.boundary_codes() == INTERIOR

    # -- quadrature ------------------------------------------------------------
    def weights(self):
        """Tensor-product trapezoid weights; sum equals the box measure."""
        w = self.axes[0].weights()
        out = w
        for ax in self.axes[1:]:
            out = np.multiply.outer(out, ax.weights())
        return out

    def measure(self):
        return float(np.prod([ax.measure() for ax in self.axes]))

    def min_spacing(self, name=None):
        axes = self.axes if name is None else (self.axis(name),)
        return min(float(np.min(np.diff(ax.nodes))) for ax in axes)

    def max_spacing(self, name=None):
        axes = self.axes if name is None else (self.axis(name),)
        return max(float(np.max(np.diff(ax.nodes))) for ax in axes)


@dataclass(frozen=True)
class ScalarField:
    """Real nodal values bound to a grid."""

    grid: GradedGrid
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise DomainError("field shape %s != grid shape %s"
                              % (vals.shape, self.grid.shape))
        if not np.all(np.isfinite(vals)):
            raise DomainError("field %r has non-finite values" % (self.name,))
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values, name=None):
        return ScalarField(self.grid, values, self.name if name is None else name)


def constant_field(grid, value, name=""):
    return ScalarField(grid, np.full(grid.shape, float(value)), name)


# ---------------------------------------------------------------------------
# Grid construction


def _y_axis(y_max, nnodes, exponent):
    gmap = PowerMap(0.0, y_max, exponent)
    t = np.arange(nnodes, dtype=float) / (nnodes - 1)
    return Axis("y", gmap.forward(t), gmap=gmap)


def _periodic_axis(name, period, n):
    h = period / n
    return Axis(name, h * np.arange(n), periodic=True, period=period)


def _box_axis(name, lo, hi, n, centers=(), factor=1.0, width=0.0):
    if factor > 1.0 and centers:
        gmap = ClusterMap(lo, hi, tuple(centers), width, factor - 1.0)
        t = np.arange(n, dtype=float) / (n - 1)
        return Axis(name, gmap.forward(t), gmap=gmap)
    return Axis(name, np.linspace(lo, hi, n))


def build_grid(spec: DomainSpec, resolution, grading=None) -> GradedGrid:
    """Construct the tensor grid for a domain spec.

    resolution: int or per-axis tuple, counting nodes per axis.  Periodic
    axes carry `resolution` nodes over one period; bounded axes (y, r, box
    sides) carry `resolution` nodes including both endpoints, so the y axis
    contains the y=0 face row used by remainder unknowns.  The one exception
    is the plain line, where `resolution` counts cells (resolution=1000 with
    grading 1 gives the 1001 uniform nodes on [0, 10] with spacing 0.01).

    grading: dict with optional keys
        "y"            power-law exponent toward y = 0 (default 2, in [1, 4])
        "r"            exponent toward r = 0 (default 1)
        "knot_factor"  horizontal refinement strength near knots (default 1)
        "knot_width"   refinement width (default: an eighth of the box)
    """
    grading = dict(grading or {})
    gy = float(grading.pop("y", 2.0))
    gr = float(grading.pop("r", 1.0))
    kfac = float(grading.pop("knot_factor", 1.0))
    kwid = grading.pop("knot_width", None)
    if grading:
        raise DomainError("unknown grading keys %s" % sorted(grading))
    for g in (gy, gr):
        if not 1.0 <= g <= 4.0:
            raise DomainError("grading exponents must lie in [1, 4], got %r" % g)

    def res_tuple(ndim):
        if np.isscalar(resolution):
            res = (int(resolution),) * ndim
        else:
            res = tuple(int(r) for r in resolution)
        if len(res) != ndim:
            raise DomainError("expected %d resolution entries, got %d"
                              % (ndim, len(res)))
        if min(res) < MIN_RESOLUTION:
            raise DomainError("resolution below minimum (%d per axis)"
                              % MIN_RESOLUTION)
        return res

    if spec.kind == ODE_LINE:
        (n,) = res_tuple(1)
        return GradedGrid(spec.kind, (_y_axis(spec.y_max, n + 1, gy),), spec)

    if spec.kind == LIMIT_SURFACE:
        nx, nz = res_tuple(2)
        axes = (_periodic_axis("x", spec.periods[0], nx),
                _periodic_axis("z", spec.periods[1], nz))
        return GradedGrid(spec.kind, axes, spec)

    if spec.kind == AXISYM_SLAB:
        nr, ny = res_tuple(2)
        if gr > 1.0:
            rmap = PowerMap(0.0, spec.r_max, gr)
            raxis = Axis("r", rmap.forward(np.arange(nr) / (nr - 1)), gmap=rmap)
        else:
            raxis = Axis("r", np.linspace(0.0, spec.r_max, nr))
        return GradedGrid(spec.kind, (raxis, _y_axis(spec.y_max, ny, gy)), spec)

    if spec.kind == TORUS_HALF_CYLINDER:
        nx, nz, ny = res_tuple(3)
        axes = (_periodic_axis("x", spec.periods[0], nx),
                _periodic_axis("z", spec.periods[1], nz),
                _y_axis(spec.y_max, ny, gy))
        return GradedGrid(spec.kind, axes, spec)

    if spec.kind == PLANE_HALF_SPACE:
        nx, nz, ny = res_tuple(3)
        cx, cz = spec.box_center.real, spec.box_center.imag
        Lx, Lz = spec.box
        if kwid is None:
            kwid = min(Lx, Lz) / 8
        xc = [k.position.real for k in spec.knots]
        zc = [k.position.imag for k in spec.knots]
        axes = (_box_axis("x", cx - Lx / 2, cx + Lx / 2, nx, xc, kfac, kwid),
                _box_axis("z", cz - Lz / 2, cz + Lz / 2, nz, zc, kfac, kwid),
                _y_axis(spec.y_max, ny, gy))
        return GradedGrid(spec.kind, axes, spec)

    raise DomainError("unknown domain kind %r" % spec.kind)


# ---------------------------------------------------------------------------
# Coordinates


def spherical_coords(point, knot):
    """Spherical coordinates (R, psi, theta) centered at a knot.

    point is (z, y) with z the complex horizontal coordinate and y >= 0.
    R = sqrt(|z - p|^2 + y^2), sin(psi) = y / R with psi in [0, pi/2], and
    theta = arg(z - p) (0 on the axis where it is unused).  Asking for the
    knot point itself is a coordinate singularity.
    """
    z, y = point
    p = knot.position if isinstance(knot, KnotPoint) else complex(knot)
    z = np.asarray(z, dtype=complex)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("spherical_coords requires y >= 0")
    dz = z - p
    r = np.abs(dz)
    R = np.hypot(r, y)
    if np.any(R == 0):
        raise CoordinateSingularity("coordinate singularity: point equals knot")
    psi = np.arcsin(np.clip(y / R, -1.0, 1.0))
    theta = np.angle(dz)
    if z.ndim == 0:
        return float(R), float(psi), float(theta)
    return R, psi, theta


def field_norms(f: ScalarField, region: str = "all"):
    """(L-infinity, L2, y^2-weighted L2) with trapezoid quadrature.

    region "interior" drops boundary-classified nodes from all three norms.
    """
    if region not in ("interior", "all"):
        raise DomainError("region must be 'interior' or 'all'")
    vals = f.values
    w = f.grid.weights()
    if region == "interior":
        mask = f.grid.interior_mask()
        if not mask.any():
            return 0.0, 0.0, 0.0
        vals = np.where(mask, vals, 0.0)
        w = np.where(mask, w, 0.0)
        linf = float(np.max(np.abs(f.values[mask])))
    else:
        linf = float(np.max(np.abs(vals)))
    l2 = float(np.sqrt(np.sum(w * vals ** 2)))
    if f.grid.has_y:
        ysq = f.grid.coords()[-1] ** 2
        wl2 = float(np.sqrt(np.sum(w * ysq * vals ** 2)))
    else:
        wl2 = l2
    return linf, l2, wl2
