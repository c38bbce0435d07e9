"""Explicit super/subsolution pairs bracketing the remainder v.

The upper barrier is a nodal minimum of smooth comparison profiles, each a
supersolution of the remainder equation in the region where it attains the
minimum; the lower barrier is its negative.  Because the stiffness matrix
has nonpositive off-diagonal entries, evaluating the discrete operator on
the composite field bounds each constituent's one-sided value from below
on the upper barrier (and from above on the lower), so a clean sign report
on the composite certifies the pair.

Away from knots the pair is

    v+ = min( A y^eps,  A' e^{-eps y} ),     v- = -v+,

and with knots present the wall power weakens to eps/2 and each knot adds
a cone profile A R^eps mu0(psi) built from the ground state mu0 of its
hemisphere link operator,

    v+ = min( A_j R_j^eps mu0_j(psi_j),  A' y^{eps/2},  A'' e^{-eps y} ).

eps must stay below every knot's first indicial rate delta_plus and below
1; the exponential constituent additionally needs 2 cplus >= eps^2 where
it is active, which bounds eps by the coefficient field on knotless
domains and is met by default amplitude ratios otherwise.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grids import ScalarField
from .models import eval_Sn
from .spectral import eigen_J


@dataclass(frozen=True)
class BarrierPair:
    """Ordered sub/supersolution fields with the parameters that built them.

    Both fields live on the solve grid (including the y = 0 face) and must
    vanish there, since the remainder carries homogeneous wall data.
    """

    v_minus: ScalarField
    v_plus: ScalarField
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = self.v_minus.values, self.v_plus.values
        if lo.shape != hi.shape:
            raise DomainError("barrier fields have mismatched shapes %s, %s"
                              % (lo.shape, hi.shape))
        if np.any(lo > hi):
            raise DomainError("barrier ordering violated: v_minus exceeds "
                              "v_plus at %d nodes" % int(np.sum(lo > hi)))
        grid = self.v_plus.grid
        if grid.has_y and grid.includes_y0:
            worst = max(float(np.max(np.abs(lo[..., 0]))),
                        float(np.max(np.abs(hi[..., 0]))))
            if worst > 1e-12:
                raise DomainError("barriers must vanish on the y = 0 face; "
                                  "found |v| up to %.3e there" % worst)

    @property
    def upper(self):
        return self.v_plus.values.reshape(-1)

    @property
    def lower(self):
        return self.v_minus.values.reshape(-1)


@dataclass
class BarrierCheck:
    """Signs of the discrete operator on a barrier pair."""

    min_upper: float
    max_lower: float
    upper_violations: np.ndarray
    lower_violations: np.ndarray
    checked: int

    @property
    def clean(self):
        return self.upper_violations.size == 0 \
            and self.lower_violations.size == 0

    def __str__(self):
        return ("BarrierCheck(min N(v+) = %.3e, max N(v-) = %.3e, "
                "violations %d/%d over %d nodes)"
                % (self.min_upper, self.max_lower,
                   self.upper_violations.size, self.lower_violations.size,
                   self.checked))


def verify_barrier(problem, pair):
    """Evaluate the discrete operator on both barriers and report signs.

    Sign violations (N-hat(v+) < 0 or N-hat(v-) > 0 at an interior node)
    are collected with their flat node indices, never raised.  The
    composite fields are evaluated directly: at a kink node the active
    constituent sees its neighbors through the other constituents' values,
    which only improves its one-sided margin.
    """
    if pair.v_plus.grid.shape != problem.grid.shape:
        raise DomainError("barrier fields live on grid %s but the problem "
                          "grid is %s" % (pair.v_plus.grid.shape,
                                          problem.grid.shape))
    interior = problem.interior
    rp = problem.residual(pair.upper)
    rm = problem.residual(pair.lower)
    up_bad = np.flatnonzero(interior & (rp < 0.0))
    lo_bad = np.flatnonzero(interior & (rm > 0.0))
    return BarrierCheck(min_upper=float(np.min(rp[interior])),
                        max_lower=float(np.max(rm[interior])),
                        upper_violations=up_bad,
                        lower_violations=lo_bad,
                        checked=int(np.sum(interior)))


def _pad_wall(grid, inner_values, wall_value=0.0):
    """Extend a field from the y > 0 grid onto the face-including grid."""
    out = np.empty(grid.shape)
    out[..., 0] = wall_value
    out[..., 1:] = inner_values
    return out


def knot_spectra(frames, spectra=None, resolution=512):
    """Ground-state spectra per distinct knot order, computed once."""
    table = dict(spectra) if spectra else {}
    for fr in frames:
        n = fr.knot.order
        if n not in table:
            table[n] = eigen_J(n, count=1, resolution=resolution)
    return table


def build_barriers(problem, eps=None, amp_knot=None, amp_wall=None,
                   amp_far=None, spectra=None, scan=True, max_scans=12):
    """Construct and (by default) calibrate a barrier pair for a problem.

    Amplitudes left unset are seeded from per-node comparison bounds and
    then calibrated against verify_barrier.  The wall power enters both
    barrier signs linearly in its amplitude, so violations where it is
    active are cured by scaling up.  The cone amplitude lives in a
    computed window: its upper-barrier margin grows linearly, but the
    lower-barrier compensation is quadratic in the amplitude and always
    binds near the wall, where the cone undercuts every other
    constituent, so the seed sits near the top of the window and cone
    violations on the lower side shrink the amplitude.  The exponential
    constituent saturates on the lower barrier too: a violation where it
    is active means eps is too large for the coefficient field, and the
    calibration shrinks eps instead of inflating the amplitude.  A pair
    that still fails after the retries is returned with a warning, never
    silently accepted.

    An explicit eps outside (0, min(1, delta_plus floor over knots)) is an
    error that cites the computed indicial rates; an explicit eps is never
    shrunk automatically.
    """
    model = getattr(problem, "model", None)
    if model is None:
        raise DomainError("problem carries no spliced model; assemble it "
                          "through assemble_problem")
    grid = problem.grid
    frames = model.frames
    table = knot_spectra(frames, spectra)
    rates = {n: s.delta_plus() for n, s in table.items()}
    floor = min(rates.values()) if rates else math.inf
    bound = min(1.0, floor)

    interior = problem.interior
    cp = problem.cplus[interior]
    eps_fixed = eps is not None
    if eps_fixed and not (0.0 < eps < bound):
        raise DomainError(
            "eps = %.4g outside the admissible interval (0, %.4g); "
            "knot indicial rates delta_plus: %s"
            % (eps, bound,
               {n: round(r, 6) for n, r in sorted(rates.items())} or "none"))
    if eps is None:
        eps = 0.5 * bound if math.isfinite(bound) else 0.5
        if not frames:
            # the exponential constituent needs 2 cplus > eps^2 with room
            # for its saturating lower-side compensation
            cap = 0.8 * math.sqrt(max(float(np.min(2.0 * cp)), 0.0))
            if cap > 0:
                eps = min(eps, cap)

    y = np.asarray(grid.y, dtype=float)
    y_max = float(y[-1])
    ycol = np.broadcast_to(y.reshape((1,) * (grid.ndim - 1) + (-1,)),
                           grid.shape).reshape(-1)
    f_int = np.abs(problem.f[interior])
    # inner-grid view of the interior mask, aligned with the knot frames
    mask_in = interior.reshape(grid.shape)[..., 1:]
    f_in = problem.f.reshape(grid.shape)[..., 1:][mask_in]
    cp_in = problem.cplus.reshape(grid.shape)[..., 1:][mask_in]

    mus = {}
    for fr in frames:
        spec = table[fr.knot.order]
        peak = float(np.max(spec.eigenfunctions[0]))
        mus[id(fr)] = np.asarray(spec.mu0(fr.psi)) / peak

    def cone_window(eps_now):
        """Shared amplitude range admissible for every cone constituent.

        At each interior node the cone A R^eps mu0 must satisfy

            glin A + f >= 0                               (upper barrier)
            2 cplus (R^eps mu0)^2 A^2 - glin A + f <= 0   (lower barrier)

        where glin = R^(eps-2) mu0 (lam0 - eps(eps+1) - T + 2 cplus R^2)
        is the exact linearized margin (T the model link potential) and
        the lower side uses e^{-2w} - 1 + 2w <= 2 w^2.  The lower side is
        quadratic in A, so near the wall, where the cone always undercuts
        the other constituents, the amplitude is capped; the window
        intersects both conditions over all interior nodes.  Nodes that
        admit no amplitude at all (possible between knots, where another
        knot's coefficient decay spoils this cone's margin) are excluded
        and counted; if they surface as violations the scan warns.
        """
        lo_all, hi_all, excluded = 0.0, math.inf, 0
        ee = eps_now * (eps_now + 1.0)
        for fr in frames:
            n = fr.knot.order
            lam0 = table[n].eigenvalues[0]
            R = fr.R[mask_in]
            psi = fr.psi[mask_in]
            mu = mus[id(fr)][mask_in]
            T = 2.0 * np.cos(psi) ** (2 * n) \
                * ((n + 1.0) / eval_Sn(n, psi)) ** 2 / np.sin(psi) ** 2
            g = R ** (eps_now - 2.0) * mu \
                * (lam0 - ee - T + 2.0 * cp_in * R * R)
            a2 = 2.0 * cp_in * (R ** eps_now * mu) ** 2
            lo = np.zeros(f_in.shape)
            hi = np.full(f_in.shape, np.inf)
            quad = a2 > 0.0
            disc = g ** 2 - 4.0 * a2 * f_in
            m = quad & (disc >= 0.0)
            sq = np.sqrt(disc[m])
            lo[m] = (g[m] - sq) / (2.0 * a2[m])
            hi[m] = (g[m] + sq) / (2.0 * a2[m])
            bad = quad & (disc < 0.0)
            gp = g > 0.0
            ml = ~quad & gp
            lo[ml] = np.maximum(f_in[ml] / g[ml], 0.0)
            bad |= ~quad & ~gp
            # upper side: margin linear in A, binding where f < 0
            lo[gp] = np.maximum(lo[gp], -f_in[gp] / g[gp])
            m2 = (g < 0.0) & (f_in > 0.0)
            hi[m2] = np.minimum(hi[m2], f_in[m2] / (-g[m2]))
            bad |= (g < 0.0) & (f_in <= 0.0)
            good = ~bad
            excluded += int(np.sum(bad))
            if np.any(good):
                lo_all = max(lo_all, float(np.max(lo[good])))
                hi_all = min(hi_all, float(np.min(hi[good])))
        return lo_all, hi_all, excluded

    k_window = (0.0, math.inf, 0)

    def tether(eps_now, a_wall):
        # ties the wall power at the top and exceeds it strictly below,
        # keeping the exponential inactive in the interior: near knot axes
        # the coefficient vanishes and the exponential has no sign margin
        wall_pow = 0.5 * eps_now if frames else eps_now
        return a_wall * y_max ** wall_pow * math.exp(eps_now * y_max)

    def seeds(eps_now):
        nonlocal k_window
        wall_pow = 0.5 * eps_now if frames else eps_now
        yi = ycol[interior]
        # per-node supersolution requirement of the wall power alone,
        # via the linear lower bound e^{2v} - 1 >= 2v
        den = wall_pow * (1.0 - wall_pow) * yi ** (wall_pow - 2.0) \
            + 2.0 * cp * yi ** wall_pow
        a_wall = max(1.0, 1.25 * float(np.max(f_int / den)))
        a_knot = a_wall
        if frames:
            k_window = cone_window(eps_now)
            k_lo, k_hi = k_window[0], k_window[1]
            if not math.isfinite(k_hi):
                a_knot = max(1.0, 2.0 * k_lo)
            elif 1.25 * k_lo <= 0.8 * k_hi:
                a_knot = 0.8 * k_hi
            elif k_lo <= k_hi:
                a_knot = 0.5 * (k_lo + k_hi)
            else:
                # empty window; sit at the cap and let the scan report
                a_knot = max(k_hi, 1e-6)
            a_far = tether(eps_now, a_wall)
        else:
            margin = 2.0 * cp - eps_now ** 2
            if float(np.min(margin)) > 0.0:
                a_far = max(1.0, 1.25 * float(
                    np.max(f_int * np.exp(eps_now * yi) / margin)))
            else:
                a_far = a_wall
        return a_knot, a_wall, a_far

    def assemble(eps_now, a_knot, a_wall, a_far):
        wall_pow = 0.5 * eps_now if frames else eps_now
        stack = [(a_wall * ycol ** wall_pow).reshape(grid.shape),
                 (a_far * np.exp(-eps_now * ycol)).reshape(grid.shape)]
        for fr in frames:
            cone = a_knot * fr.R ** eps_now * mus[id(fr)]
            stack.append(_pad_wall(grid, cone))
        stack = np.stack([p.reshape(-1) for p in stack])
        active = np.argmin(stack, axis=0)
        vp = stack[active, np.arange(stack.shape[1])].reshape(grid.shape)
        vp[..., 0] = 0.0
        params = {"eps": eps_now, "amp_knot": a_knot, "amp_wall": a_wall,
                  "amp_far": a_far, "delta_plus": dict(rates)}
        if frames:
            params["knot_window"] = k_window[:2]
            if k_window[2]:
                params["window_excluded"] = k_window[2]
        pair = BarrierPair(
            v_minus=ScalarField(grid, -vp, "v_minus"),
            v_plus=ScalarField(grid, vp, "v_plus"),
            params=params)
        return pair, active

    auto_knot, auto_wall, auto_far = amp_knot is None, amp_wall is None, \
        amp_far is None
    rounds = 1 if eps_fixed else 5
    check = None
    pair = None
    for _ in range(rounds):
        sk, sw, sf = seeds(eps)
        a_knot = sk if auto_knot else amp_knot
        a_wall = sw if auto_wall else amp_wall
        a_far = sf if auto_far else amp_far
        pair, active = assemble(eps, a_knot, a_wall, a_far)
        if not scan:
            return pair
        shrink_eps = False
        for attempt in range(max_scans):
            check = verify_barrier(problem, pair)
            if check.clean:
                pair.params["scans"] = attempt
                return pair
            up_hit = set(active[check.upper_violations].tolist())
            lo_hit = set(active[check.lower_violations].tolist())
            if 1 in lo_hit and not eps_fixed and not frames:
                # lower-side failure where the exponential is active:
                # its compensation saturates, no amplitude helps
                shrink_eps = True
                break
            grew = False
            if 0 in (up_hit | lo_hit):
                a_wall *= 2.0
                grew = True
                if frames and auto_far:
                    a_far = tether(eps, a_wall)
            cone_up = any(i >= 2 for i in up_hit)
            cone_lo = any(i >= 2 for i in lo_hit)
            if cone_up and cone_lo:
                break  # no shared amplitude serves both sides
            if cone_up:
                # linear side: amplitude growth quenches it, the window
                # cap only guards the saturating lower side
                new = min(2.0 * a_knot, 0.95 * k_window[1])
                if new > a_knot:
                    a_knot, grew = new, True
            elif cone_lo:
                new = max(0.7 * a_knot, k_window[0])
                if new < a_knot:
                    a_knot, grew = new, True
            if 1 in up_hit or (1 in lo_hit and eps_fixed):
                a_far *= 2.0
                grew = True
            if not grew:
                break
            pair, active = assemble(eps, a_knot, a_wall, a_far)
        if shrink_eps:
            eps *= 0.6
            continue
        break
    pair.params["scans"] = max_scans
    if check is not None and not check.clean:
        warnings.warn("barrier calibration left %d upper / %d lower sign "
                      "violations (min N(v+) = %.3e, max N(v-) = %.3e)"
                      % (check.upper_violations.size,
                         check.lower_violations.size,
                         check.min_upper, check.max_lower), stacklevel=2)
    return pair
