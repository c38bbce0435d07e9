import numpy as np
import pytest

from nahmpole import (
    AXISYM_SLAB,
    DomainSpec,
    KnotPoint,
    LIMIT_SURFACE,
    ODE_LINE,
    PLANE_HALF_SPACE,
    TORUS_HALF_CYLINDER,
    DomainError,
    ScalarField,
    build_grid,
    build_grid as bg,
    field_norms,
    spherical_coords,
)
from nahmpole.errors import CoordinateSingularity
from nahmpole.grids import ClusterMap, PowerMap


def _torus_spec(y_max=4.0):
    return DomainSpec(kind=TORUS_HALF_CYLINDER, y_max=y_max, periods=(1.0, 1.0))


def test_ode_line_uniform_spacing():
    g = build_grid(DomainSpec(kind=ODE_LINE, y_max=10.0), 1000, {"y": 1.0})
    assert g.size == 1001
    dy = np.diff(g.y)
    assert np.allclose(dy, 0.01, rtol=0, atol=1e-14)
    assert g.y[0] == 0.0 and g.y[-1] == 10.0


def test_torus_grid_counts_and_grading():
    g = build_grid(_torus_spec(), (32, 32, 64), {"y": 2.0})
    assert g.size == 32 * 32 * 64
    dy = np.diff(g.y)
    ratio = dy[0] / dy[-1]
    # stretch map y = y_max * t^2 on uniform t makes the first cell ~1/127
    # of the last one
    assert ratio == pytest.approx(1.0 / 127.0, rel=0.08)
    assert g.includes_y0
    assert np.all(dy > 0)


def test_torus_boundary_classification():
    g = build_grid(_torus_spec(), (8, 8, 8))
    codes = g.boundary_codes()
    assert (codes == 1).sum() == 64        # y = 0 face
    assert (codes == 3).sum() == 64        # top face
    assert (codes == 2).sum() == 0         # periodic: no lateral faces
    assert codes.shape == g.shape


def test_plane_boundary_classification_edges_prefer_y0():
    spec = DomainSpec(kind=PLANE_HALF_SPACE, y_max=2.0, box=(4.0, 4.0),
                      knots=(KnotPoint(0j, 1),))
    g = build_grid(spec, (8, 8, 8))
    codes = g.boundary_codes()
    # the y=0 face owns its edges with the lateral walls
    assert np.all(codes[:, :, 0] == 1)
    assert np.all(codes[0, :, 1:-1] == 2)
    assert np.all(codes[:, :, -1] >= 2)
    assert (codes == 0).sum() == 6 * 6 * 6


def test_resolution_below_minimum():
    spec = DomainSpec(kind=PLANE_HALF_SPACE, y_max=2.0, box=(4.0, 4.0),
                      knots=(KnotPoint(0j, 1),))
    with pytest.raises(DomainError, match="resolution below minimum"):
        build_grid(spec, (4, 4, 4))


def test_grading_exponent_range():
    with pytest.raises(DomainError, match="grading"):
        build_grid(_torus_spec(), (8, 8, 8), {"y": 5.0})
    with pytest.raises(DomainError):
        build_grid(_torus_spec(), (8, 8, 8), {"y": 0.5})


def test_knot_outside_box_rejected():
    with pytest.raises(DomainError):
        DomainSpec(kind=PLANE_HALF_SPACE, y_max=1.0, box=(2.0, 2.0),
                   knots=(KnotPoint(5.0 + 0j, 1),))


def test_duplicate_knots_rejected():
    with pytest.raises(DomainError):
        DomainSpec(kind=PLANE_HALF_SPACE, y_max=1.0, box=(4.0, 4.0),
                   knots=(KnotPoint(0j, 1), KnotPoint(0j, 2)))


def test_knot_order_positive_integer():
    with pytest.raises(DomainError):
        KnotPoint(0j, 0)


def test_power_map_round_trip():
    gmap = PowerMap(0.0, 4.0, 2.0)
    t = np.linspace(0, 1, 101)
    y = gmap.forward(t)
    assert np.allclose(gmap.inverse(y), t, atol=1e-13)


def test_cluster_map_round_trip():
    gmap = ClusterMap(-2.0, 2.0, (0.3,), 0.25, 3.0)
    t = np.linspace(0, 1, 257)
    x = gmap.forward(t)
    assert np.all(np.diff(x) > 0)
    assert x[0] == pytest.approx(-2.0, abs=1e-12)
    assert x[-1] == pytest.approx(2.0, abs=1e-12)
    back = gmap.inverse(x)
    assert np.max(np.abs(back - t)) < 1e-12


def test_grading_round_trip_on_built_grids():
    g = build_grid(_torus_spec(), (8, 8, 32), {"y": 3.0})
    ax = g.axes[-1]
    t = ax.gmap.inverse(ax.nodes)
    again = ax.gmap.forward(t)
    scale = max(1.0, np.max(np.abs(ax.nodes)))
    assert np.max(np.abs(again - ax.nodes)) / scale < 1e-12


def test_weights_sum_to_measure():
    for spec, res in [
        (_torus_spec(), (16, 8, 24)),
        (DomainSpec(kind=AXISYM_SLAB, y_max=2.0, r_max=3.0,
                    knots=(KnotPoint(0j, 1),)), (16, 16)),
        (DomainSpec(kind=LIMIT_SURFACE, y_max=1.0, periods=(2.0, 1.0)), (16, 12)),
    ]:
        g = build_grid(spec, res)
        w = g.weights()
        assert w.shape == g.shape
        assert np.sum(w) == pytest.approx(g.measure(), rel=1e-10)


def test_field_norm_linear_profile():
    g = build_grid(DomainSpec(kind=ODE_LINE, y_max=1.0), 1000, {"y": 1.0})
    f = ScalarField(g, g.y.copy())
    linf, l2, l2w = field_norms(f)
    assert linf == 1.0
    assert l2 == pytest.approx(1.0 / np.sqrt(3.0), abs=1e-5)
    # weight y^2 turns |y|^2 into y^4: integral 1/5
    assert l2w == pytest.approx(1.0 / np.sqrt(5.0), abs=1e-4)


def test_field_norms_zero_and_constant():
    g = build_grid(_torus_spec(y_max=1.0), (8, 8, 9))
    zero = ScalarField(g, np.zeros(g.shape))
    assert field_norms(zero) == (0.0, 0.0, 0.0)
    one = ScalarField(g, np.ones(g.shape))
    assert field_norms(one)[0] == 1.0


def test_scalar_field_validation():
    g = build_grid(_torus_spec(), (8, 8, 8))
    with pytest.raises(DomainError):
        ScalarField(g, np.zeros((3, 3)))
    bad = np.zeros(g.shape)
    bad[0, 0, 0] = np.nan
    with pytest.raises(DomainError):
        ScalarField(g, bad)


def test_spherical_coords_examples():
    R, psi, th = spherical_coords((1.0 + 0j, 1.0), KnotPoint(0j, 1))
    assert R == pytest.approx(np.sqrt(2))
    assert psi == pytest.approx(np.pi / 4)
    assert th == 0.0
    R, psi, th = spherical_coords((0j, 2.0), KnotPoint(0j, 1))
    assert (R, psi) == (2.0, pytest.approx(np.pi / 2))


def test_spherical_coords_degenerate():
    with pytest.raises(CoordinateSingularity):
        spherical_coords((0.5 + 0j, 0.0), KnotPoint(0.5 + 0j, 1))
    with pytest.raises(DomainError):
        spherical_coords((0.5 + 0j, -1.0), KnotPoint(0j, 1))


def test_spherical_reconstruction_identity():
    rng = np.random.default_rng(7)
    R = 10.0 ** rng.uniform(-6, 6, size=400)
    psi = rng.uniform(0, np.pi / 2, size=400)
    z = R * np.cos(psi)
    Rb, psib, _ = spherical_coords((z + 0j, R * np.sin(psi)), KnotPoint(0j, 1))
    assert np.max(np.abs(Rb - R) / R) < 1e-12
    assert np.max(np.abs(Rb * np.cos(psib) - z) / np.maximum(R, 1e-300)) < 1e-12


def test_without_y0_round_trip():
    g = build_grid(_torus_spec(), (8, 8, 16))
    gu = g.without_y0()
    assert gu.size == 8 * 8 * 15
    assert gu.y[0] > 0
    assert gu.with_y0().size == g.size
    assert not gu.includes_y0


def test_far_field_degree_autofill():
    spec = DomainSpec(kind=PLANE_HALF_SPACE, y_max=2.0, box=(6.0, 6.0),
                      knots=(KnotPoint(0j, 2), KnotPoint(1.0 + 0j, 1)))
    assert spec.far_field_degree == 3
    with pytest.raises(DomainError):
        DomainSpec(kind=PLANE_HALF_SPACE, y_max=2.0, box=(6.0, 6.0),
                   knots=(KnotPoint(0j, 2),), far_field_degree=5)


def test_alias_import_is_same():
    assert bg is build_grid
