import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from singular_ma import geometry as geo
from singular_ma.checks import crease_fixture, small_instances


def grid(n=9, lo=-1.0, hi=1.0):
    x = np.linspace(lo, hi, n)
    X, Y = np.meshgrid(x, x)
    return np.c_[X.ravel(), Y.ravel()]


def convex_data(seed, m):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, size=(m, 2))
    planes = rng.normal(size=(4, 3))
    vals = 0.5 * (pts ** 2).sum(axis=1) + np.max(pts @ planes[:, :2].T + planes[:, 2], axis=1)
    return pts, vals


# ---------------------------------------------------------------------------
# hull and evaluation


def test_cone_five_nodes():
    nodes = np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1.0]])
    f = geo.build_pl(nodes, np.array([0, 1, 1, 1, 1.0]))
    assert list(f.interior_nodes) == [0]
    assert geo.ma_measure(f).mass_at(0) == pytest.approx(4.0, abs=1e-14)
    np.testing.assert_allclose(sorted(map(tuple, geo.subgradient_cells(f)[0])),
                               [(-1, -1), (-1, 1), (1, -1), (1, 1)], atol=1e-14)


def test_octagon_cone_mass():
    # facet gradients are the unit vectors at angles k pi / 4: a regular octagon
    t = np.pi / 4 * np.arange(8) + np.pi / 8
    nodes = np.vstack([[0, 0], np.c_[np.cos(t), np.sin(t)]])
    f = geo.build_pl(nodes, np.r_[0.0, np.full(8, np.cos(np.pi / 8))])
    assert geo.cell_areas(f)[0] == pytest.approx(2 * math.sqrt(2), abs=1e-13)


def test_interpolates_affine_data():
    nodes = grid(5)
    vals = 2 * nodes[:, 0] - nodes[:, 1] + 0.5
    f = geo.build_pl(nodes, vals)
    x = np.array([[0.1, 0.3], [-0.77, 0.2]])
    np.testing.assert_allclose(f(x), 2 * x[:, 0] - x[:, 1] + 0.5, atol=1e-12)
    np.testing.assert_allclose(geo.cell_areas(f)[f.interior_nodes], 0.0, atol=1e-14)


def test_outside_domain_is_nan():
    f = geo.build_pl(grid(3), np.zeros(9))
    assert np.isnan(f(np.array([[2.0, 0.0]]))[0])
    assert not f.contains(np.array([[1.5, 0.0]]))[0]


def test_nonconvex_data_rejected():
    nodes = grid(3)
    vals = np.zeros(9)
    vals[4] = 1.0
    with pytest.raises(geo.ConvexityError):
        geo.build_pl(nodes, vals)


def test_degenerate_nodes_rejected():
    with pytest.raises(geo.DegenerateNodesError):
        geo.build_pl(np.array([[0, 0], [1, 1], [2, 2.0]]), np.zeros(3))
    with pytest.raises(geo.DegenerateNodesError):
        geo.build_pl(np.zeros((2, 2)), np.zeros(2))
    with pytest.raises(ValueError):
        geo.build_pl(grid(3), np.full(9, np.nan))


def test_boundary_mask_detects_hull():
    f = geo.build_pl(grid(5), np.zeros(25))
    assert f.boundary_mask.sum() == 16
    assert f.mesh_size == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# cells against brute force


@pytest.mark.parametrize("name,nodes,vals", small_instances(), ids=lambda x: x
                         if isinstance(x, str) else "")
def test_shipped_instances_match_halfplanes(name, nodes, vals):
    f = geo.build_pl(nodes, vals)
    areas = geo.cell_areas(f)
    for i in f.interior_nodes:
        brute = geo._polygon_area(geo.halfplane_cell(nodes, vals, i))
        assert abs(areas[i] - brute) <= 1e-10


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10 ** 6), st.integers(6, 30))
def test_cells_match_halfplanes_random(seed, m):
    nodes, vals = convex_data(seed, m)
    try:
        f = geo.build_pl(nodes, vals)
    except geo.DegenerateNodesError:
        assume(False)
    areas = geo.cell_areas(f)
    for i in f.interior_nodes:
        brute = geo._polygon_area(geo.halfplane_cell(nodes, vals, i))
        assert abs(areas[i] - brute) <= 1e-9 * max(1.0, brute)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(8, 40))
def test_masses_fill_gradient_image(seed, m):
    nodes, vals = convex_data(seed, m)
    f = geo.build_pl(nodes, vals)
    meas = geo.ma_measure(f)
    total = meas.masses.sum() + meas.boundary_masses.sum()
    image = geo._polygon_area(geo.gradient_image(f))
    assert total == pytest.approx(image, rel=1e-9, abs=1e-12)
    assert np.all(meas.masses >= -1e-12)


@settings(max_examples=30, deadline=None)
@given(arrays(float, 3, elements=st.floats(-3, 3)), st.integers(0, 1000))
def test_adding_affine_keeps_measure(coef, seed):
    nodes, vals = convex_data(seed, 25)
    f = geo.build_pl(nodes, vals)
    g = geo.build_pl(nodes, vals + nodes @ coef[:2] + coef[2])
    np.testing.assert_allclose(geo.cell_areas(g)[g.interior_nodes],
                               geo.cell_areas(f)[f.interior_nodes], atol=1e-9)


def test_paraboloid_cells_are_grid_squares():
    nodes = grid(9)
    f = geo.build_pl(nodes, 0.5 * (nodes ** 2).sum(axis=1))
    np.testing.assert_allclose(geo.cell_areas(f)[f.interior_nodes], 0.25 ** 2, rtol=1e-10)


def test_clip_halfplane():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]])
    half = geo.clip_halfplane(sq, np.array([1.0, 0.0]), 0.5)
    assert geo._polygon_area(half) == pytest.approx(0.5)
    assert len(geo.clip_halfplane(sq, np.array([1.0, 0.0]), -1.0)) == 0


def test_hull_edges_dual_lengths():
    nodes = grid(3)
    f = geo.build_pl(nodes, 0.5 * (nodes ** 2).sum(axis=1))
    i, j, dual = geo.hull_edges(f)
    assert np.all(i < j)
    # grid edges between axis neighbours have dual edges of length h = 1
    axis = np.isclose(np.linalg.norm(nodes[i] - nodes[j], axis=1), 1.0)
    np.testing.assert_allclose(dual[axis], 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# conjugates


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_double_conjugate_returns_function(seed):
    nodes, vals = convex_data(seed, 20)
    f = geo.build_pl(nodes, vals)
    back = geo.legendre_pl(geo.legendre_pl(f), at=f.nodes)
    vert = f.vertex_mask
    np.testing.assert_allclose(back.values[vert], f.values[vert], atol=1e-9)


def test_conjugate_of_cone_is_flat():
    nodes = np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1.0]])
    f = geo.build_pl(nodes, np.array([0, 1, 1, 1, 1.0]))
    dual = geo.legendre_pl(f)
    np.testing.assert_allclose(dual.values, 0.0, atol=1e-12)
    back = geo.legendre_pl(dual, at=nodes)
    np.testing.assert_allclose(back.values, f.values, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), arrays(float, 2, elements=st.floats(-2, 2)))
def test_fenchel_young(seed, p):
    nodes, vals = convex_data(seed, 15)
    star = geo.conjugate_values(nodes, vals, p)[0]
    assert np.all(vals + star >= nodes @ p - 1e-12)


# ---------------------------------------------------------------------------
# contact sets


def test_crease_is_degenerate():
    f = crease_fixture()
    on_line = np.abs(f.nodes[:, 0]) < 1e-12
    flags = geo.strict_convexity_region(f)
    assert not flags[on_line & ~f.boundary_mask].any()
    rep = geo.contact_set(f, [0.0, 0.3])
    assert rep.diameter == pytest.approx(2.0)


def test_paraboloid_is_strict_everywhere():
    nodes = grid(11)
    f = geo.build_pl(nodes, 0.5 * (nodes ** 2).sum(axis=1))
    assert geo.strict_convexity_region(f).all()
    chk = geo.check_strict_convexity(f, [[0.0, 0.0]])
    assert chk.passed and len(chk.checked) > 0


def test_cone_contact_at_apex():
    f = crease_fixture()
    rep = geo.contact_set(f, [0.6, 0.0])
    assert np.all(f.nodes[rep.contact, 0] >= 0)


def test_contact_outside_domain():
    with pytest.raises(ValueError):
        geo.contact_set(crease_fixture(), [3.0, 0.0])


def test_distance_to_hull():
    d = geo.distance_to_hull([[0, 2.0], [3.0, 0.0], [0.5, 0.0]], [[-1, 0], [1, 0]])
    np.testing.assert_allclose(d, [2.0, 2.0, 0.0], atol=1e-14)
