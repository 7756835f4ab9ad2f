import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from singular_ma.mesh import graded_polygon_mesh, polygon_mesh, regular_polygon


def test_regular_polygon_vertices():
    P = regular_polygon(64, 2.0)
    np.testing.assert_allclose(np.linalg.norm(P, axis=1), 2.0)
    with pytest.raises(ValueError):
        regular_polygon(2)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.03, 0.3), st.integers(3, 40))
def test_mesh_spacing_and_boundary(h, sides):
    poly = regular_polygon(sides)
    m = polygon_mesh(poly, h)
    b = m.nodes[m.boundary_mask]
    edge = np.linalg.norm(np.diff(np.vstack([b, b[:1]]), axis=0), axis=1)
    assert edge.max() <= h * (1 + 1e-9)
    # boundary nodes lie on the polygon, interior nodes strictly inside
    assert np.all(np.linalg.norm(m.nodes[~m.boundary_mask], axis=1) < 1.0)


def test_forced_points_come_first():
    pts = [[0.013, -0.2], [0.4, 0.41]]
    m = polygon_mesh(regular_polygon(64), 0.1, pts)
    np.testing.assert_array_equal(m.nodes[:2], pts)
    assert list(m.forced) == [0, 1]
    d = np.linalg.norm(m.nodes[2:][:, None] - np.array(pts)[None], axis=2)
    assert d.min() >= 0.05 - 1e-12


def test_forced_point_outside_rejected():
    with pytest.raises(ValueError):
        polygon_mesh(regular_polygon(8), 0.1, [[2.0, 0.0]])


def test_nonconvex_polygon_rejected():
    with pytest.raises(ValueError):
        polygon_mesh([[0, 0], [1, 0], [0.2, 0.2], [0, 1]], 0.1)


def test_graded_rings():
    m = graded_polygon_mesh(regular_polygon(64), 0.05, [[0.0, 0.0]], r_min=1e-4)
    r = np.linalg.norm(m.nodes, axis=1)
    assert r[0] == 0.0
    assert r[1:].min() == pytest.approx(1e-4)
    assert len(m) > len(polygon_mesh(regular_polygon(64), 0.05, [[0.0, 0.0]]))
