"""Node sets for convex polygonal domains."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, cKDTree


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray          # (N, 2)
    boundary_mask: np.ndarray  # (N,) bool
    polygon: np.ndarray        # (V, 2) counter-clockwise
    h: float
    forced: np.ndarray         # indices of nodes placed at requested points

    @property
    def interior(self):
        return np.flatnonzero(~self.boundary_mask)

    @property
    def boundary(self):
        return np.flatnonzero(self.boundary_mask)

    def __len__(self):
        return len(self.nodes)


def regular_polygon(sides: int, radius: float = 1.0, center=(0.0, 0.0), phase: float = 0.0):
    """Vertices of a regular polygon inscribed in a circle, counter-clockwise."""
    if sides < 3:
        raise ValueError("a polygon needs at least three sides")
    t = phase + 2 * np.pi * np.arange(sides) / sides
    return np.asarray(center, float) + radius * np.c_[np.cos(t), np.sin(t)]


def _ccw(polygon):
    poly = np.asarray(polygon, dtype=float)
    hull = ConvexHull(poly)
    if len(hull.vertices) != len(poly):
        raise ValueError("domain polygon must be strictly convex")
    return poly[hull.vertices]


def _signed_distance(points, poly):
    """Distance to the boundary, positive inside a counter-clockwise polygon."""
    e = np.roll(poly, -1, axis=0) - poly
    n = np.c_[e[:, 1], -e[:, 0]] / np.linalg.norm(e, axis=1)[:, None]
    return -((points[:, None, :] - poly[None]) * n[None]).sum(axis=2).max(axis=1)


def _boundary_nodes(poly, h):
    pts = []
    for k in range(len(poly)):
        a, b = poly[k], poly[(k + 1) % len(poly)]
        m = max(1, int(np.ceil(np.linalg.norm(b - a) / h - 1e-9)))
        t = np.arange(m)[:, None] / m
        pts.append(a + t * (b - a))
    return np.vstack(pts)


def _assemble(poly, boundary, interior, forced_pts, h):
    nodes = np.vstack([interior, boundary])
    mask = np.r_[np.zeros(len(interior), bool), np.ones(len(boundary), bool)]
    forced = np.arange(len(forced_pts))
    return Mesh(nodes, mask, poly, float(h), forced)


def polygon_mesh(polygon, h: float, points=()) -> Mesh:
    """Grid of spacing ``h`` aligned with the origin, clipped to a polygon.

    Grid nodes closer than ``h/2`` to the boundary are dropped, boundary edges
    are subdivided into pieces no longer than ``h``, and every point in
    ``points`` becomes a node (nearby grid nodes are removed to make room).
    Forced nodes come first, so ``mesh.forced[i] == i``.
    """
    if h <= 0:
        raise ValueError("mesh size must be positive")
    poly = _ccw(polygon)
    lo = np.floor(poly.min(axis=0) / h) * h
    hi = poly.max(axis=0)
    xs = np.arange(lo[0], hi[0] + h / 2, h)
    ys = np.arange(lo[1], hi[1] + h / 2, h)
    X, Y = np.meshgrid(xs, ys)
    grid = np.c_[X.ravel(), Y.ravel()]
    grid = grid[_signed_distance(grid, poly) > 0.5 * h - 1e-12 * h]
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts):
        if np.any(_signed_distance(pts, poly) <= 0):
            raise ValueError("forced points must lie strictly inside the domain")
        d, _ = cKDTree(pts).query(grid)
        grid = grid[d > 0.5 * h - 1e-12 * h]
    interior = np.vstack([pts, grid])
    return _assemble(poly, _boundary_nodes(poly, h), interior, pts, h)


def graded_polygon_mesh(polygon, h: float, points, r_min: float = 1e-3,
                        ring_nodes: int = 32) -> Mesh:
    """Uniform grid away from ``points``, geometric polar rings near them.

    Around each point, rings of ``ring_nodes`` nodes sit at radii growing by a
    constant factor from ``r_min`` until the ring spacing reaches ``h``. The
    factor is chosen so cells stay close to square.
    """
    poly = _ccw(polygon)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    q = 1.0 + 2 * np.pi / ring_nodes
    r_out = h * ring_nodes / (2 * np.pi)
    radii = r_min * q ** np.arange(int(np.ceil(np.log(r_out / r_min) / np.log(q))) + 1)
    base = polygon_mesh(poly, h)
    grid = base.nodes[~base.boundary_mask]
    rings = []
    for k, p in enumerate(pts):
        d, _ = cKDTree(pts).query(p, k=min(2, len(pts)))
        gap = np.atleast_1d(d)[-1] if len(pts) > 1 else np.inf
        rk = radii[radii < min(r_out, 0.45 * gap)]
        if len(rk) == 0:
            continue
        phase = 0.5 * np.pi / ring_nodes * (np.arange(len(rk)) % 2)
        t = phase[:, None] + 2 * np.pi * np.arange(ring_nodes)[None, :] / ring_nodes
        ring = p + (rk[:, None, None] * np.stack([np.cos(t), np.sin(t)], axis=-1)).reshape(-1, 2)
        rings.append(ring)
        grid = grid[np.linalg.norm(grid - p, axis=1) > rk[-1] + 0.5 * h]
    rings = np.vstack(rings) if rings else np.zeros((0, 2))
    if len(rings):
        inside = _signed_distance(rings, poly) > 0.5 * h
        rings = rings[inside]
    interior = np.vstack([pts, rings, grid])
    return _assemble(poly, _boundary_nodes(poly, h), interior, pts, h)
