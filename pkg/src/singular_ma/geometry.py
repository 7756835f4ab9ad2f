"""Piecewise-linear convex functions on planar node sets.

A PL convex function is the lower convex envelope of lifted points
``(x_i, u_i)``. Its Monge-Ampere measure is purely atomic: the mass at an
interior node is the area of the subgradient cell, i.e. the convex polygon
spanned by the gradients of the facets incident to that node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree
from scipy.spatial.distance import pdist

HULL_TOL = 1e-9
_FACET_EPS = 1e-12


class ConvexityError(ValueError):
    """Node values are not in convex position."""


class DegenerateNodesError(ValueError):
    """Fewer than three affinely independent nodes."""


@dataclass(frozen=True, eq=False)
class LowerHull:
    simplices: np.ndarray   # (F, 3) node indices
    gradients: np.ndarray   # (F, 2)
    intercepts: np.ndarray  # (F,)

    def planes_at(self, facets, x):
        return np.einsum("fk,fk->f", self.gradients[facets], x) + self.intercepts[facets]


def lower_hull(nodes, values) -> LowerHull:
    """Lower facets of the lifted point set ``(x, y, u)``.

    A sentinel point far above the centroid makes the hull full-dimensional
    even for affine data; facets touching it are discarded.
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    span = float(np.ptp(nodes, axis=0).max())
    lift = float(np.ptp(values)) + span + 1.0
    top = np.r_[nodes.mean(axis=0), values.max() + lift]
    pts = np.vstack([np.c_[nodes, values], top])
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateNodesError("nodes are collinear") from exc
    eq = hull.equations
    keep = (eq[:, 2] < -_FACET_EPS) & ~np.any(hull.simplices == len(nodes), axis=1)
    eq = eq[keep]
    grads = -eq[:, :2] / eq[:, 2:3]
    icpt = -eq[:, 3] / eq[:, 2]
    simp = hull.simplices[keep]
    # orient counter-clockwise in the plane
    p = nodes[simp]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - \
            (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    flip = cross < 0
    simp[flip] = simp[flip][:, [0, 2, 1]]
    return LowerHull(simp.astype(np.intp), grads, icpt)


def _polygon_area(poly) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def clip_halfplane(poly, normal, offset):
    """Clip a convex polygon to ``{p : normal . p <= offset}``."""
    if len(poly) == 0:
        return poly
    s = poly @ normal - offset
    inside = s <= 0
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    out = []
    m = len(poly)
    for k in range(m):
        a, b = poly[k], poly[(k + 1) % m]
        sa, sb = s[k], s[(k + 1) % m]
        if sa <= 0:
            out.append(a)
        if (sa <= 0) != (sb <= 0):
            t = sa / (sa - sb)
            out.append(a + t * (b - a))
    return np.array(out)


def halfplane_cell(nodes, values, i, start=None):
    """Subgradient set of the envelope at node ``i`` by brute force.

    Intersects ``{p : u_i + p.(x_j - x_i) <= u_j}`` over every other node,
    starting from ``start`` (default: a box large enough to hold any bounded
    cell). Used as an independent check of the facet-based cells.
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    d = nodes - nodes[i]
    du = values - values[i]
    others = np.arange(len(nodes)) != i
    if start is None:
        # moving distance delta along p stays in the hull, so
        # |p| delta <= max(u) - u_i for any subgradient p
        eq = ConvexHull(nodes).equations
        delta = float(-(eq[:, :2] @ nodes[i] + eq[:, 2]).max())
        if delta <= 0:
            raise ValueError("brute-force cells need an interior node")
        B = 2.0 * (values.max() - values[i]) / delta + 1.0
        start = np.array([[-B, -B], [B, -B], [B, B], [-B, B]])
    poly = np.asarray(start, dtype=float)
    for j in np.flatnonzero(others):
        poly = clip_halfplane(poly, d[j], du[j])
    return poly


@dataclass
class MAMeasure:
    """Atomic Monge-Ampere measure of a PL convex function.

    ``masses[k]`` is the cell area of interior node ``interior[k]``; boundary
    cells are unbounded and reported clipped to the gradient image.
    """

    interior: np.ndarray
    masses: np.ndarray
    boundary: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    boundary_masses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    per_cell: Optional[np.ndarray] = None

    @property
    def atoms(self):
        return [(int(i), float(m)) for i, m in zip(self.interior, self.masses)]

    @property
    def total_mass(self) -> float:
        extra = 0.0 if self.per_cell is None else float(np.sum(self.per_cell))
        return float(np.sum(self.masses)) + extra

    def mass_at(self, node: int) -> float:
        hit = np.flatnonzero(self.interior == node)
        if hit.size == 0:
            raise KeyError(f"node {node} is not an interior node")
        return float(self.masses[hit[0]])


class PLConvexFunction:
    """Lower convex envelope of ``(nodes, values)`` with cached hull data.

    Construct through :func:`build_pl`, which validates convex position.
    """

    def __init__(self, nodes, values, hull: LowerHull, boundary_mask):
        self.nodes = np.asarray(nodes, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.hull = hull
        self.boundary_mask = np.asarray(boundary_mask, dtype=bool)
        self._centroids = self.nodes[hull.simplices].mean(axis=1)
        self._tree = None
        self._domain = None

    def __len__(self):
        return len(self.nodes)

    @property
    def interior_nodes(self):
        return np.flatnonzero(~self.boundary_mask)

    @property
    def boundary_nodes(self):
        return np.flatnonzero(self.boundary_mask)

    @property
    def vertex_mask(self):
        mask = np.zeros(len(self.nodes), bool)
        mask[self.hull.simplices.ravel()] = True
        return mask

    @property
    def mesh_size(self) -> float:
        """Largest nearest-neighbour distance between nodes."""
        d, _ = cKDTree(self.nodes).query(self.nodes, k=2)
        return float(d[:, 1].max())

    @property
    def domain(self) -> np.ndarray:
        """Vertices of the node hull, counter-clockwise."""
        if self._domain is None:
            ch = ConvexHull(self.nodes)
            self._domain = self.nodes[ch.vertices]
        return self._domain

    def contains(self, x, tol=1e-12):
        x = np.atleast_2d(np.asarray(x, float))
        poly = self.domain
        e = np.roll(poly, -1, axis=0) - poly
        rel = x[:, None, :] - poly[None, :, :]
        cross = e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0]
        scale = max(1.0, float(np.abs(poly).max()))
        return np.all(cross >= -tol * scale * np.linalg.norm(e, axis=1)[None, :], axis=1)

    def locate(self, x):
        """Index of a lower facet containing each point (``-1`` if outside)."""
        x = np.atleast_2d(np.asarray(x, float))
        S = self.hull.simplices
        if self._tree is None:
            self._tree = cKDTree(self._centroids)
        k = min(len(S), 24)
        _, cand = self._tree.query(x, k=k)
        cand = cand.reshape(len(x), k)
        out = np.full(len(x), -1, dtype=np.intp)
        bary = self._barycentric(cand, x)
        ok = np.all(bary >= -1e-10, axis=2)
        found = ok.any(axis=1)
        out[found] = cand[found, np.argmax(ok[found], axis=1)]
        miss = np.flatnonzero(~found)
        step = max(1, 2_000_000 // len(S))
        every = np.arange(len(S))[None, :]
        for s in range(0, len(miss), step):
            idx = miss[s:s + step]
            ok = np.all(self._barycentric(every, x[idx]) >= -1e-10, axis=2)
            hit = ok.any(axis=1)
            out[idx[hit]] = np.argmax(ok[hit], axis=1)
        return out

    def _barycentric(self, facets, x):
        p = self.nodes[self.hull.simplices[facets]]  # (m, k, 3, 2)
        a, b, c = p[..., 0, :], p[..., 1, :], p[..., 2, :]
        v0, v1 = b - a, c - a
        v2 = x[:, None, :] - a
        den = v0[..., 0] * v1[..., 1] - v0[..., 1] * v1[..., 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            l1 = (v2[..., 0] * v1[..., 1] - v2[..., 1] * v1[..., 0]) / den
            l2 = (v0[..., 0] * v2[..., 1] - v0[..., 1] * v2[..., 0]) / den
        l0 = 1 - l1 - l2
        bary = np.stack([l0, l1, l2], axis=-1)
        return np.where(np.isfinite(bary), bary, -np.inf)

    def __call__(self, x):
        """Envelope value at points ``x``; ``nan`` outside the node hull."""
        x_arr = np.asarray(x, float)
        x2 = np.atleast_2d(x_arr)
        f = self.locate(x2)
        out = np.full(len(x2), np.nan)
        ok = f >= 0
        out[ok] = self.hull.planes_at(f[ok], x2[ok])
        return float(out[0]) if x_arr.ndim == 1 else out

    def envelope_at(self, x):
        """Envelope value as the maximum over all facet planes (slow, exact)."""
        x = np.atleast_2d(np.asarray(x, float))
        out = np.empty(len(x))
        G, c = self.hull.gradients, self.hull.intercepts
        for s in range(0, len(x), 256):
            out[s:s + 256] = (x[s:s + 256] @ G.T + c).max(axis=1)
        return out

    def lipschitz(self) -> float:
        return float(np.linalg.norm(self.hull.gradients, axis=1).max())


def _boundary_mask(nodes, tol):
    ch = ConvexHull(nodes)
    poly = nodes[ch.vertices]
    a = poly
    b = np.roll(poly, -1, axis=0)
    e = b - a
    L2 = np.einsum("ij,ij->i", e, e)
    rel = nodes[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("mij,ij->mi", rel, e) / L2, 0, 1)
    proj = a[None] + t[..., None] * e[None]
    dist = np.linalg.norm(nodes[:, None, :] - proj, axis=2).min(axis=1)
    return dist <= tol


def build_pl(nodes, values, tol: float = HULL_TOL, boundary_mask=None) -> PLConvexFunction:
    """Validate data and build the PL convex function it defines.

    Raises :class:`DegenerateNodesError` for fewer than three affinely
    independent nodes and :class:`ConvexityError` when a node lies above the
    lower envelope by more than ``tol``.
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if nodes.ndim != 2 or nodes.shape[1] != 2 or len(nodes) != len(values):
        raise ValueError("nodes must be (N, 2) with one value per node")
    if len(nodes) < 3:
        raise DegenerateNodesError("need at least three nodes")
    if not np.all(np.isfinite(values)) or not np.all(np.isfinite(nodes)):
        raise ValueError("nodes and values must be finite")
    d = nodes - nodes[0]
    if np.linalg.matrix_rank(d, tol=1e-12 * max(1.0, np.abs(d).max())) < 2:
        raise DegenerateNodesError("nodes are collinear")
    hull = lower_hull(nodes, values)
    if boundary_mask is None:
        span = float(np.ptp(nodes, axis=0).max())
        boundary_mask = _boundary_mask(nodes, 1e-10 * span)
    f = PLConvexFunction(nodes, values, hull, boundary_mask)
    loose = np.flatnonzero(~f.vertex_mask)
    if loose.size:
        env = f(nodes[loose])
        bad = ~np.isfinite(env)
        env[bad] = f.envelope_at(nodes[loose[bad]])
        gap = values[loose] - env
        if np.any(gap > tol):
            k = loose[np.argmax(gap)]
            raise ConvexityError(
                f"node {k} lies {gap.max():.3e} above the convex envelope")
    return f


# ---------------------------------------------------------------------------
# subgradient cells


def _incidence(f: PLConvexFunction):
    S = f.hull.simplices
    node = S.ravel()
    fac = np.repeat(np.arange(len(S)), 3)
    d = f._centroids[fac] - f.nodes[node]
    ang = np.arctan2(d[:, 1], d[:, 0])
    order = np.lexsort((ang, node))
    node, fac = node[order], fac[order]
    start = np.r_[0, np.flatnonzero(np.diff(node)) + 1]
    counts = np.diff(np.r_[start, len(node)])
    nxt = np.arange(len(node)) + 1
    ends = start + counts - 1
    nxt[ends] = start
    return node, fac, nxt, start, counts


def cell_areas(f: PLConvexFunction) -> np.ndarray:
    """Area of the polygon of incident facet gradients, for every node.

    Exact subgradient-cell areas at interior nodes; zero at nodes that are not
    hull vertices. Values at boundary nodes are not cell areas.
    """
    node, fac, nxt, _, _ = _incidence(f)
    g = f.hull.gradients[fac]
    cross = g[:, 0] * g[nxt, 1] - g[nxt, 0] * g[:, 1]
    return 0.5 * np.bincount(node, weights=cross, minlength=len(f.nodes))


def subgradient_cells(f: PLConvexFunction, which=None):
    """Cell polygons (counter-clockwise vertex arrays) for the given nodes."""
    node, fac, _, start, counts = _incidence(f)
    first = dict(zip(node[start].tolist(), zip(start.tolist(), counts.tolist())))
    which = f.interior_nodes if which is None else np.atleast_1d(which)
    out = []
    for i in which:
        if int(i) not in first:
            out.append(np.zeros((0, 2)))
            continue
        s, c = first[int(i)]
        out.append(f.hull.gradients[fac[s:s + c]])
    return out


def hull_edges(f: PLConvexFunction):
    """Interior edges of the lower triangulation and their dual lengths.

    Returns ``(i, j, dual_length)`` with ``i < j``; the dual length is the
    distance between the gradients of the two facets sharing the edge.
    """
    S = f.hull.simplices
    e = np.concatenate([S[:, [0, 1]], S[:, [1, 2]], S[:, [2, 0]]])
    fac = np.tile(np.arange(len(S)), 3)
    e.sort(axis=1)
    key = e[:, 0].astype(np.int64) * len(f.nodes) + e[:, 1]
    order = np.argsort(key, kind="stable")
    key, fac, e = key[order], fac[order], e[order]
    start = np.r_[0, np.flatnonzero(np.diff(key)) + 1]
    counts = np.diff(np.r_[start, len(key)])
    shared = counts >= 2
    s = start[shared]
    last = s + counts[shared] - 1
    G = f.hull.gradients
    dual = np.linalg.norm(G[fac[s]] - G[fac[last]], axis=1)
    return e[s, 0], e[s, 1], dual


def gradient_image(f: PLConvexFunction) -> np.ndarray:
    """Convex hull polygon of all facet gradients."""
    G = f.hull.gradients
    try:
        ch = ConvexHull(G)
    except QhullError:
        return np.zeros((0, 2))
    return G[ch.vertices]


def _neighbors(f: PLConvexFunction):
    S = f.hull.simplices
    e = np.concatenate([S[:, [0, 1]], S[:, [1, 2]], S[:, [2, 0]]])
    a = np.r_[e[:, 0], e[:, 1]]
    b = np.r_[e[:, 1], e[:, 0]]
    nb = [set() for _ in range(len(f.nodes))]
    for p, q in zip(a.tolist(), b.tolist()):
        nb[p].add(q)
    return nb


def ma_measure(f: PLConvexFunction) -> MAMeasure:
    """Monge-Ampere measure: one atom per interior node.

    Boundary nodes have unbounded cells; their cells clipped to the gradient
    image are reported separately, so that interior plus boundary masses add
    up to the area of the gradient image.
    """
    areas = cell_areas(f)
    interior = f.interior_nodes
    boundary = f.boundary_nodes
    G = gradient_image(f)
    nb = _neighbors(f)
    bmass = np.zeros(len(boundary))
    if len(G) >= 3:
        for k, i in enumerate(boundary):
            poly = G
            for j in sorted(nb[i]):
                poly = clip_halfplane(poly, f.nodes[j] - f.nodes[i],
                                      f.values[j] - f.values[i])
            bmass[k] = _polygon_area(poly)
    return MAMeasure(interior=interior, masses=areas[interior],
                     boundary=boundary, boundary_masses=bmass)


# ---------------------------------------------------------------------------
# Legendre transform


def _merge_points(P, tol):
    if len(P) == 0:
        return np.zeros(len(P), int)
    tree = cKDTree(P)
    parent = np.arange(len(P))

    def root(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in tree.query_pairs(tol):
        ra, rb = root(a), root(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return np.array([root(a) for a in range(len(P))])


def conjugate_values(nodes, values, points) -> np.ndarray:
    """``sup_j x_j . p - u_j`` over the node set, for each point ``p``."""
    X = np.asarray(nodes, float)
    u = np.asarray(values, float)
    P = np.atleast_2d(np.asarray(points, float))
    out = np.empty(len(P))
    for s in range(0, len(P), 256):
        out[s:s + 256] = (P[s:s + 256] @ X.T - u).max(axis=1)
    return out


def legendre_pl(f: PLConvexFunction, at=None) -> PLConvexFunction:
    """Discrete conjugate of ``f``.

    By default the dual nodes are the distinct facet gradients of ``f``. Pass
    ``at`` to evaluate the conjugate on a chosen node set instead; the double
    transform ``legendre_pl(legendre_pl(f), at=f.nodes)`` returns ``f``.
    """
    if at is None:
        G = f.hull.gradients
        scale = max(1.0, float(np.abs(G).max()))
        rep = _merge_points(G, 1e-10 * scale)
        at = G[np.unique(rep)]
    at = np.asarray(at, float)
    return build_pl(at, conjugate_values(f.nodes, f.values, at))


# ---------------------------------------------------------------------------
# contact sets and strict convexity


@dataclass
class ContactReport:
    base: np.ndarray
    slope: np.ndarray
    height: float
    contact: np.ndarray
    diameter: float

    def plane(self, x):
        x = np.atleast_2d(x)
        return self.height + (x - self.base) @ self.slope


def _value_scale(f):
    return max(1.0, float(np.ptp(f.values)))


def _outward_normals(f: PLConvexFunction) -> np.ndarray:
    """Sum of outward unit normals of the domain edges through each node."""
    poly = f.domain
    e = np.roll(poly, -1, axis=0) - poly
    nrm = np.c_[e[:, 1], -e[:, 0]] / np.linalg.norm(e, axis=1)[:, None]
    out = np.zeros_like(f.nodes)
    span = float(np.ptp(f.nodes, axis=0).max())
    for k in range(len(poly)):
        rel = f.nodes - poly[k]
        t = rel @ e[k] / (e[k] @ e[k])
        off = np.abs(rel @ nrm[k])
        on = (off <= 1e-10 * span) & (t >= -1e-12) & (t <= 1 + 1e-12)
        out[on] += nrm[k]
    return out


def _node_slopes(f: PLConvexFunction) -> np.ndarray:
    """A subgradient in the relative interior of each node's cell.

    Interior nodes use the mean of their incident facet gradients; any
    positive weighting of the cell vertices lands in the relative interior,
    so repeated gradients from coplanar facets do no harm. Boundary cells are
    unbounded along the outward normal cone, so the slope is pushed outward to
    avoid planes that contain a whole boundary facet.
    """
    S = f.hull.simplices
    N = len(f.nodes)
    G = np.repeat(f.hull.gradients, 3, axis=0)
    idx = S.ravel()
    cnt = np.bincount(idx, minlength=N).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        slopes = np.c_[np.bincount(idx, G[:, 0], N), np.bincount(idx, G[:, 1], N)] / cnt[:, None]
    bnd = f.boundary_mask
    if bnd.any():
        push = max(1.0, f.lipschitz())
        slopes[bnd] += push * _outward_normals(f)[bnd]
    return slopes


def _report(f, x0, slope, height, tol):
    scale = _value_scale(f)
    resid = f.values - (height + (f.nodes - x0) @ slope)
    contact = np.flatnonzero(np.abs(resid) <= tol * scale)
    diam = float(pdist(f.nodes[contact]).max()) if len(contact) > 1 else 0.0
    return ContactReport(np.asarray(x0, float), slope, float(height), contact, diam)


def contact_set(f: PLConvexFunction, x0, tol: float = 1e-9) -> ContactReport:
    """Nodes where a supporting plane at ``x0`` touches the graph.

    At a node the plane's slope lies inside the node's subgradient cell;
    elsewhere it is the mean of the gradients of the facets active at ``x0``. Either choice is a valid subgradient.
    """
    x0 = np.asarray(x0, dtype=float)
    if not f.contains(x0[None])[0]:
        raise ValueError("x0 lies outside the domain")
    d, i = cKDTree(f.nodes).query(x0)
    span = float(np.ptp(f.nodes, axis=0).max())
    if d <= 1e-12 * span and f.vertex_mask[i]:
        slope = _node_slopes(f)[i]
        return _report(f, f.nodes[i], slope, f.values[i], tol)
    G, c = f.hull.gradients, f.hull.intercepts
    planes = G @ x0 + c
    height = float(planes.max())
    active = planes >= height - 1e-12 * _value_scale(f)
    slope = G[active].mean(axis=0)
    return _report(f, x0, slope, height, tol)


def strict_convexity_region(f: PLConvexFunction, gamma=None, h: Optional[float] = None,
                            tol: float = 1e-9) -> np.ndarray:
    """Flag nodes whose contact set has diameter at most ``h``.

    ``gamma`` is accepted for symmetry with :func:`check_strict_convexity`
    and does not affect the flags.
    """
    h = f.mesh_size if h is None else h
    scale = _value_scale(f)
    slopes = _node_slopes(f)
    S = f.hull.simplices
    a = np.concatenate([S[:, 0], S[:, 1], S[:, 2], S[:, 1], S[:, 2], S[:, 0]])
    b = np.concatenate([S[:, 1], S[:, 2], S[:, 0], S[:, 0], S[:, 1], S[:, 2]])
    resid = f.values[b] - f.values[a] - np.einsum(
        "ij,ij->i", f.nodes[b] - f.nodes[a], slopes[a])
    low = np.full(len(f.nodes), -np.inf)
    low[f.vertex_mask] = np.inf
    np.minimum.at(low, a, resid)
    # a supporting plane strictly above every neighbour in the triangulation
    # is strictly above every other node, by convexity
    flags = low > tol * scale
    for i in np.flatnonzero(~flags):
        if f.vertex_mask[i]:
            flags[i] = _report(f, f.nodes[i], slopes[i], f.values[i], tol).diameter <= h
        else:
            flags[i] = contact_set(f, f.nodes[i], tol).diameter <= h
    return flags


def distance_to_hull(points, gamma) -> np.ndarray:
    """Euclidean distance from points to the convex hull of ``gamma``."""
    P = np.atleast_2d(np.asarray(points, float))
    g = np.atleast_2d(np.asarray(gamma, float))
    if len(g) == 1:
        return np.linalg.norm(P - g[0], axis=1)
    if len(g) >= 3:
        try:
            ch = ConvexHull(g)
            poly = g[ch.vertices]
        except QhullError:
            poly = g[[np.argmin(g[:, 0] + g[:, 1]), np.argmax(g[:, 0] + g[:, 1])]]
    else:
        poly = g
    a = poly
    b = np.roll(poly, -1, axis=0)
    e = b - a
    L2 = np.maximum(np.einsum("ij,ij->i", e, e), 1e-300)
    rel = P[:, None, :] - a[None]
    t = np.clip(np.einsum("mij,ij->mi", rel, e) / L2, 0, 1)
    dist = np.linalg.norm(rel - t[..., None] * e[None], axis=2).min(axis=1)
    if len(poly) >= 3:
        cross = e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0]
        inside = np.all(cross >= 0, axis=1)
        dist[inside] = 0.0
    return dist


@dataclass
class StrictConvexityCheck:
    flags: np.ndarray
    checked: np.ndarray
    failures: np.ndarray
    degenerate_inside: np.ndarray

    @property
    def passed(self) -> bool:
        return len(self.failures) == 0


def check_strict_convexity(f: PLConvexFunction, gamma, h: Optional[float] = None,
                           margin: float = 2.0) -> StrictConvexityCheck:
    """Interior nodes farther than ``margin * h`` from hull(gamma) must be strict.

    Degenerate nodes closer to gamma are reported but not counted as failures.
    """
    h = f.mesh_size if h is None else h
    flags = strict_convexity_region(f, gamma, h)
    dist = distance_to_hull(f.nodes, gamma)
    interior = ~f.boundary_mask
    far = interior & (dist > margin * h)
    return StrictConvexityCheck(
        flags=flags,
        checked=np.flatnonzero(far),
        failures=np.flatnonzero(far & ~flags),
        degenerate_inside=np.flatnonzero(interior & ~far & ~flags),
    )
