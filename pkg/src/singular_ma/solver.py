"""Dirichlet problems with measure data, and the global constructions.

The discrete unknown is a vector of node values whose lower convex envelope
is a PL convex function. Node ``i`` carries the target mass
``T_i = int_{V_i} f + (atoms snapped to i)``, where ``V_i`` is the Voronoi cell
of the node. With this choice the sampled paraboloid ``|x|^2/2`` solves the
``f = 1`` problem exactly, which makes comparison arguments sharp on the mesh.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, sparse
from scipy.sparse.linalg import spsolve
from scipy.spatial import ConvexHull, cKDTree

from . import geometry as geo
from .mesh import Mesh, _ccw, _signed_distance, polygon_mesh, regular_polygon
from .radial import (RadialMeasure, RadialSingularSolution, asymptotic_offset,
                     radial_ode_solve, radial_value, unit_ball_volume)


class ConvergenceError(RuntimeError):
    """The iteration stopped before every residual met the tolerance."""

    def __init__(self, message, report=None, solution=None):
        super().__init__(message)
        self.report = report
        self.solution = solution


class SandwichViolation(RuntimeError):
    def __init__(self, message, check=None):
        super().__init__(message)
        self.check = check


# ---------------------------------------------------------------------------
# problem data


@dataclass
class DirichletProblem:
    """``det D^2 u = f + sum a_i delta_{P_i}`` in a polygon, ``u = phi`` on its boundary.

    ``density`` is a constant or a vectorized callable on ``(m, 2)`` arrays.
    Segment-supported measures are given as chains of atoms. A prebuilt
    ``mesh`` overrides ``h``-based meshing.
    """

    domain: np.ndarray
    boundary_data: Callable[[np.ndarray], np.ndarray]
    h: float = 0.1
    density: object = 1.0
    atoms: Sequence = ()
    mesh: Optional[Mesh] = None

    def __post_init__(self):
        self.domain = np.asarray(self.domain, dtype=float)
        pts, masses = self.atom_arrays()
        if np.any(masses <= 0):
            raise ValueError("atom masses must be positive")
        if self.mesh is None and self.h <= 0:
            raise ValueError("mesh size must be positive")
        if len(pts) and np.any(_signed_distance(pts, _ccw(self.domain)) <= 0):
            raise ValueError("atoms must lie strictly inside the domain")

    def atom_arrays(self):
        if len(self.atoms) == 0:
            return np.zeros((0, 2)), np.zeros(0)
        pts = np.array([np.asarray(p, float) for p, _ in self.atoms]).reshape(-1, 2)
        masses = np.array([float(a) for _, a in self.atoms])
        return pts, masses

    def build_mesh(self) -> Mesh:
        if self.mesh is not None:
            return self.mesh
        pts, _ = self.atom_arrays()
        return polygon_mesh(self.domain, self.h, pts)


@dataclass
class SolveReport:
    method: str
    iterations: int
    converged: bool
    tol: float
    max_residual: float
    residuals: np.ndarray
    targets: np.ndarray
    boundary_mismatch: float
    snapped: list
    sandwich_violations: int = 0
    wall_time: float = 0.0
    history: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
            "tol": self.tol,
            "max_residual": self.max_residual,
            "boundary_mismatch": self.boundary_mismatch,
            "sandwich_violations": self.sandwich_violations,
            "snapped": [list(s) for s in self.snapped],
        }


# ---------------------------------------------------------------------------
# targets


def voronoi_integrals(nodes, boundary_mask, density=1.0):
    """``int f`` over the Voronoi cell of every interior node.

    The cells are the subgradient cells of the sampled paraboloid. Each cell
    is fanned from its node and integrated with the edge-midpoint rule, which
    is exact for quadratic densities.
    """
    nodes = np.asarray(nodes, float)
    para = geo.PLConvexFunction(nodes, 0.5 * np.einsum("ij,ij->i", nodes, nodes),
                                geo.lower_hull(nodes, 0.5 * np.einsum("ij,ij->i", nodes, nodes)),
                                boundary_mask)
    node, fac, nxt, _, _ = geo._incidence(para)
    g = para.hull.gradients
    a = nodes[node]
    b = g[fac]
    c = g[fac[nxt]]
    area = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))
    if callable(density):
        mids = np.vstack([(a + b) / 2, (b + c) / 2, (c + a) / 2])
        vals = np.asarray(density(mids), float).reshape(3, -1).mean(axis=0)
        if np.any(vals < 0):
            raise ValueError("density must be nonnegative")
    else:
        vals = float(density)
        if vals < 0:
            raise ValueError("density must be nonnegative")
    out = np.bincount(node, weights=area * vals, minlength=len(nodes))
    return out[~np.asarray(boundary_mask, bool)]


def snap_atoms(mesh: Mesh, points, masses):
    """Nearest interior node for every atom, with the snapping distance."""
    interior = mesh.interior
    tree = cKDTree(mesh.nodes[interior])
    snapped = []
    extra = np.zeros(len(interior))
    for k, (p, a) in enumerate(zip(points, masses)):
        d, j = tree.query(p)
        extra[j] += a
        snapped.append((k, int(interior[j]), float(d)))
    return extra, snapped


def node_targets(problem: DirichletProblem, mesh: Mesh):
    cont = voronoi_integrals(mesh.nodes, mesh.boundary_mask, problem.density)
    pts, masses = problem.atom_arrays()
    extra, snapped = snap_atoms(mesh, pts, masses)
    return cont + extra, snapped


# ---------------------------------------------------------------------------
# Newton iteration


def _pl(nodes, values, mask):
    return geo.PLConvexFunction(nodes, values, geo.lower_hull(nodes, values), mask)


def _laplacian(f: geo.PLConvexFunction, interior_pos):
    i, j, dual = geo.hull_edges(f)
    w = dual / np.linalg.norm(f.nodes[i] - f.nodes[j], axis=1)
    n_int = int((interior_pos >= 0).sum())
    diag = np.zeros(n_int)
    pi, pj = interior_pos[i], interior_pos[j]
    np.add.at(diag, pi[pi >= 0], w[pi >= 0])
    np.add.at(diag, pj[pj >= 0], w[pj >= 0])
    both = (pi >= 0) & (pj >= 0)
    rows = np.r_[pi[both], pj[both], np.arange(n_int)]
    cols = np.r_[pj[both], pi[both], np.arange(n_int)]
    vals = np.r_[-w[both], -w[both], diag]
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n_int, n_int))


def _initial_values(mesh: Mesh, phi_b, stiffness, atoms=()):
    """Boundary envelope plus a strictly convex dip; all nodes become vertices.

    Each atom ``(P, a)`` adds a cone of slope ``sqrt(a / pi)`` at ``P``, so the
    atom's cell starts near its target instead of near zero.
    """
    nodes = mesh.nodes
    bnd = mesh.boundary
    env = _pl(nodes[bnd], phi_b, np.ones(len(bnd), bool))
    u = np.empty(len(nodes))
    u[bnd] = phi_b
    x = nodes[mesh.interior]
    base = env(x) if len(x) > 1 else np.atleast_1d(env(x[0]))
    miss = ~np.isfinite(base)
    if miss.any():
        base[miss] = env.envelope_at(x[miss])
    center = mesh.polygon.mean(axis=0)
    rho2 = np.max(np.sum((mesh.polygon - center) ** 2, axis=1))
    dip = 0.5 * stiffness * (np.sum((x - center) ** 2, axis=1) - rho2)
    for p, a in atoms:
        reach = np.max(np.linalg.norm(mesh.polygon - p, axis=1))
        dip += math.sqrt(a / math.pi) * (np.linalg.norm(x - p, axis=1) - reach)
    u[mesh.interior] = base + dip
    return u


def _newton(mesh, targets, u0, tol, max_iter, history):
    nodes, mask = mesh.nodes, mesh.boundary_mask
    interior = mesh.interior
    pos = np.full(len(nodes), -1)
    pos[interior] = np.arange(len(interior))
    u = u0.copy()
    f = _pl(nodes, u, mask)
    F = geo.cell_areas(f)[interior]
    if not f.vertex_mask[interior].all() or F.min() <= 0:
        raise ValueError("initial values must make every interior node a hull vertex")
    eps0 = 0.5 * min(targets.min(), F.min())
    res = F - targets
    it = 0
    while np.abs(res).max() > tol:
        if it >= max_iter:
            raise ConvergenceError(f"Newton stopped after {it} iterations, "
                                   f"residual {np.abs(res).max():.3e}", solution=(u, res, it))
        L = _laplacian(f, pos)
        delta = spsolve(L.tocsc(), res)
        norm = np.linalg.norm(res)
        alpha = 1.0
        while True:
            trial = u.copy()
            trial[interior] += alpha * delta
            g = _pl(nodes, trial, mask)
            G = geo.cell_areas(g)[interior]
            ok = g.vertex_mask[interior].all() and G.min() >= eps0
            if ok and np.linalg.norm(G - targets) <= (1 - alpha / 2) * norm:
                break
            alpha *= 0.5
            if alpha < 2.0 ** -40:
                raise ConvergenceError("line search failed", solution=(u, res, it))
        u, f, res = trial, g, G - targets
        it += 1
        history.append((it, float(np.abs(res).max()), alpha))
    return u, it


# ---------------------------------------------------------------------------
# Gauss-Seidel sweep


def _local_area(nodes, values, i, t, cand, delta):
    """Cell area at node ``i`` raised to height ``t``, against ``cand`` only.

    ``delta`` is the distance from the node to the boundary of the hull of
    the candidates; it bounds every subgradient by ``max(du) / delta``.
    """
    d = nodes[cand] - nodes[i]
    du = values[cand] - t
    B = 2.0 * max(float(du.max()), 0.0) / delta + 1.0
    poly = np.array([[-B, -B], [B, -B], [B, B], [-B, B]])
    for k in range(len(cand)):
        poly = geo.clip_halfplane(poly, d[k], du[k])
        if len(poly) == 0:
            return 0.0
    return geo._polygon_area(poly)


def _sweep(mesh, targets, u0, tol, max_sweeps, history):
    nodes, mask = mesh.nodes, mesh.boundary_mask
    interior = mesh.interior
    u = u0.copy()
    tree = cKDTree(nodes)
    k_near = min(len(nodes), 25)
    for sweep in range(1, max_sweeps + 1):
        before = u.copy()
        f = _pl(nodes, u, mask)
        nb = geo._neighbors(f)
        for pos, i in enumerate(interior):
            ring = set(nb[i])
            for j in list(ring):
                ring |= nb[j]
            _, near = tree.query(nodes[i], k=k_near)
            cand = np.array(sorted((ring | set(np.atleast_1d(near).tolist())) - {i}))
            T = targets[pos]
            if T <= 0:
                # a massless node sits on the envelope of its neighbours,
                # which is the largest facet plane of their lower hull
                hull = geo.lower_hull(nodes[cand], u[cand])
                u[i] = float(np.max(hull.gradients @ nodes[i] + hull.intercepts))
                continue

            eq = ConvexHull(nodes[cand]).equations
            delta = float(-(eq[:, :2] @ nodes[i] + eq[:, 2]).max())

            def area(t):
                return _local_area(nodes, u, i, t, cand, delta)

            # top of the bracket: the height where the cell closes up
            hi = u[i]
            step = max(1e-3, abs(hi)) * 0.1 + 1e-3
            while area(hi) > 0:
                hi += step
                step *= 2
            lo = hi
            step = 1e-3 + math.sqrt(T)
            while area(lo) < T:
                lo -= step
                step *= 2
            u[i] = optimize.brentq(lambda t: area(t) - T, lo, hi, xtol=1e-12, rtol=1e-15)
        f = _pl(nodes, u, mask)
        res = geo.cell_areas(f)[interior] - targets
        # a node above the envelope has an empty cell but breaks convexity
        loose = interior[~f.vertex_mask[interior]]
        env = f(nodes[loose])
        gap = float(np.max(u[loose] - env, initial=0.0))
        # third entry: the largest rise of any node during the sweep
        history.append((sweep, float(np.abs(res).max()), float(np.max(u - before))))
        if np.abs(res).max() <= tol and gap <= 0.1 * geo.HULL_TOL:
            return u, sweep
    raise ConvergenceError(f"sweep did not converge in {max_sweeps} sweeps",
                           solution=(u, res, max_sweeps))


# ---------------------------------------------------------------------------
# driver


def default_tolerance(h: float, targets=None) -> float:
    """``max(1e-8, 1e-3 h^2)``, tightened to a thousandth of the smallest target.

    The second bound only bites on graded meshes, where cells near an atom
    are far smaller than ``h^2``.
    """
    tol = max(1e-8, 1e-3 * h * h)
    if targets is not None and len(targets) and np.min(targets) > 0:
        tol = min(tol, max(1e-3 * float(np.min(targets)), 1e-13))
    return tol


def _finalize(mesh, u, targets, snapped, method, iterations, tol, t0, history, phi_b):
    f = geo.build_pl(mesh.nodes, u, boundary_mask=mesh.boundary_mask)
    res = geo.cell_areas(f)[mesh.interior] - targets
    env_b = f(mesh.nodes[mesh.boundary])
    miss = ~np.isfinite(env_b)
    if miss.any():
        env_b[miss] = f.envelope_at(mesh.nodes[mesh.boundary][miss])
    report = SolveReport(
        method=method, iterations=iterations, converged=bool(np.abs(res).max() <= tol),
        tol=tol, max_residual=float(np.abs(res).max()), residuals=res, targets=targets,
        boundary_mismatch=float(np.max(np.abs(phi_b - env_b))), snapped=snapped,
        wall_time=time.perf_counter() - t0, history=history)
    return f, report


def solve_dirichlet(problem: DirichletProblem, method: str = "auto", init=None,
                    tol: Optional[float] = None, max_iter: Optional[int] = None):
    """Solve the discrete Dirichlet problem; returns ``(PLConvexFunction, SolveReport)``.

    ``method="newton"`` runs a damped Newton iteration on the cell areas, whose
    Jacobian is a weighted graph Laplacian of the dual edges. ``"sweep"`` is
    the node-by-node lifting scheme: each interior node in index order is moved
    to the height where its own cell has the target mass. ``"auto"`` uses
    Newton when every target is positive and the sweep otherwise.

    ``init`` may be a full vector of node values (boundary entries are reset to
    the data) in which every interior node is a lower-hull vertex.
    """
    t0 = time.perf_counter()
    mesh = problem.build_mesh()
    targets, snapped = node_targets(problem, mesh)
    phi_b = np.asarray(problem.boundary_data(mesh.nodes[mesh.boundary]), float)
    if not np.all(np.isfinite(phi_b)):
        raise ValueError("boundary data must be finite")
    tol = default_tolerance(mesh.h, targets) if tol is None else tol
    if method == "auto":
        method = "newton" if targets.min() > 0 else "sweep"
    if method not in ("newton", "sweep"):
        raise ValueError(f"unknown method {method!r}")
    if init is None:
        cont = voronoi_integrals(mesh.nodes, mesh.boundary_mask, problem.density)
        area = voronoi_integrals(mesh.nodes, mesh.boundary_mask, 1.0)
        stiff = math.sqrt(max(np.max(cont / area), 1e-12)) if len(area) else 1.0
        if method == "newton":
            u0 = _initial_values(mesh, phi_b, stiff, problem.atoms)
        else:
            u0 = _initial_values(mesh, phi_b, 0.0)
    else:
        u0 = np.array(init, dtype=float)
        u0[mesh.boundary] = phi_b
    history = []
    try:
        if method == "newton":
            u, it = _newton(mesh, targets, u0, tol, max_iter or 200, history)
        else:
            u, it = _sweep(mesh, targets, u0, tol, max_iter or 100000, history)
    except ConvergenceError as exc:
        u, _, it = exc.solution
        f, report = _finalize(mesh, u, targets, snapped, method, it, tol, t0, history, phi_b)
        exc.report, exc.solution = report, f
        raise
    return _finalize(mesh, u, targets, snapped, method, it, tol, t0, history, phi_b)


# ---------------------------------------------------------------------------
# comparison


@dataclass
class ComparisonResult:
    passed: bool
    violations: np.ndarray
    max_excess: float
    measures_ordered: bool
    boundary_ordered: bool

    def __bool__(self):
        return self.passed


def comparison_check(u: geo.PLConvexFunction, v: geo.PLConvexFunction,
                     tol: float = 1e-9, measure_rtol: float = 1e-3) -> ComparisonResult:
    """Check ``u <= v + tol`` at every node of a shared mesh.

    The hypotheses (larger measure for ``u``, smaller boundary values) are
    evaluated and reported but not enforced; cell masses are compared with
    relative slack ``measure_rtol`` to absorb solver residuals.
    """
    if u.nodes.shape != v.nodes.shape or not np.array_equal(u.nodes, v.nodes):
        raise ValueError("mesh mismatch: u and v must share their nodes")
    excess = u.values - v.values
    viol = np.flatnonzero(excess > tol)
    mu, mv = geo.cell_areas(u), geo.cell_areas(v)
    inner = ~u.boundary_mask
    return ComparisonResult(
        passed=len(viol) == 0,
        violations=viol,
        max_excess=float(excess.max()),
        measures_ordered=bool(np.all(mu[inner] >= (1 - measure_rtol) * mv[inner] - tol)),
        boundary_ordered=bool(np.all(excess[u.boundary_mask] <= tol)),
    )


# ---------------------------------------------------------------------------
# global constructions


@dataclass
class SingularConfiguration:
    """Data ``1 + sum a_i delta_{P_i}`` and the target asymptote ``x^T A x / 2 + b.x + c``."""

    dimension: int
    points: np.ndarray
    masses: np.ndarray
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    c: float = 0.0

    def __post_init__(self):
        n = int(self.dimension)
        if n < 2:
            raise ValueError("dimension must be at least 2")
        self.dimension = n
        self.points = np.asarray(self.points, dtype=float).reshape(-1, n)
        self.masses = np.asarray(self.masses, dtype=float).reshape(-1)
        if len(self.points) != len(self.masses):
            raise ValueError("one mass per point")
        if np.any(self.masses <= 0):
            raise ValueError("masses must be positive")
        if len(self.points) > 1:
            gaps = np.linalg.norm(self.points[:, None] - self.points[None], axis=2)
            gaps[np.diag_indices(len(self.points))] = np.inf
            if gaps.min() <= 1e-12:
                raise ValueError("points must be pairwise distinct")
        self.A = np.eye(n) if self.A is None else np.asarray(self.A, dtype=float)
        self.b = np.zeros(n) if self.b is None else np.asarray(self.b, dtype=float)
        if not np.allclose(self.A, self.A.T, atol=1e-12):
            raise ValueError("A must be symmetric")
        if abs(np.linalg.det(self.A) - 1) > 1e-12 * max(1.0, np.abs(self.A).max() ** n):
            raise ValueError("det A must equal 1")
        if np.linalg.eigvalsh(self.A).min() <= 0:
            raise ValueError("A must be positive definite")

    @property
    def k(self) -> int:
        return len(self.masses)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def root_A(self):
        w, V = np.linalg.eigh(self.A)
        return (V * np.sqrt(w)) @ V.T


class AveragedSubsolution:
    """Mean of the tilted radial solutions with masses scaled by ``k^n``.

    Each component carries the whole load ``k^n a_i`` at its own point, so the
    average keeps an atom ``a_i`` at ``P_i`` while concavity of ``det^{1/n}``
    keeps the smooth part at least 1.
    """

    def __init__(self, cfg: SingularConfiguration):
        self.cfg = cfg
        n, k = cfg.dimension, cfg.k
        self.M = cfg.root_A()
        self.points = cfg.points @ self.M.T
        om = unit_ball_volume(n)
        self.parts = [RadialSingularSolution(n, k ** n * a / om, center=p)
                      for p, a in zip(self.points, cfg.masses)]
        self.offsets = [asymptotic_offset(n, s.c) if n >= 3 else 0.0 for s in self.parts]

    @property
    def dimension(self):
        return self.cfg.dimension

    def _y(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        return x, x @ self.M.T

    def _check(self, y):
        for p in self.points:
            if np.any(np.linalg.norm(y - p, axis=1) == 0):
                raise ValueError("the averaged subsolution is singular at the atoms")

    def value(self, x):
        x, y = self._y(x)
        total = np.zeros(len(y))
        for s, off, p in zip(self.parts, self.offsets, self.points):
            r = np.linalg.norm(y - p, axis=1)
            total += np.asarray(radial_value(s, r)) - off + y @ p - 0.5 * p @ p
        return total / self.cfg.k + x @ self.cfg.b + self.cfg.c

    __call__ = value

    def gradient(self, x):
        x, y = self._y(x)
        self._check(y)
        g = np.zeros_like(y)
        for s, p in zip(self.parts, self.points):
            g += s.gradient(y) + p
        return (g / self.cfg.k) @ self.M + self.cfg.b

    def hessian(self, x):
        x, y = self._y(x)
        self._check(y)
        H = sum(s.hessian(y) for s in self.parts) / self.cfg.k
        return np.einsum("ji,mjk,kl->mil", self.M, H, self.M)

    def det_hessian(self, x):
        return np.linalg.det(self.hessian(x))

    def minkowski_defect(self, x):
        """``det(D^2 u)^{1/n} - mean_i det(D^2 u_i)^{1/n}``, nonnegative."""
        x, y = self._y(x)
        self._check(y)
        n = self.dimension
        lhs = self.det_hessian(x) ** (1.0 / n)
        rhs = np.mean([np.linalg.det(s.hessian(y)) ** (1.0 / n) for s in self.parts], axis=0)
        return lhs - rhs


def averaged_subsolution(cfg: SingularConfiguration) -> AveragedSubsolution:
    return AveragedSubsolution(cfg)


# -- closed-form sandwich for n >= 3 -------------------------------------------


def _bump(n):
    """Radial bump supported in B_{1/4} with unit integral."""
    om = unit_ball_volume(n)
    raw = lambda s: np.where(s < 0.25, np.clip(1 - 16 * s * s, 0, None) ** 3, 0.0)
    mass = n * om * integrate.quad(lambda s: float(raw(s)) * s ** (n - 1), 0, 0.25,
                                   epsabs=1e-14, epsrel=1e-13)[0]
    return lambda s: raw(np.asarray(s, float)) / mass


def _tail(n, shift, sign):
    """``int_1^inf sign * ((tau^n + shift)^{1/n} - tau) dtau``, computed stably."""
    def g(t):
        return t * math.expm1(math.log1p(shift / t ** n) / n)
    if shift < 0:
        # integrable root singularity at tau = 1
        head = integrate.quad(g, 1, 2, limit=200, epsabs=1e-13, epsrel=1e-12)[0]
    else:
        head = integrate.quad(g, 1, 2, epsabs=1e-13, epsrel=1e-12)[0]
    rest = integrate.quad(g, 2, np.inf, epsabs=1e-13, epsrel=1e-12)[0]
    return sign * (head + rest)


@dataclass
class SandwichBounds:
    """Radial sub/supersolution pair pinning the growing-ball solutions.

    ``lower(r)`` is the inner Dirichlet solution glued to a steeper
    ``det = 1`` profile outside the unit ball; ``upper(r)`` vanishes in the
    unit ball and is the ``(tau^n - 1)^{1/n}`` profile outside.
    """

    dimension: int
    v1: object
    c0: float
    K1: float
    K2: float
    a: float
    beta_minus: float
    beta_plus: float
    atom: float
    scale: float = 1.0

    def lower(self, r):
        r = np.asarray(r, float)
        n, K2 = self.dimension, self.K2
        out = np.empty_like(r, dtype=float)
        inside = r < 1
        out[inside] = self.v1.value(r[inside])
        ro = r[~inside]
        out[~inside] = [integrate.quad(lambda t: (t ** n + K2) ** (1 / n), 1, s,
                                       epsabs=1e-12, epsrel=1e-12)[0] for s in ro]
        return out

    def upper(self, r):
        r = np.asarray(r, float)
        n = self.dimension
        out = np.zeros_like(r, dtype=float)
        for idx in np.flatnonzero(r > 1):
            out[idx] = integrate.quad(lambda t: (t ** n - 1) ** (1 / n), 1, r[idx],
                                      epsabs=1e-12, epsrel=1e-12)[0]
        return out

    def v2(self, r):
        return self.K1 * (np.asarray(r, float) ** 2 - 1)

    def gradient_jump(self):
        """One-sided radial slopes at ``r = 1``: inner barrier, glued lower profile."""
        return 2 * self.K1, (1 + self.K2) ** (1 / self.dimension)

    def upper_det(self, r):
        """Hessian determinant of the upper profile for ``r > 1``."""
        r = np.asarray(r, float)
        n = self.dimension
        d1 = (r ** n - 1) ** (1 / n)
        d2 = r ** (n - 1) * (r ** n - 1) ** ((1 - n) / n)
        return d2 * (d1 / r) ** (n - 1)

    def check(self, r, u):
        """Nodewise violations of ``lower + beta_- <= u <= upper + beta_+``."""
        r = np.asarray(r, float)
        u = np.asarray(u, float)
        lo = self.lower(r) + self.beta_minus
        hi = self.upper(r) + self.beta_plus
        return lo - u, u - hi


def build_sandwich(cfg, bump_mass: Optional[float] = None, density_excess=None,
                   samples: int = 400) -> SandwichBounds:
    """Closed-form sandwich for radial data ``1 + m delta_0`` in dimension ``n >= 3``.

    ``cfg`` is a one-point :class:`SingularConfiguration` or a
    :class:`RadialMeasure` (atom at the centre plus ``1 + excess`` density,
    the excess supported in ``B_{1/2}``). The bump mass ``a`` defaults to the
    smallest value giving ``K_2 = 1``.
    """
    if isinstance(cfg, SingularConfiguration):
        if cfg.k != 1:
            raise ValueError("the closed-form sandwich needs radial data (one point)")
        n, atom = cfg.dimension, float(cfg.masses[0])
        excess = density_excess
    elif isinstance(cfg, RadialMeasure):
        n, atom = cfg.dimension, float(cfg.atom_at_center)
        excess = (lambda s: np.asarray(cfg.density(s), float) - 1.0)
    else:
        raise TypeError("expected a SingularConfiguration or RadialMeasure")
    if n < 3:
        raise ValueError("the sandwich shifts are infinite in dimension 2; "
                         "use the log-corrected global run instead")
    eta = _bump(n)

    def inner(a):
        def dens(s):
            s = np.asarray(s, float)
            base = 1.0 + a * eta(s)
            if excess is not None:
                base = base + excess(s)
            return base
        prof = radial_ode_solve(RadialMeasure(n, atom, dens), 1.0, breakpoints=(0.25, 0.5))
        v1 = prof.shifted(-prof.value(1.0))
        c0 = -float(v1.value(0.0))
        return v1, c0

    def k2_minus_one(a):
        return (2 * 4 * inner(a)[1] / 3) ** n - 1

    if bump_mass is None:
        if k2_minus_one(1e-12) >= 0:
            a = 1e-12
        else:
            hi = 1.0
            while k2_minus_one(hi) < 0:
                hi *= 2
            a = optimize.brentq(k2_minus_one, 0.0, hi, xtol=1e-14, rtol=1e-14)
            a = a * (1 + 1e-12) + 1e-15
    else:
        a = float(bump_mass)
        if a <= 0:
            raise ValueError("bump mass must be positive")
        while k2_minus_one(a) < 0:
            a *= 2
    v1, c0 = inner(a)
    K1 = 4 * c0 / 3
    K2 = (2 * K1) ** n
    r = np.linspace(0, 1, samples)
    inner_gap = float(np.min(0.5 * r ** 2 - v1.value(r)))
    beta_minus = min(inner_gap, 0.5 + _tail(n, K2, -1.0))
    beta_plus = 0.5 + _tail(n, -1.0, -1.0)
    return SandwichBounds(n, v1, c0, K1, K2, a, beta_minus, beta_plus, atom)


# -- barrier ---------------------------------------------------------------


@dataclass(frozen=True)
class EllipsoidBarrier:
    """``k (4|x'|^2/r^2 + (x_n - 3/4)^2 - 1/16)`` with constant determinant ``lam``."""

    dimension: int
    lam: float
    r: float

    @property
    def k(self) -> float:
        n = self.dimension
        return self.lam ** (1 / n) * self.r ** (2 - 2 / n) / (2 * 4 ** ((n - 1) / n))

    def value(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        xp, xn = x[:, :-1], x[:, -1]
        return self.k * (4 * np.sum(xp ** 2, axis=1) / self.r ** 2 + (xn - 0.75) ** 2 - 1 / 16)

    __call__ = value

    def hessian(self, x=None):
        n = self.dimension
        d = np.full(n, 8 * self.k / self.r ** 2)
        d[-1] = 2 * self.k
        return np.diag(d)

    def minimum(self) -> float:
        return -self.k / 16

    def argmin(self):
        p = np.zeros(self.dimension)
        p[-1] = 0.75
        return p


def ellipsoid_barrier(n: int, lam: float, r: float, x=None):
    """Barrier on the ellipsoid touching the origin; evaluates at ``x`` if given."""
    if r <= 0 or lam <= 0 or n < 2:
        raise ValueError("need n >= 2, lam > 0 and r > 0")
    b = EllipsoidBarrier(int(n), float(lam), float(r))
    return b if x is None else b.value(x)


# -- growing balls (2D) ----------------------------------------------------


@dataclass
class GlobalRun:
    radii: list
    solutions: list
    reports: list
    bounds: list
    cauchy: list
    core_radius: float
    log_coefficient: float

    @property
    def limit(self):
        return self.solutions[-1]


def log_boundary_data(d: float):
    def phi(x):
        x = np.atleast_2d(x)
        r2 = np.einsum("ij,ij->i", x, x)
        return 0.5 * r2 + 0.5 * d * np.log(r2)
    return phi


def sandwich_2d(f: geo.PLConvexFunction, sub: AveragedSubsolution, phi_b, h):
    """Log-corrected sandwich on one ball.

    Shifts are fitted on the boundary nodes: ``beta_-`` lowers the averaged
    subsolution below the data, ``beta_+`` lifts the paraboloid above it.
    """
    bnd = f.boundary_mask
    X = f.nodes
    low = sub.value(X)
    para = 0.5 * np.einsum("ij,ij->i", X, X)
    beta_minus = float(np.min(phi_b - low[bnd]))
    beta_plus = float(np.max(phi_b - para[bnd]))
    tol = 5 * h * f.lipschitz()
    below = low + beta_minus - f.values
    above = f.values - (para + beta_plus)
    viol = np.flatnonzero((below > tol) | (above > tol))
    return {"beta_minus": beta_minus, "beta_plus": beta_plus, "tol": tol,
            "max_below": float(below.max()), "max_above": float(above.max()),
            "violations": viol}


def solve_global(cfg: SingularConfiguration, radii, h: float, sides: Optional[int] = None,
                 core_radius: Optional[float] = None, check_sandwich: bool = True):
    """Solve on growing polygonal balls and monitor sandwich and Cauchy gaps.

    Boundary data are ``|x|^2/2 + d log|x|`` with ``d`` the total atom mass
    over ``2 pi``, so the ball solutions converge instead of drifting by
    ``d log R``. The data are constant on circles, so any log coefficient
    measured inside comes from the solution, not from the data.
    """
    if cfg.dimension != 2:
        raise ValueError("the ball solver is planar")
    radii = [float(R) for R in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must increase")
    reach = float(np.linalg.norm(cfg.points, axis=1).max())
    if reach >= radii[0] / 2:
        raise ValueError("atoms must lie in B_{R_1/2}")
    d = cfg.total_mass / (2 * math.pi)
    phi = log_boundary_data(d)
    sub = averaged_subsolution(cfg)
    core = radii[0] / 2 if core_radius is None else core_radius
    sols, reps, bounds, cauchy = [], [], [], []
    for R in radii:
        m = max(64, sides or 0, int(math.ceil(2 * math.pi * R / h)))
        prob = DirichletProblem(regular_polygon(m, R), phi, h=h,
                                atoms=list(zip(cfg.points, cfg.masses)))
        f, rep = solve_dirichlet(prob)
        if check_sandwich:
            chk = sandwich_2d(f, sub, f.values[f.boundary_mask], h)
            rep.sandwich_violations = len(chk["violations"])
            bounds.append(chk)
            if rep.sandwich_violations:
                raise SandwichViolation(
                    f"sandwich violated at {rep.sandwich_violations} nodes on B_{R:g}", chk)
        if sols:
            cauchy.append(core_difference(sols[-1], f, core))
        sols.append(f)
        reps.append(rep)
    return GlobalRun(radii, sols, reps, bounds, cauchy, core, d)


def core_difference(f: geo.PLConvexFunction, g: geo.PLConvexFunction, radius: float) -> float:
    """Sup of ``|f - g|`` over the nodes of ``f`` inside the given radius."""
    X = f.nodes[np.linalg.norm(f.nodes, axis=1) <= radius]
    return float(np.max(np.abs(f(X) - g(X))))
