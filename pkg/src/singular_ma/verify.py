"""Rate fits, classification counts and metric checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from . import geometry as geo
from .radial import (RadialSingularSolution, asymptotic_offset, decay_tail,
                     radial_hessian_spectrum, radial_value, segment_metric_length,
                     segment_metric_lengths,
                     unit_ball_volume)
from .solver import SingularConfiguration


class InsufficientSamples(ValueError):
    pass


@dataclass
class RateFit:
    """Least-squares fit ``log q = exponent * log s + log C``."""

    samples: np.ndarray
    values: np.ndarray
    exponent: float
    constant: float
    residual: float

    @property
    def decades(self) -> float:
        return float(np.log10(self.samples.max() / self.samples.min()))

    def within(self, target: float, slack: float) -> bool:
        return abs(self.exponent - target) <= slack


def fit_power(samples, values, min_samples: int = 8, min_decades: float = 2.0) -> RateFit:
    s = np.asarray(samples, float)
    q = np.asarray(values, float)
    keep = (s > 0) & (q > 0) & np.isfinite(q)
    s, q = s[keep], q[keep]
    if len(s) < min_samples:
        raise InsufficientSamples(f"{len(s)} samples, need {min_samples}")
    span = np.log10(s.max() / s.min())
    if span < min_decades - 1e-9:
        raise InsufficientSamples(f"samples span {span:.2f} decades, need {min_decades}")
    X = np.c_[np.log(s), np.ones(len(s))]
    coef, *_ = np.linalg.lstsq(X, np.log(q), rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - np.log(q)) ** 2)))
    return RateFit(s, q, float(coef[0]), float(np.exp(coef[1])), resid)


# ---------------------------------------------------------------------------
# Hessian growth


def local_hessians(f: geo.PLConvexFunction, which, neighbours: int = 18) -> np.ndarray:
    """Hessians of local least-squares quadratics through nearby node values."""
    which = np.atleast_1d(which)
    tree = cKDTree(f.nodes)
    k = min(neighbours, len(f.nodes))
    _, idx = tree.query(f.nodes[which], k=k)
    out = np.empty((len(which), 2, 2))
    for m, (i, nb) in enumerate(zip(which, idx)):
        d = f.nodes[nb] - f.nodes[i]
        scale = np.abs(d).max()
        z = d / scale
        A = np.c_[np.ones(k), z, 0.5 * z[:, 0] ** 2, z[:, 0] * z[:, 1], 0.5 * z[:, 1] ** 2]
        c, *_ = np.linalg.lstsq(A, f.values[nb], rcond=None)
        out[m] = np.array([[c[3], c[4]], [c[4], c[5]]]) / scale ** 2
    return out


def hessian_growth_fit(u, gamma, distances=None, samples: int = 24,
                       min_decades: float = 2.0, bins: int = 12,
                       direction=None) -> RateFit:
    """Fit ``|D^2 u| ~ C dist^exponent`` near a point singularity.

    Closed forms (anything with a ``hessian`` method) are sampled along a ray
    at ``distances`` (default ``1e-4 .. 1e-1``). For a PL function, Hessians of
    local quadratic fits are taken at nodes in the distance window, and the
    median in each logarithmic bin enters the fit.
    """
    gamma = np.atleast_1d(np.asarray(gamma, float)).reshape(-1)
    if isinstance(u, geo.PLConvexFunction):
        lo, hi = (1e-3, 0.3) if distances is None else distances
        dist = np.linalg.norm(u.nodes - gamma, axis=1)
        inner = np.flatnonzero((dist >= lo) & (dist <= hi) & ~u.boundary_mask)
        if len(inner) == 0:
            raise InsufficientSamples("no nodes in the distance window")
        norms = np.abs(np.linalg.eigvalsh(local_hessians(u, inner))).max(axis=1)
        edges = np.geomspace(lo, hi, bins + 1)
        which = np.clip(np.searchsorted(edges, dist[inner]) - 1, 0, bins - 1)
        s, q = [], []
        for b in range(bins):
            sel = which == b
            if sel.sum() >= 3:
                s.append(np.median(dist[inner][sel]))
                q.append(np.median(norms[sel]))
        return fit_power(s, q, min_samples=min(8, bins), min_decades=min_decades)
    if distances is None:
        distances = np.geomspace(1e-4, 1e-1, samples)
    distances = np.asarray(distances, float)
    n = len(gamma)
    e = np.zeros(n)
    e[0] = 1.0
    if direction is not None:
        e = np.asarray(direction, float) / np.linalg.norm(direction)
    x = gamma + distances[:, None] * e
    H = u.hessian(x)
    norms = np.abs(np.linalg.eigvalsh(H)).max(axis=1)
    return fit_power(distances, norms, min_samples=8, min_decades=min_decades)


# ---------------------------------------------------------------------------
# asymptotics


@dataclass
class DecayFit:
    dimension: int
    radii: np.ndarray
    errors: np.ndarray
    scaled: np.ndarray          # r^{n-2} * error
    coefficient: float          # scaled error at the largest radius
    expected: float
    rate: RateFit

    @property
    def relative_error(self) -> float:
        return abs(self.coefficient - self.expected) / abs(self.expected) if self.expected else abs(self.coefficient)


@dataclass
class LogCoefficientFit:
    radii: np.ndarray
    averages: np.ndarray
    d: float
    offset: float
    correction: float
    residual: float
    expected: float

    @property
    def relative_error(self) -> float:
        if self.expected == 0:
            return abs(self.d)
        return abs(self.d - self.expected) / abs(self.expected)


def circle_averages(f: geo.PLConvexFunction, radii, center=(0.0, 0.0), points: int = 256):
    t = 2 * np.pi * (np.arange(points) + 0.5) / points
    ring = np.c_[np.cos(t), np.sin(t)]
    c = np.asarray(center, float)
    return np.array([np.mean(f(c + r * ring)) for r in radii])


def asymptotic_decay_check(u, cfg=None, radii=None):
    """Decay of ``u`` towards its quadratic asymptote.

    For a radial solution in dimension ``n >= 3`` the error
    ``kappa - (U(r) - r^2/2)`` is evaluated in closed form and
    ``r^{n-2}`` times it should approach ``c / (n (n-2))``.

    For a planar PL solution, circle averages of ``u - |x|^2/2`` are fitted by
    ``d log r + e + g / r^2`` and ``d`` is compared with the total atom mass
    over ``2 pi`` (zero when ``cfg`` is ``None`` or has no atoms).
    """
    if isinstance(u, RadialSingularSolution):
        n, c = u.n, u.c
        if n < 3:
            raise ValueError("use a planar solver output for the logarithmic case")
        radii = np.geomspace(10, 1000, 12) if radii is None else np.asarray(radii, float)
        if radii.max() / radii.min() < 10:
            raise InsufficientSamples("radius range too small")
        err = np.asarray(decay_tail(n, c, radii), float)
        scaled = radii ** (n - 2) * err
        expected = c / (n * (n - 2))
        rate = fit_power(radii, err, min_samples=8, min_decades=1.0) if c > 0 else \
            RateFit(radii, err, 0.0, 0.0, 0.0)
        return DecayFit(n, radii, err, scaled, float(scaled[-1]), expected, rate)
    if not isinstance(u, geo.PLConvexFunction):
        raise TypeError("expected a radial solution or a planar PL function")
    reach = float(np.linalg.norm(u.domain, axis=1).min())
    if radii is None:
        lo = 2.0
        if cfg is not None and len(cfg.points):
            lo = max(lo, 2 * float(np.linalg.norm(cfg.points, axis=1).max()))
        radii = np.geomspace(lo, 0.75 * reach, 16)
    radii = np.asarray(radii, float)
    if radii.max() / radii.min() < 2 or radii.max() >= reach:
        raise InsufficientSamples("radius range too small for a log fit")
    avg = circle_averages(u, radii) - 0.5 * radii ** 2
    X = np.c_[np.log(radii), np.ones(len(radii)), radii ** -2.0]
    coef, *_ = np.linalg.lstsq(X, avg, rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - avg) ** 2)))
    expected = 0.0 if cfg is None else float(np.sum(cfg.masses)) / (2 * math.pi)
    return LogCoefficientFit(radii, avg, float(coef[0]), float(coef[1]), float(coef[2]),
                             resid, expected)


# ---------------------------------------------------------------------------
# moduli dimension


def orbifold_dimension(n: int, k: int) -> int:
    """Dimension of the space of k-point singular solutions modulo affine maps."""
    if int(n) != n or int(k) != k or n < 3 or k < 2:
        raise ValueError("need integers n >= 3 and k >= 2")
    n, k = int(n), int(k)
    if k - 1 <= n:
        d = (k - 1) * (k + 2) // 2
        alt = k - 1 + (k - 1) * k // 2
    else:
        d = (k - 1) * (n + 1) - n * (n - 1) // 2
        alt = k - 1 + (k - 1) * n - n * (n - 1) // 2
    if d != alt:
        raise ArithmeticError(f"inconsistent dimension count for n={n}, k={k}")
    return d


def moduli_parameter_count(n: int, k: int) -> int:
    """Masses plus point positions minus the generic orthogonal orbit.

    ``k - 1`` free masses and ``k - 1`` points in R^n, modulo O(n): the
    stabilizer of ``m`` generic points is ``O(n - m)`` (finite once m >= n).
    """
    m = k - 1
    free = max(n - m, 0)
    orbit = n * (n - 1) // 2 - free * (free - 1) // 2
    return m + m * n - orbit


# ---------------------------------------------------------------------------
# canonical form


@dataclass(frozen=True)
class CanonicalMap:
    """Affine equivalence to the normal form.

    ``y = (M x - Q) / s`` and
    ``u~(y) = s^{-2} (u(x) - b.x - c - Q.(M x) + |Q|^2/2)``.
    """

    M: np.ndarray
    Q: np.ndarray
    scale: float
    b: np.ndarray
    c: float

    def forward(self, x):
        x = np.atleast_2d(np.asarray(x, float))
        return (x @ self.M.T - self.Q) / self.scale

    def inverse(self, y):
        y = np.atleast_2d(np.asarray(y, float))
        return np.linalg.solve(self.M, (self.scale * y + self.Q).T).T

    def transform_values(self, x, values):
        x = np.atleast_2d(np.asarray(x, float))
        z = x @ self.M.T
        lin = x @ self.b + self.c + z @ self.Q - 0.5 * self.Q @ self.Q
        return (np.asarray(values, float) - lin) / self.scale ** 2

    def compose(self, inner: "CanonicalMap") -> "CanonicalMap":
        """The map ``self`` after ``inner``."""
        M = self.M @ inner.M
        s = inner.scale * self.scale
        Q = inner.scale * self.Q + self.M @ inner.Q
        return CanonicalMap(M, Q, s, inner.b, inner.c)


@dataclass
class CanonicalConfiguration:
    config: SingularConfiguration
    transform: CanonicalMap


def canonicalize(cfg: SingularConfiguration) -> CanonicalConfiguration:
    """Move the last point to the origin with unit mass and identity asymptote.

    The other points become ``(M P_i - M P_k) / a_k^{1/n}`` with masses
    ``a_i / a_k``; ``M`` is the square root of ``A``.
    """
    n = cfg.dimension
    M = cfg.root_A()
    Q = M @ cfg.points[-1]
    s = float(cfg.masses[-1]) ** (1.0 / n)
    pts = (cfg.points @ M.T - Q) / s
    pts[-1] = 0.0
    masses = cfg.masses / cfg.masses[-1]
    masses[-1] = 1.0
    out = SingularConfiguration(n, pts, masses)
    return CanonicalConfiguration(out, CanonicalMap(M, Q, s, cfg.b.copy(), float(cfg.c)))


def is_canonical(cfg: SingularConfiguration, tol: float = 1e-12) -> bool:
    return (np.allclose(cfg.points[-1], 0, atol=tol) and abs(cfg.masses[-1] - 1) <= tol
            and np.allclose(cfg.A, np.eye(cfg.dimension), atol=tol)
            and np.allclose(cfg.b, 0, atol=tol) and abs(cfg.c) <= tol)


# ---------------------------------------------------------------------------
# Hessian-metric completion


@dataclass
class MetricReport:
    probes: np.ndarray
    to_center: np.ndarray           # segment lengths d_g(P, 0)
    graph_to_center: np.ndarray     # refined-graph distances to 0
    triples: np.ndarray             # (P, Q, R) probe indices, R = -1 is the centre
    slack: np.ndarray               # d(P,R) + d(R,Q) - d(P,Q), >= -tol
    tolerance: float

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_center)))

    @property
    def triangle_ok(self) -> bool:
        return bool(np.all(self.slack >= -self.tolerance))

    @property
    def passed(self) -> bool:
        return self.finite and self.triangle_ok


def _disk_cloud(rings: int, spokes: int, radius: float):
    r = radius * np.geomspace(1e-3, 1.0, rings)
    t = 2 * np.pi * np.arange(spokes) / spokes
    ring_pts = (r[:, None, None] * np.stack([np.cos(t), np.sin(t)], -1)[None]).reshape(-1, 2)
    return np.vstack([[0.0, 0.0], ring_pts])


def metric_completion_check(sol: RadialSingularSolution, probes=None, triples: int = 100,
                            seed: int = 0, rings: int = 40, spokes: int = 96,
                            neighbours: int = 48, tol: Optional[float] = None) -> MetricReport:
    """Distances to the singular point and triangle inequalities in the unit ball.

    ``d_g(P, 0)`` is the metric length of the radial segment, which is finite
    for every ``c``. Distances between probes come from shortest paths in a
    graph on a refined polar cloud (plus the probes and the centre) whose
    edges carry exact segment lengths. Triples with a probe in the middle use
    graph distances throughout; triples through the centre use the exact
    radial lengths, so the graph distance must not exceed them by more than
    the refinement tolerance ``tol``. By default that tolerance is twice the
    largest overshoot of the graph on the radial segments, where the exact
    distance is known.
    """
    if sol.n != 2:
        raise ValueError("the metric check is planar")
    rng = np.random.default_rng(seed)
    if probes is None:
        rad = np.sqrt(rng.uniform(0, 1, 20))
        ang = rng.uniform(0, 2 * np.pi, 20)
        probes = np.c_[rad * np.cos(ang), rad * np.sin(ang)]
    probes = np.atleast_2d(np.asarray(probes, float))
    center = sol.center
    to_c = np.array([segment_metric_length(sol, p, center) for p in probes])
    cloud = np.vstack([center, probes, center + _disk_cloud(rings, spokes, 1.0)[1:]])
    tree = cKDTree(cloud)
    k = min(neighbours + 1, len(cloud))
    _, nb = tree.query(cloud, k=k)
    rows = np.repeat(np.arange(len(cloud)), k - 1)
    cols = nb[:, 1:].ravel()
    w = segment_metric_lengths(sol, cloud[rows], cloud[cols])
    G = coo_matrix((w, (rows, cols)), shape=(len(cloud),) * 2).tocsr()
    G = G.maximum(G.T)
    marked = np.arange(1 + len(probes))
    D = dijkstra(G, directed=False, indices=marked)[:, marked]
    graph_c = D[1:, 0]
    m = len(probes)
    picks = rng.integers(0, m, size=(triples, 2))
    mid = rng.integers(-1, m, size=triples)      # -1 selects the centre
    P, Q = picks[:, 0] + 1, picks[:, 1] + 1
    R = np.where(mid < 0, 0, mid + 1)
    # through the centre the exact radial lengths bound the graph distance
    via = np.where(mid < 0, to_c[P - 1] + to_c[Q - 1], D[P, R] + D[R, Q])
    slack = via - D[P, Q]
    if tol is None:
        tol = 2 * float(np.max(graph_c - to_c, initial=0.0)) + 1e-12
    return MetricReport(probes, to_c, graph_c, np.c_[P - 1, Q - 1, R - 1], slack, tol)
