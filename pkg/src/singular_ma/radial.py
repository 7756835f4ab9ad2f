"""Radially symmetric solutions of ``det D^2 u = 1 + c*|B_1| delta_P``.

The canonical profile of mass parameter ``c >= 0`` in dimension ``n`` is

    U(r) = int_0^r (t^n + c)^(1/n) dt,

whose subgradient at the centre is the closed ball of radius ``c^(1/n)``.
Everything here is a pure function of immutable value types.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.special import gamma

QUAD_TOL = 1e-10


@lru_cache(maxsize=None)
def unit_ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    if n < 1:
        raise ValueError("dimension must be positive")
    return math.pi ** (n / 2) / gamma(n / 2 + 1)


def _excess_slope(t, n, c):
    # (t^n + c)^(1/n) - t without cancellation for large t
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        big = t > 1.0
        out = np.empty_like(t)
        tb = t[big]
        out[big] = tb * np.expm1(np.log1p(c / tb ** n) / n)
        ts = t[~big]
        out[~big] = (ts ** n + c) ** (1.0 / n) - ts
    return out


class RadialProfile:
    """A convex radial profile ``r -> phi(r)`` on ``[0, r_max]``.

    Subclasses provide ``value``, ``derivative`` and ``second_derivative``;
    all accept scalars or arrays of nonnegative radii.
    """

    r_max = math.inf

    def value(self, r):
        raise NotImplementedError

    def derivative(self, r):
        raise NotImplementedError

    def second_derivative(self, r):
        raise NotImplementedError

    def __call__(self, r):
        return self.value(r)


@dataclass(frozen=True, eq=False)
class RadialSingularSolution(RadialProfile):
    """Member of the classified family, up to a unimodular affine change.

    The function on R^n is ``u(x) = U(|A x + b - P|) - ell . x`` with ``U``
    the canonical profile of mass parameter ``mass_param``.
    """

    dimension: int
    mass_param: float = 0.0
    center: Optional[np.ndarray] = None
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    ell: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.dimension
        if int(n) != n or n < 2:
            raise ValueError("dimension must be an integer >= 2")
        if not (self.mass_param >= 0 and math.isfinite(self.mass_param)):
            raise ValueError("mass parameter must be finite and nonnegative")
        center = np.zeros(n) if self.center is None else np.asarray(self.center, float)
        A = np.eye(n) if self.A is None else np.asarray(self.A, float)
        b = np.zeros(n) if self.b is None else np.asarray(self.b, float)
        ell = np.zeros(n) if self.ell is None else np.asarray(self.ell, float)
        if center.shape != (n,) or b.shape != (n,) or ell.shape != (n,):
            raise ValueError("center, b and ell must be vectors of length n")
        if A.shape != (n, n):
            raise ValueError("A must be n x n")
        if abs(np.linalg.det(A) - 1.0) > 1e-12 * max(1.0, np.abs(A).max() ** n):
            raise ValueError("affine normalisation must be unimodular (det A = 1)")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "ell", ell)

    # -- canonical one-dimensional profile --------------------------------

    @property
    def n(self) -> int:
        return self.dimension

    @property
    def c(self) -> float:
        return self.mass_param

    @property
    def subgradient_radius(self) -> float:
        return self.c ** (1.0 / self.n)

    def value(self, r):
        return radial_value(self, r)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        return (r ** self.n + self.c) ** (1.0 / self.n)

    def second_derivative(self, r):
        return radial_hessian_spectrum(self, r)[0]

    # -- the function on R^n ----------------------------------------------

    def _local(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = x @ self.A.T + self.b - self.center
        return x, y, np.linalg.norm(y, axis=1)

    def evaluate(self, x):
        """Value of u at points ``x`` of shape (n,) or (m, n)."""
        x, _, r = self._local(x)
        out = np.asarray(self.value(r), dtype=float) - x @ self.ell
        return out if out.size > 1 else float(out[0])

    def gradient(self, x):
        x, y, r = self._local(x)
        if np.any(r == 0) and self.c > 0:
            raise ValueError("gradient undefined at the singular point")
        with np.errstate(invalid="ignore", divide="ignore"):
            e = np.where(r[:, None] > 0, y / r[:, None], 0.0)
        g = self.derivative(r)[:, None] * e
        return g @ self.A - self.ell

    def hessian(self, x):
        """Hessians of shape (m, n, n) at points ``x`` away from the centre."""
        x, y, r = self._local(x)
        lam_r, lam_t = radial_hessian_spectrum(self, r)
        e = y / r[:, None]
        eye = np.eye(self.n)
        H = lam_t[:, None, None] * eye + (lam_r - lam_t)[:, None, None] * (
            e[:, :, None] * e[:, None, :]
        )
        return np.einsum("ji,mjk,kl->mil", self.A, H, self.A)


def radial_value(sol: RadialSingularSolution, r):
    """Profile value ``int_0^r (t^n + c)^(1/n) dt`` (adaptive quadrature)."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("radius must be nonnegative")
    n, c = sol.n, sol.c
    if c == 0:
        out = 0.5 * r_arr ** 2
        return float(out) if out.ndim == 0 else out
    flat = r_arr.ravel()
    out = np.empty_like(flat)
    # integrate the excess over t so the quadratic part is exact
    f = lambda t: float(_excess_slope(np.array([t]), n, c)[0])
    order = np.argsort(flat)
    prev_r, acc = 0.0, 0.0
    for k in order:
        rk = flat[k]
        if rk > prev_r:
            piece, _ = integrate.quad(f, prev_r, rk, epsabs=QUAD_TOL * 1e-2,
                                      epsrel=1e-13, limit=200)
            acc += piece
            prev_r = rk
        out[k] = 0.5 * rk * rk + acc
    out = out.reshape(r_arr.shape)
    return float(out) if out.ndim == 0 else out


def radial_hessian_spectrum(sol: RadialSingularSolution, r):
    """Radial and tangential Hessian eigenvalues at distance ``r`` from the centre.

    The tangential eigenvalue has multiplicity ``n - 1``; the product of all
    ``n`` eigenvalues is one.
    """
    r = np.asarray(r, dtype=float)
    n, c = sol.n, sol.c
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    if c > 0 and np.any(r == 0):
        raise ValueError("Hessian is unbounded at the singular point")
    if c == 0:
        one = np.ones_like(r)
        return one, one.copy()
    s = r ** n + c
    lam_r = r ** (n - 1) * s ** ((1.0 - n) / n)
    lam_t = s ** (1.0 / n) / r
    return lam_r, lam_t


def subgradient_mass_at_singularity(sol: RadialSingularSolution) -> float:
    """Lebesgue measure of the subgradient set at the centre, ``omega_n * c``."""
    return unit_ball_volume(sol.n) * sol.c


def asymptotic_offset(n: int, c: float) -> float:
    """``lim (U(r) - r^2/2)`` as r -> infinity; finite only for n >= 3."""
    if c == 0:
        return 0.0
    if n < 3:
        return math.inf
    val, _ = integrate.quad(lambda t: float(_excess_slope(np.array([t]), n, c)[0]),
                            0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    return val


def decay_tail(n: int, c: float, r):
    """``int_r^inf ((t^n + c)^(1/n) - t) dt``, the gap to the asymptotic quadratic."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    f = lambda t: float(_excess_slope(np.array([t]), n, c)[0])
    out = np.array([integrate.quad(f, rk, np.inf, epsabs=0, epsrel=1e-12,
                                   limit=400)[0] for rk in r])
    return out


# ---------------------------------------------------------------------------
# radial ODE for general radial measures


@dataclass(frozen=True)
class RadialMeasure:
    """``atom * delta_0 + density(|x|) dx`` in R^n."""

    dimension: int
    atom_at_center: float = 0.0
    density: Callable[[float], float] = field(default=lambda r: 1.0)

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ValueError("dimension must be an integer >= 2")
        if self.atom_at_center < 0:
            raise ValueError("atom mass must be nonnegative")


class ODEProfile(RadialProfile):
    """Profile obtained by integrating ``u' = (mu(B_r)/omega_n)^(1/n)``."""

    def __init__(self, measure: RadialMeasure, r_max: float, sol, offset=0.0):
        self.measure = measure
        self.r_max = r_max
        self._sol = sol
        self.offset = offset

    def _state(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.r_max * (1 + 1e-12)):
            raise ValueError("radius outside the integrated range")
        return self._sol.sol(np.clip(r, 0, self.r_max))

    def cumulative_mass(self, r):
        return self._state(r)[0]

    def value(self, r):
        out = self._state(r)[1] + self.offset
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, r):
        n = self.measure.dimension
        m = np.maximum(self.cumulative_mass(r), 0.0)
        return (m / unit_ball_volume(n)) ** (1.0 / n)

    def second_derivative(self, r):
        n = self.measure.dimension
        r = np.asarray(r, dtype=float)
        m = self.cumulative_mass(r)
        f = np.vectorize(self.measure.density, otypes=[float])(r)
        dm = f * n * unit_ball_volume(n) * r ** (n - 1)
        w = unit_ball_volume(n)
        with np.errstate(divide="ignore"):
            return (1.0 / n) * (m / w) ** (1.0 / n - 1.0) * dm / w

    def shifted(self, offset):
        return ODEProfile(self.measure, self.r_max, self._sol, self.offset + offset)


def radial_ode_solve(meas: RadialMeasure, r_max: float, rtol=1e-13, atol=1e-14,
                     breakpoints=()) -> ODEProfile:
    """Radial convex solution with ``u(0) = 0`` for a radial measure.

    The state is (mu(B_r), u(r)); ``breakpoints`` are radii where the density
    is discontinuous, and integration restarts there.
    """
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    n = meas.dimension
    w = unit_ball_volume(n)

    def rhs(r, y):
        f = meas.density(r)
        if f < 0:
            raise ValueError(f"negative density {f!r} at r={r!r}")
        return [f * n * w * r ** (n - 1), (max(y[0], 0.0) / w) ** (1.0 / n)]

    knots = sorted({0.0, float(r_max), *[float(b) for b in breakpoints if 0 < b < r_max]})
    y0 = [meas.atom_at_center, 0.0]
    pieces = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        res = integrate.solve_ivp(rhs, (lo, hi), y0, method="DOP853", rtol=rtol,
                                  atol=atol, dense_output=True)
        if not res.success:
            raise RuntimeError(res.message)
        pieces.append((lo, hi, res.sol))
        y0 = res.y[:, -1]
    return ODEProfile(meas, float(r_max), _Piecewise(pieces))


class _Piecewise:
    def __init__(self, pieces):
        self.pieces = pieces
        self.knots = np.array([p[1] for p in pieces])

    def sol(self, r):
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        idx = np.minimum(np.searchsorted(self.knots, flat), len(self.pieces) - 1)
        out = np.empty((2, flat.size))
        for k in np.unique(idx):
            sel = idx == k
            out[:, sel] = self.pieces[k][2](flat[sel])
        return out.reshape((2,) + r.shape)


# ---------------------------------------------------------------------------
# Legendre duality


class DualProfile(RadialProfile):
    """Closed-form conjugate of a canonical profile (centre at origin)."""

    def __init__(self, sol: RadialSingularSolution):
        self.sol = sol
        self.flat_radius = sol.subgradient_radius

    def _primal_radius(self, s):
        s = np.asarray(s, dtype=float)
        n, c = self.sol.n, self.sol.c
        inside = s <= self.flat_radius
        with np.errstate(invalid="ignore"):
            r = np.where(inside, 0.0, np.maximum(s ** n - c, 0.0) ** (1.0 / n))
        return r

    def value(self, s):
        s = np.asarray(s, dtype=float)
        r = self._primal_radius(s)
        out = r * s - np.asarray(radial_value(self.sol, r))
        out = np.where(s <= self.flat_radius, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def derivative(self, s):
        return self._primal_radius(s)

    def second_derivative(self, s):
        s = np.asarray(s, dtype=float)
        n, c = self.sol.n, self.sol.c
        r = self._primal_radius(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = s ** (n - 1) * r ** (1 - n)
        return np.where(s <= self.flat_radius, 0.0, out)


def radial_legendre(sol: RadialSingularSolution) -> DualProfile:
    """Legendre transform ``u*(y) = sup_x (x.y - u(x))`` as a radial profile.

    It vanishes on the ball of radius ``c^(1/n)`` (the subgradient set of the
    singular point) and equals ``r|y| - U(r)`` with ``U'(r) = |y|`` outside.
    """
    if np.any(sol.center != 0) or np.any(sol.b != 0) or np.any(sol.ell != 0) \
            or not np.allclose(sol.A, np.eye(sol.n)):
        raise ValueError("Legendre transform needs the canonical normalisation")
    return DualProfile(sol)


class ConjugateProfile(RadialProfile):
    """Numerical conjugate ``sup_{r>=0} (r s - phi(r))`` of a convex profile."""

    def __init__(self, profile: RadialProfile, r_hi: float = 1e6):
        self.profile = profile
        self.r_hi = min(r_hi, profile.r_max)
        self.phi0 = float(profile.value(0.0))
        self.slope0 = float(profile.derivative(0.0))

    def argmax(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros_like(s)
        for k, sk in enumerate(s):
            if sk <= self.slope0:
                continue
            g = lambda r: float(self.profile.derivative(r)) - sk
            hi = 1.0
            while g(hi) < 0:
                hi *= 2.0
                if hi > self.r_hi:
                    raise ValueError("slope outside the range of the profile")
            out[k] = optimize.brentq(g, 0.0, hi, xtol=1e-15, rtol=1e-15)
        return out

    def value(self, s):
        s_arr = np.asarray(s, dtype=float)
        r = self.argmax(s_arr.ravel())
        out = r * s_arr.ravel() - np.asarray(self.profile.value(r)).ravel()
        out = out.reshape(s_arr.shape)
        return float(out) if out.ndim == 0 else out

    def derivative(self, s):
        return self.argmax(s)


def radial_conjugate(profile: RadialProfile) -> ConjugateProfile:
    return ConjugateProfile(profile)


# ---------------------------------------------------------------------------
# Hessian metric g = D^2 u


def hessian_metric_length(sol: RadialSingularSolution, from_r: float, to_r: float) -> float:
    """Length of the radial segment ``[from_r, to_r]`` in the metric ``D^2 u``.

    Along a ray the metric is ``u''(r) dr^2``; near a singular centre the
    integrand behaves like ``r^((n-1)/2)`` and the length stays finite.
    """
    if not 0 <= from_r < to_r:
        raise ValueError("need 0 <= from_r < to_r")
    n, c = sol.n, sol.c
    if c == 0:
        return to_r - from_r

    def f(r):
        if r == 0.0:
            return 0.0
        s = r ** n + c
        return math.sqrt(r ** (n - 1) * s ** ((1.0 - n) / n))

    # the integrand has a power-law cusp at zero; split there
    pts = [p for p in (c ** (1.0 / n),) if from_r < p < to_r]
    val, _ = integrate.quad(f, from_r, to_r, points=pts or None, epsabs=1e-14,
                            epsrel=1e-13, limit=400)
    return val


def segment_metric_length(sol: RadialSingularSolution, p, q, order: int = 64) -> float:
    """Metric length of the straight segment from ``p`` to ``q`` in R^n."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = q - p
    L = np.linalg.norm(d)
    if L == 0:
        return 0.0
    yc = p @ sol.A.T + sol.b - sol.center
    dy = d @ sol.A.T
    # split at the closest approach to the singular point, where the
    # integrand is least smooth
    t_star = float(np.clip(-(yc @ dy) / (dy @ dy), 0.0, 1.0))
    if np.linalg.norm(yc + t_star * dy) < 1e-14:
        r0 = np.linalg.norm(yc)
        r1 = np.linalg.norm(yc + dy)
        # passes through the centre: two radial pieces
        total = 0.0
        for a in (r0, r1):
            if a > 0:
                total += hessian_metric_length(sol, 0.0, a)
        return total
    nodes, weights = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for lo, hi in ((0.0, t_star), (t_star, 1.0)):
        if hi - lo <= 0:
            continue
        t = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        x = p + t[:, None] * d
        H = sol.hessian(x)
        q_form = np.einsum("i,mij,j->m", d, H, d)
        total += 0.5 * (hi - lo) * np.sum(weights * np.sqrt(np.maximum(q_form, 0)))
    return float(total)


def segment_metric_lengths(sol: RadialSingularSolution, P, Q, order: int = 64) -> np.ndarray:
    """Vectorized :func:`segment_metric_length` for many segments at once."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    D = Q - P
    Y = P @ sol.A.T + sol.b - sol.center
    DY = D @ sol.A.T
    dd = np.einsum("ij,ij->i", DY, DY)
    out = np.zeros(len(P))
    live = dd > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        t_star = np.clip(-np.einsum("ij,ij->i", Y, DY) / dd, 0.0, 1.0)
    close = np.linalg.norm(Y + t_star[:, None] * DY, axis=1) < 1e-14
    for m in np.flatnonzero(live & close):
        out[m] = segment_metric_length(sol, P[m], Q[m])
    idx = np.flatnonzero(live & ~close)
    if len(idx) == 0:
        return out
    g, w = np.polynomial.legendre.leggauss(order)
    for lo, hi in ((np.zeros(len(idx)), t_star[idx]), (t_star[idx], np.ones(len(idx)))):
        half = 0.5 * (hi - lo)
        t = half[:, None] * g[None] + (0.5 * (hi + lo))[:, None]
        y = Y[idx, None, :] + t[..., None] * DY[idx, None, :]
        r = np.linalg.norm(y, axis=2)
        n, c = sol.n, sol.c
        s = r ** n + c
        lam_r = r ** (n - 1) * s ** ((1.0 - n) / n)
        lam_t = s ** (1.0 / n) / r
        e = DY[idx, None, :]
        along = np.einsum("mkj,mkj->mk", y, np.broadcast_to(e, y.shape)) / r
        q_form = lam_r * along ** 2 + lam_t * (dd[idx, None] - along ** 2)
        out[idx] += half * np.sum(w * np.sqrt(np.maximum(q_form, 0.0)), axis=1)
    return out
