"""Catalogue of quantitative checks.

Every check returns a :class:`CheckRecord` with the measured value, what it
was compared against and the tolerance used. Tolerances are multiplied by a
global ``tol_scale`` so a whole suite can be loosened or tightened at once.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate

from . import geometry as geo
from .mesh import graded_polygon_mesh, regular_polygon
from .radial import (RadialMeasure, RadialSingularSolution, radial_hessian_spectrum,
                     radial_legendre, radial_ode_solve, radial_value, unit_ball_volume)
from .solver import (DirichletProblem, SingularConfiguration, averaged_subsolution,
                     build_sandwich, comparison_check, ellipsoid_barrier, solve_dirichlet,
                     solve_global)
from .verify import (asymptotic_decay_check, canonicalize, hessian_growth_fit,
                     metric_completion_check, moduli_parameter_count, orbifold_dimension)


@dataclass
class CheckRecord:
    name: str
    anchor: str
    inputs: dict
    measured: object
    expected: object
    tolerance: float
    passed: bool
    notes: str = ""

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    tags: tuple
    tolerance: float
    run: Callable = field(compare=False)
    slow: bool = False

    def __call__(self, tol_scale: float = 1.0) -> CheckRecord:
        return self.run(self, self.tolerance * tol_scale)

    def matches(self, text: str) -> bool:
        t = text.lower()
        return any(t in s.lower() for s in (self.name, self.anchor, *self.tags))

    def record(self, inputs, measured, expected, tol, passed, notes=""):
        return CheckRecord(self.name, self.anchor, inputs, measured, expected, tol,
                           bool(passed), notes)


REGISTRY: dict = {}


def check(name, anchor, tags, tolerance, slow=False):
    def wrap(fn):
        REGISTRY[name] = Check(name, anchor, tuple(tags), tolerance, fn, slow)
        return fn
    return wrap


def list_checks(filter_text: str = ""):
    return [c for c in REGISTRY.values() if not filter_text or c.matches(filter_text)]


def run_checks(names=None, tol_scale: float = 1.0, include_slow: bool = True):
    chosen = list(REGISTRY) if names in (None, "all") else list(names)
    out = []
    for name in chosen:
        if name not in REGISTRY:
            raise KeyError(f"unknown check {name!r}")
        c = REGISTRY[name]
        if c.slow and not include_slow and names in (None, "all"):
            continue
        out.append(c(tol_scale))
    return out


# ---------------------------------------------------------------------------
# shared fixtures


def radial_boundary(c: float):
    sol = RadialSingularSolution(2, c)
    return lambda x: np.asarray(radial_value(sol, np.linalg.norm(np.atleast_2d(x), axis=1)),
                                dtype=float)


def paraboloid(x):
    x = np.atleast_2d(x)
    return 0.5 * np.einsum("ij,ij->i", x, x)


@lru_cache(maxsize=8)
def one_atom_solution(h: float, graded: bool = False):
    """Disk problem with a single atom of mass pi and exact radial data."""
    phi = radial_boundary(1.0)
    dom = regular_polygon(64)
    mesh = graded_polygon_mesh(dom, h, [[0.0, 0.0]], r_min=1e-4) if graded else None
    prob = DirichletProblem(dom, phi, h=h, atoms=[((0.0, 0.0), math.pi)], mesh=mesh)
    f, rep = solve_dirichlet(prob)
    err = float(np.max(np.abs(f.values - phi(f.nodes))))
    return f, rep, err


@lru_cache(maxsize=2)
def two_atom_global(h: float = 0.25, radii=(4.0, 8.0, 16.0)):
    cfg = SingularConfiguration(2, [[1.0, 0.0], [-1.0, 0.0]], [math.pi, math.pi])
    return cfg, solve_global(cfg, list(radii), h)


def small_instances():
    """PL instances with at most twelve nodes, used against the brute-force cells."""
    out = []
    cone = np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1.0]])
    out.append(("cone-5", cone, np.array([0, 1, 1, 1, 1.0])))
    t = np.pi / 4 * np.arange(8) + np.pi / 8
    oct_nodes = np.vstack([[0, 0], np.c_[np.cos(t), np.sin(t)]])
    out.append(("cone-8", oct_nodes, np.r_[0.0, np.full(8, np.cos(np.pi / 8))]))
    g = np.array([[x, y] for x in (-1, 0, 1) for y in (-1, 0, 1)], float)
    out.append(("crease-9", g, np.abs(g[:, 0])))
    out.append(("bowl-9", g, paraboloid(g)))
    rng = np.random.default_rng(7)
    for k in range(4):
        m = int(rng.integers(6, 13))
        pts = rng.uniform(-1, 1, size=(m, 2))
        planes = rng.normal(size=(3, 3))
        vals = 0.7 * paraboloid(pts) + np.max(pts @ planes[:, :2].T + planes[:, 2], axis=1)
        out.append((f"random-{k}", pts, vals))
    return out


def crease_fixture(n: int = 11):
    x = np.linspace(-1, 1, n)
    X, Y = np.meshgrid(x, x)
    P = np.c_[X.ravel(), Y.ravel()]
    return geo.build_pl(P, np.abs(P[:, 0]))


# ---------------------------------------------------------------------------
# radial family


@check("radial-closed-form", "profile integral of (tau^n + c)^(1/n)", ["radial", "exact"], 1e-9)
def _(c, tol):
    got = float(radial_value(RadialSingularSolution(2, 1.0), 1.0))
    want = (math.sqrt(2) + math.asinh(1)) / 2
    return c.record({"n": 2, "c": 1, "r": 1}, got, want, tol, abs(got - want) <= tol)


@check("radial-ode", "radial ODE u' = (mu(B_r)/omega_n)^(1/n)", ["radial", "ode"], 1e-8)
def _(c, tol):
    worst = {}
    r = np.linspace(0, 5, 201)
    for n in (2, 3, 4):
        a = 1.3
        prof = radial_ode_solve(RadialMeasure(n, a), 5.0)
        exact = radial_value(RadialSingularSolution(n, a / unit_ball_volume(n)), r)
        worst[str(n)] = float(np.max(np.abs(prof.value(r) - exact)))
    m = max(worst.values())
    return c.record({"a": 1.3, "r_max": 5}, worst, 0.0, tol, m <= tol)


@check("rate-sharpness", "r * lambda_t -> c^(1/n) at the singular point",
       ["radial", "hessian", "rate"], 1e-4)
def _(c, tol):
    out = {}
    ok = True
    for n in (2, 3, 4):
        cc = 1.7
        _, lt = radial_hessian_spectrum(RadialSingularSolution(n, cc), 1e-6)
        rel = abs(1e-6 * lt - cc ** (1 / n)) / cc ** (1 / n)
        out[str(n)] = float(rel)
        ok &= rel < tol
    return c.record({"c": 1.7, "r": 1e-6}, out, 0.0, tol, ok)


@check("hessian-growth-radial", "|D^2 u| <= C / dist(x, singular set)",
       ["radial", "hessian", "rate"], 0.02)
def _(c, tol):
    fit = hessian_growth_fit(RadialSingularSolution(2, 1.0), [0.0, 0.0])
    return c.record({"n": 2, "c": 1, "range": [1e-4, 1e-1]},
                    {"exponent": fit.exponent, "C": fit.constant, "residual": fit.residual},
                    -1.0, tol, abs(fit.exponent + 1) <= tol)


@check("det-one", "det D^2 u = 1 away from the singular point", ["radial", "invariant"], 1e-10)
def _(c, tol):
    worst = 0.0
    r = np.geomspace(1e-3, 10, 60)
    for n in (2, 3, 4, 5):
        for cc in (0.0, 0.5, 3.0):
            lr, lt = radial_hessian_spectrum(RadialSingularSolution(n, cc), r)
            worst = max(worst, float(np.max(np.abs(lr * lt ** (n - 1) - 1))))
    return c.record({"radii": "1e-3..10"}, worst, 0.0, tol, worst <= tol)


@check("legendre-involution", "dual profile flat on the ball of radius c^(1/n)",
       ["radial", "legendre"], 1e-8)
def _(c, tol):
    from .radial import radial_conjugate
    sol = RadialSingularSolution(2, 1.0)
    dual = radial_legendre(sol)
    back = radial_conjugate(dual)
    r = np.linspace(0.05, 3, 40)
    err = float(np.max(np.abs(back.value(r) - radial_value(sol, r))))
    flat = float(dual.value(1.0))
    return c.record({"n": 2, "c": 1}, {"involution": err, "dual_at_radius": flat}, 0.0, tol,
                    err <= tol and abs(flat) <= tol)


@check("asymptotic-decay", "|x|^(n-2) (u - |x|^2/2 - const) -> c/(n(n-2))",
       ["radial", "asymptotics"], 1e-2)
def _(c, tol):
    out = {}
    ok = True
    for n in (3, 4, 5):
        fit = asymptotic_decay_check(RadialSingularSolution(n, 1.0))
        out[str(n)] = fit.coefficient
        ok &= fit.relative_error <= tol
    return c.record({"c": 1}, out, {str(n): 1 / (n * (n - 2)) for n in (3, 4, 5)}, tol, ok)


# ---------------------------------------------------------------------------
# measures of PL functions


@check("measure-oracle", "atom mass = area of the subgradient cell", ["geometry", "measure"], 1e-10)
def _(c, tol):
    worst = 0.0
    for _, nodes, vals in small_instances():
        f = geo.build_pl(nodes, vals)
        areas = geo.cell_areas(f)
        for i in f.interior_nodes:
            brute = geo._polygon_area(geo.halfplane_cell(nodes, vals, i))
            worst = max(worst, abs(areas[i] - brute))
    cone = small_instances()[0]
    mass = geo.ma_measure(geo.build_pl(cone[1], cone[2])).mass_at(0)
    return c.record({"instances": len(small_instances())},
                    {"max_difference": worst, "cone_mass": mass}, {"cone_mass": 4.0}, tol,
                    worst <= tol and abs(mass - 4) <= tol)


@check("strict-convexity", "strictly convex away from the convex hull of the singular set",
       ["geometry", "solver", "contact"], 0.0)
def _(c, tol):
    f, _, _ = one_atom_solution(0.05)
    chk = geo.check_strict_convexity(f, [[0.0, 0.0]])
    crease = crease_fixture()
    flags = geo.strict_convexity_region(crease, [[0, -0.5], [0, 0.5]])
    on_line = np.abs(crease.nodes[:, 0]) < 1e-12
    outside = on_line & (np.abs(crease.nodes[:, 1]) > 0.5) & ~crease.boundary_mask
    crease_ok = bool(np.all(~flags[outside]))
    return c.record({"h": 0.05},
                    {"failures": len(chk.failures), "checked": len(chk.checked),
                     "crease_flagged": crease_ok},
                    {"failures": 0, "crease_flagged": True}, tol,
                    chk.passed and crease_ok)


# ---------------------------------------------------------------------------
# Dirichlet solver


@check("dirichlet-recovery", "one atom a = pi reproduces the c = 1 profile",
       ["solver", "dirichlet"], 5.0)
def _(c, tol):
    errs = {}
    for h in (0.05, 0.025):
        errs[str(h)] = one_atom_solution(h)[2]
    ok = errs["0.05"] < tol * 0.05 and errs["0.025"] <= 1.1 * errs["0.05"]
    return c.record({"sides": 64, "h": [0.05, 0.025]}, errs, "< 5h, decreasing", tol, ok)


@check("residual-soundness", "re-measured cells reproduce the targets", ["solver", "measure"], 1.0)
def _(c, tol):
    f, rep, _ = one_atom_solution(0.05)
    meas = geo.ma_measure(f)
    worst = float(np.max(np.abs(meas.masses - rep.targets)))
    return c.record({"h": 0.05, "solver_tol": rep.tol}, worst, "<= solver tolerance",
                    tol * rep.tol, worst <= tol * rep.tol)


@check("uniqueness-probe", "two starting points converge to the same solution",
       ["solver", "uniqueness"], 2.0)
def _(c, tol):
    phi = radial_boundary(1.0)
    prob = DirichletProblem(regular_polygon(64), phi, h=0.1, atoms=[((0.0, 0.0), math.pi)])
    f1, r1 = solve_dirichlet(prob, tol=1e-11)
    mesh = prob.build_mesh()
    r = np.linalg.norm(mesh.nodes, axis=1)
    low = phi(mesh.nodes[mesh.boundary]).mean() + 0.6 * (r ** 2 - 1) + 1.2 * (r - 1)
    f2, r2 = solve_dirichlet(prob, init=low, tol=1e-11)
    gap = float(np.max(np.abs(f1.values - f2.values)))
    return c.record({"h": 0.1, "solver_tol": 1e-11}, gap, "<= 2 tol", tol * 1e-11,
                    gap <= tol * 1e-11 and r1.converged and r2.converged)


@check("hessian-growth-solver", "|D^2 u| <= C / dist(x, singular set) on solver output",
       ["solver", "hessian", "rate"], 0.1)
def _(c, tol):
    f, _, _ = one_atom_solution(0.05, graded=True)
    fit = hessian_growth_fit(f, [0.0, 0.0], distances=(1e-3, 0.3))
    return c.record({"mesh": "graded", "range": [1e-3, 0.3]},
                    {"exponent": fit.exponent, "C": fit.constant, "residual": fit.residual},
                    -1.0, tol, abs(fit.exponent + 1) <= tol)


@check("comparison-principle", "u(x) <= |x|^2/2 under extra mass", ["solver", "comparison"], 1e-9)
def _(c, tol):
    rng = np.random.default_rng(3)
    worst = -np.inf
    for _ in range(3):
        k = int(rng.integers(1, 4))
        pts = rng.uniform(-0.5, 0.5, size=(k, 2))
        masses = rng.uniform(0.1, 1.5, size=k)
        lower = lambda x: paraboloid(x) - 0.1 * (1 + np.atleast_2d(x)[:, 0])
        prob = DirichletProblem(regular_polygon(64), lower, h=0.1,
                                atoms=list(zip(pts, masses)))
        f, _ = solve_dirichlet(prob)
        v = geo.build_pl(f.nodes, paraboloid(f.nodes), boundary_mask=f.boundary_mask)
        worst = max(worst, comparison_check(f, v, tol).max_excess)
    return c.record({"instances": 3}, worst, "<= tol", tol, worst <= tol)


@check("averaged-subsolution", "det D^2 of the averaged subsolution >= 1",
       ["solver", "subsolution"], 1e-10)
def _(c, tol):
    rng = np.random.default_rng(11)
    worst = np.inf
    for k in (2, 3):
        pts = rng.normal(size=(k, 3))
        cfg = SingularConfiguration(3, pts, rng.uniform(0.5, 2.0, size=k))
        sub = averaged_subsolution(cfg)
        X = rng.normal(scale=2.0, size=(1000, 3))
        worst = min(worst, float(np.min(sub.det_hessian(X))))
    return c.record({"n": 3, "k": [2, 3], "points": 1000}, worst, 1.0, tol, worst >= 1 - tol)


@check("sandwich-gradient-jump", "inner slope 2 K_1 below outer slope (1 + K_2)^(1/n)",
       ["solver", "sandwich"], 0.0)
def _(c, tol):
    sb = build_sandwich(SingularConfiguration(3, [[0.0, 0.0, 0.0]], [1.0]))
    inner, outer = sb.gradient_jump()
    finite = math.isfinite(sb.beta_plus) and math.isfinite(sb.beta_minus)
    return c.record({"n": 3, "atom": 1.0},
                    {"inner": inner, "outer": outer, "K2": sb.K2,
                     "beta_minus": sb.beta_minus, "beta_plus": sb.beta_plus},
                    "inner < outer, K2 >= 1, finite shifts", tol,
                    inner < outer and sb.K2 >= 1 and finite)


@check("global-sandwich", "lower + beta_- <= u_R <= upper + beta_+ on every ball",
       ["solver", "global", "sandwich"], 5.0, slow=True)
def _(c, tol):
    _, run = two_atom_global()
    viol = sum(len(b["violations"]) for b in run.bounds)
    return c.record({"radii": run.radii, "h": 0.25},
                    {"violations": viol, "cauchy": run.cauchy}, 0, tol, viol == 0)


@check("log-coefficient", "log coefficient d = sum(a) / (2 pi)",
       ["solver", "global", "asymptotics", "log"], 0.1, slow=True)
def _(c, tol):
    cfg, run = two_atom_global()
    fit = asymptotic_decay_check(run.limit, cfg, radii=np.geomspace(3, 10, 16))
    return c.record({"atoms": [[1, 0, math.pi], [-1, 0, math.pi]], "R": run.radii[-1]},
                    {"d": fit.d, "residual": fit.residual}, fit.expected, tol,
                    fit.relative_error <= tol)


@check("ellipsoid-barrier", "det D^2 v = lambda for the ellipsoid barrier",
       ["solver", "barrier"], 1e-9)
def _(c, tol):
    rng = np.random.default_rng(5)
    worst = 0.0
    for n in (2, 3, 4):
        for _ in range(100):
            lam, r = rng.uniform(0.1, 5), rng.uniform(0.05, 2)
            b = ellipsoid_barrier(n, lam, r)
            worst = max(worst, abs(np.linalg.det(b.hessian()) - lam) / lam)
    return c.record({"n": [2, 3, 4], "samples": 300}, worst, 0.0, tol, worst <= tol)


# ---------------------------------------------------------------------------
# classification and geometry of the metric


@check("orbifold-dimension", "moduli dimension d_{n,k}", ["classification", "dimension"], 0.0)
def _(c, tol):
    table = {"3,2": orbifold_dimension(3, 2), "3,5": orbifold_dimension(3, 5),
             "4,3": orbifold_dimension(4, 3)}
    agree = all(orbifold_dimension(n, k) == moduli_parameter_count(n, k)
                for n in range(3, 11) for k in range(2, 13))
    return c.record({"n": "3..10", "k": "2..12"}, {**table, "forms_agree": agree},
                    {"3,2": 2, "3,5": 13, "4,3": 5}, tol,
                    table == {"3,2": 2, "3,5": 13, "4,3": 5} and agree)


@check("canonical-form", "normal form 1 + delta_0 + sum a_i delta_{P_i}",
       ["classification", "canonical"], 1e-12)
def _(c, tol):
    cfg = SingularConfiguration(3, [[1.0, 0.0, 0.0]], [8.0])
    can = canonicalize(cfg)
    twice = canonicalize(can.config)
    err = float(np.max(np.abs(twice.config.points - can.config.points)))
    ok = (abs(can.transform.scale - 2) <= tol and abs(can.config.masses[0] - 1) <= tol
          and np.allclose(can.config.points, 0, atol=tol) and err <= tol)
    return c.record({"n": 3, "P": [1, 0, 0], "a": 8},
                    {"scale": can.transform.scale, "idempotence": err}, {"scale": 2.0}, tol, ok)


@check("metric-completion", "finite distance to the singular point in the Hessian metric",
       ["metric", "radial"], 1e-6)
def _(c, tol):
    rep = metric_completion_check(RadialSingularSolution(2, 1.0), probes=[[1.0, 0.0]] +
                                  list(np.random.default_rng(2).uniform(-0.7, 0.7, (19, 2))))
    oracle = integrate.quad(lambda r: math.sqrt(r) * (r * r + 1) ** -0.25, 0, 1,
                            epsabs=1e-13, epsrel=1e-13)[0]
    got = float(rep.to_center[0])
    return c.record({"n": 2, "c": 1, "P": [1, 0]},
                    {"d_g": got, "min_slack": float(rep.slack.min()),
                     "refinement_tol": rep.tolerance},
                    oracle, tol, abs(got - oracle) <= tol and rep.passed)
