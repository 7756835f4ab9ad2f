import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from singular_ma import geometry as geo
from singular_ma.checks import one_atom_solution, paraboloid, radial_boundary
from singular_ma.mesh import polygon_mesh, regular_polygon
from singular_ma.radial import RadialSingularSolution, radial_value, unit_ball_volume
from singular_ma.solver import (ConvergenceError, DirichletProblem, SingularConfiguration,
                                averaged_subsolution, build_sandwich, comparison_check,
                                default_tolerance, ellipsoid_barrier, log_boundary_data,
                                solve_dirichlet, solve_global, voronoi_integrals)


def gauge(poly):
    """Minkowski functional of a regular polygon centred at the origin."""
    m = len(poly)
    apothem = math.cos(math.pi / m)
    normals = (poly + np.roll(poly, -1, axis=0)) / 2
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    return lambda x: np.max(np.atleast_2d(x) @ normals.T, axis=1) / apothem


# ---------------------------------------------------------------------------
# problem set-up


def test_voronoi_integrals_tile_the_domain():
    m = polygon_mesh(regular_polygon(6), 0.1)
    cells = voronoi_integrals(m.nodes, m.boundary_mask)
    assert np.all(cells > 0)
    # interior cells cover the domain minus a boundary strip
    assert cells.sum() < 1.5 * 3 * math.sqrt(3)


def test_voronoi_quadratic_density_is_exact():
    m = polygon_mesh(regular_polygon(8), 0.2)
    cells_1 = voronoi_integrals(m.nodes, m.boundary_mask)
    cells_q = voronoi_integrals(m.nodes, m.boundary_mask, lambda x: 1 + (x ** 2).sum(axis=1))
    assert np.all(cells_q >= cells_1)
    with pytest.raises(ValueError):
        voronoi_integrals(m.nodes, m.boundary_mask, -1.0)


def test_problem_validation():
    dom = regular_polygon(16)
    with pytest.raises(ValueError):
        DirichletProblem(dom, paraboloid, atoms=[((2.0, 0.0), 1.0)])
    with pytest.raises(ValueError):
        DirichletProblem(dom, paraboloid, atoms=[((0.0, 0.0), -1.0)])
    with pytest.raises(ValueError):
        DirichletProblem(dom, paraboloid, h=0.0)
    with pytest.raises(ValueError):
        solve_dirichlet(DirichletProblem(dom, paraboloid, h=0.5), method="multigrid")


def test_default_tolerance():
    assert default_tolerance(0.1) == pytest.approx(1e-5)
    assert default_tolerance(1e-4) == 1e-8
    assert default_tolerance(0.1, np.array([1e-6, 1.0])) == pytest.approx(1e-9)


# ---------------------------------------------------------------------------
# exact solutions


def test_pyramid_from_single_atom():
    # zero density, one atom: the solution is the gauge pyramid whose
    # gradient image is the polar polygon, of area m tan(pi / m)
    poly = regular_polygon(16)
    g = gauge(poly)
    a = 16 * math.tan(math.pi / 16)
    prob = DirichletProblem(poly, g, h=0.25, density=0.0, atoms=[((0.0, 0.0), a)])
    f, rep = solve_dirichlet(prob, tol=1e-10)
    assert rep.method == "sweep" and rep.converged
    np.testing.assert_allclose(f.values, g(f.nodes), atol=1e-8)


def test_affine_data_zero_density():
    prob = DirichletProblem(regular_polygon(12), lambda x: np.atleast_2d(x) @ [1.0, -2.0] + 3,
                            h=0.2, density=0.0)
    f, rep = solve_dirichlet(prob)
    np.testing.assert_allclose(f.values, f.nodes @ [1.0, -2.0] + 3, atol=1e-12)


def test_paraboloid_reproduced_on_grid():
    # for the sampled paraboloid the Voronoi targets are exactly its cells
    prob = DirichletProblem(regular_polygon(32), paraboloid, h=0.1)
    f, rep = solve_dirichlet(prob, tol=1e-12)
    np.testing.assert_allclose(f.values, paraboloid(f.nodes), atol=1e-10)


def test_one_atom_recovery_and_refinement():
    errs = [one_atom_solution(h)[2] for h in (0.1, 0.05)]
    assert errs[0] < 5 * 0.1 and errs[1] < 5 * 0.05
    assert errs[1] < errs[0]


def test_cone_value_at_atom():
    phi = radial_boundary(1.0)
    prob = DirichletProblem(regular_polygon(64), phi, h=0.05, atoms=[((0.0, 0.0), math.pi)])
    f, rep = solve_dirichlet(prob, tol=1e-12)
    assert abs(f.values[0]) < 2e-3
    assert geo.ma_measure(f).mass_at(0) == pytest.approx(rep.targets[0], abs=1e-12)


def test_sweep_agrees_with_newton():
    prob = DirichletProblem(regular_polygon(8), paraboloid, h=0.5,
                            atoms=[((0.1, 0.05), 0.3)])
    f1, r1 = solve_dirichlet(prob, method="sweep", tol=1e-10)
    f2, r2 = solve_dirichlet(prob, method="newton", tol=1e-12)
    assert r1.converged and r2.converged
    np.testing.assert_allclose(f1.values, f2.values, atol=1e-8)


def test_two_initial_guesses_agree():
    phi = radial_boundary(1.0)
    prob = DirichletProblem(regular_polygon(64), phi, h=0.1, atoms=[((0.0, 0.0), math.pi)])
    f1, _ = solve_dirichlet(prob, tol=1e-11)
    r = np.linalg.norm(prob.build_mesh().nodes, axis=1)
    low = float(phi([[1.0, 0.0]])[0]) + 0.6 * (r ** 2 - 1) + 1.2 * (r - 1)
    f2, _ = solve_dirichlet(prob, init=low, tol=1e-11)
    assert np.max(np.abs(f1.values - f2.values)) <= 2e-11


def test_nonconvergence_is_reported():
    prob = DirichletProblem(regular_polygon(16), paraboloid, h=0.1, atoms=[((0.0, 0.0), 1.0)])
    with pytest.raises(ConvergenceError) as info:
        solve_dirichlet(prob, max_iter=1, tol=1e-14)
    assert info.value.report is not None and not info.value.report.converged
    assert isinstance(info.value.solution, geo.PLConvexFunction)


def test_snapping_distance_recorded():
    dom = regular_polygon(16)
    mesh = polygon_mesh(dom, 0.1)
    prob = DirichletProblem(dom, paraboloid, mesh=mesh, atoms=[((0.03, 0.02), 0.5)])
    f, rep = solve_dirichlet(prob)
    (_, node, dist), = rep.snapped
    assert dist == pytest.approx(math.hypot(0.03, 0.02))
    assert "wall_time" not in rep.summary()


def test_boundary_values_kept():
    _, rep, _ = one_atom_solution(0.1)
    assert rep.boundary_mismatch < 1e-12


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.0, 0.3))
def test_comparison_with_paraboloid(seed, drop):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, 4))
    atoms = [(tuple(rng.uniform(-0.5, 0.5, 2)), float(rng.uniform(0.05, 1.0)))
             for _ in range(k)]
    prob = DirichletProblem(regular_polygon(32), lambda x: paraboloid(x) - drop, h=0.15,
                            atoms=atoms)
    f, _ = solve_dirichlet(prob)
    v = geo.build_pl(f.nodes, paraboloid(f.nodes), boundary_mask=f.boundary_mask)
    res = comparison_check(f, v)
    assert res.passed and res.measures_ordered and res.boundary_ordered


def test_comparison_detects_violation():
    f, _, _ = one_atom_solution(0.1)
    lower = geo.build_pl(f.nodes, f.values - 0.1, boundary_mask=f.boundary_mask)
    res = comparison_check(f, lower)
    assert not res.passed and res.max_excess == pytest.approx(0.1)
    with pytest.raises(ValueError):
        comparison_check(f, geo.build_pl(f.nodes[::-1], f.values[::-1]))


# ---------------------------------------------------------------------------
# configurations and subsolutions


def test_configuration_validation():
    with pytest.raises(ValueError):
        SingularConfiguration(3, [[0, 0, 0], [0, 0, 0]], [1, 1])
    with pytest.raises(ValueError):
        SingularConfiguration(2, [[0, 0]], [0.0])
    with pytest.raises(ValueError):
        SingularConfiguration(2, [[0, 0]], [1.0], A=np.diag([2.0, 2.0]))
    cfg = SingularConfiguration(2, [[0, 0]], [1.0], A=np.diag([2.0, 0.5]))
    np.testing.assert_allclose(cfg.root_A() @ cfg.root_A(), cfg.A)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 3), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_averaged_subsolution_is_subsolution(n, k, seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(k, n)) * 2
    L = np.linalg.cholesky(np.eye(n) + 0.3 * np.diag(rng.uniform(size=n)))
    A = L @ L.T
    A /= np.linalg.det(A) ** (1 / n)
    cfg = SingularConfiguration(n, pts, rng.uniform(0.2, 3.0, size=k), A=A)
    sub = averaged_subsolution(cfg)
    X = rng.normal(scale=3.0, size=(200, n))
    assert np.all(sub.det_hessian(X) >= 1 - 1e-10)
    assert np.all(sub.minkowski_defect(X) >= -1e-12)


def test_averaged_subsolution_gradient():
    cfg = SingularConfiguration(3, [[1.0, 0, 0], [-1.0, 0.5, 0]], [1.0, 2.0],
                                b=np.array([0.1, 0.2, 0.3]), c=0.5)
    sub = averaged_subsolution(cfg)
    x = np.array([0.3, -0.4, 0.8])
    eps = 1e-6
    num = [(sub.value(x + eps * e)[0] - sub.value(x - eps * e)[0]) / (2 * eps)
           for e in np.eye(3)]
    np.testing.assert_allclose(sub.gradient(x)[0], num, atol=1e-7)
    with pytest.raises(ValueError):
        sub.hessian([1.0, 0, 0])


def test_single_point_subsolution_is_radial():
    a = 2.0
    cfg = SingularConfiguration(2, [[0.0, 0.0]], [a])
    sub = averaged_subsolution(cfg)
    x = np.array([[0.5, 0.2], [1.5, -2.0]])
    sol = RadialSingularSolution(2, a / unit_ball_volume(2))
    np.testing.assert_allclose(sub.value(x), radial_value(sol, np.linalg.norm(x, axis=1)),
                               atol=1e-12)


# ---------------------------------------------------------------------------
# closed-form sandwich in dimension 3


@pytest.fixture(scope="module")
def sandwich():
    return build_sandwich(SingularConfiguration(3, [[0.0, 0.0, 0.0]], [1.0]))


def test_sandwich_constants(sandwich):
    inner, outer = sandwich.gradient_jump()
    assert inner < outer
    assert sandwich.K2 >= 1
    assert sandwich.K1 == pytest.approx(4 * sandwich.c0 / 3)
    assert sandwich.beta_minus < 0 < sandwich.beta_plus


def test_sandwich_barrier_below_inner_solution(sandwich):
    r = np.linspace(0, 1, 101)
    assert np.all(sandwich.v1.value(r) >= sandwich.v2(r) - 1e-12)


def test_upper_profile_has_unit_determinant(sandwich):
    r = np.linspace(1.01, 20, 50)
    np.testing.assert_allclose(sandwich.upper_det(r), 1.0, rtol=1e-12)


@pytest.mark.parametrize("R", [2.0, 5.0, 10.0, 40.0])
def test_radial_ball_solutions_are_sandwiched(sandwich, R):
    # u_R solves det = 1 + delta_0 in B_R with u_R = R^2/2 on the sphere
    sol = RadialSingularSolution(3, 1.0 / unit_ball_volume(3))
    r = np.linspace(0, R, 80)
    u = radial_value(sol, r) - radial_value(sol, R) + R * R / 2
    below, above = sandwich.check(r, u)
    assert below.max() <= 1e-9 and above.max() <= 1e-9


def test_sandwich_rejects_unsupported_data():
    with pytest.raises(ValueError):
        build_sandwich(SingularConfiguration(2, [[0.0, 0.0]], [1.0]))
    with pytest.raises(ValueError):
        build_sandwich(SingularConfiguration(3, [[0, 0, 0], [1, 0, 0]], [1.0, 1.0]))


# ---------------------------------------------------------------------------
# barrier


@given(st.integers(2, 5), st.floats(0.01, 100), st.floats(0.01, 10))
def test_barrier_determinant(n, lam, r):
    b = ellipsoid_barrier(n, lam, r)
    assert np.linalg.det(b.hessian()) == pytest.approx(lam, rel=1e-9)


def test_barrier_minimum():
    b = ellipsoid_barrier(3, 2.0, 0.5)
    assert b.value(b.argmin())[0] == pytest.approx(b.minimum())
    assert ellipsoid_barrier(3, 2.0, 0.5, x=[0, 0, 0.5])[0] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        ellipsoid_barrier(3, -1.0, 0.5)


# ---------------------------------------------------------------------------
# growing balls


def test_log_boundary_data():
    phi = log_boundary_data(0.5)
    assert phi([[2.0, 0.0]])[0] == pytest.approx(2 + 0.5 * math.log(2))


def test_small_global_run():
    cfg = SingularConfiguration(2, [[0.0, 0.0]], [math.pi])
    run = solve_global(cfg, [2.0, 4.0], h=0.25)
    assert run.log_coefficient == pytest.approx(0.5)
    assert len(run.cauchy) == 1 and run.cauchy[0] < 0.05
    assert all(len(b["violations"]) == 0 for b in run.bounds)
    assert run.limit is run.solutions[-1]


def test_global_run_validation():
    cfg = SingularConfiguration(2, [[1.5, 0.0]], [1.0])
    with pytest.raises(ValueError):
        solve_global(cfg, [2.0, 4.0], h=0.5)
    with pytest.raises(ValueError):
        solve_global(SingularConfiguration(2, [[0.0, 0.0]], [1.0]), [4.0, 2.0], h=0.5)
    with pytest.raises(ValueError):
        solve_global(SingularConfiguration(3, [[0.0, 0.0, 0.0]], [1.0]), [4.0], h=0.5)
