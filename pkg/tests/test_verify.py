import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from singular_ma import geometry as geo
from singular_ma.mesh import polygon_mesh, regular_polygon
from singular_ma.radial import RadialSingularSolution, radial_value, unit_ball_volume
from singular_ma.solver import SingularConfiguration
from singular_ma.verify import (InsufficientSamples, asymptotic_decay_check, canonicalize,
                                fit_power, hessian_growth_fit, is_canonical, local_hessians,
                                metric_completion_check, moduli_parameter_count,
                                orbifold_dimension)


# ---------------------------------------------------------------------------
# fits


@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_fit_recovers_power_law(p, C):
    x = np.geomspace(1e-3, 1, 12)
    fit = fit_power(x, C * x ** p)
    assert fit.exponent == pytest.approx(p, abs=1e-9)
    assert fit.constant == pytest.approx(C, rel=1e-9)
    assert fit.residual < 1e-9
    assert fit.decades == pytest.approx(3.0)
    assert fit.within(p, 1e-6)


def test_fit_needs_samples_and_range():
    with pytest.raises(InsufficientSamples):
        fit_power(np.geomspace(1, 10, 5), np.ones(5))
    with pytest.raises(InsufficientSamples):
        fit_power(np.geomspace(1, 10, 20), np.ones(20))


def test_hessian_growth_exact_family():
    fit = hessian_growth_fit(RadialSingularSolution(2, 1.0), [0.0, 0.0])
    assert fit.exponent == pytest.approx(-1.0, abs=0.02)
    assert fit.constant == pytest.approx(1.0, abs=0.02)
    flat = hessian_growth_fit(RadialSingularSolution(3, 0.0), [0.0, 0.0, 0.0])
    assert flat.exponent == pytest.approx(0.0, abs=1e-12)


def test_local_hessians_exact_for_quadratics():
    m = polygon_mesh(regular_polygon(32), 0.1)
    H = np.array([[2.0, 0.3], [0.3, 0.5]])
    f = geo.build_pl(m.nodes, 0.5 * np.einsum("ij,jk,ik->i", m.nodes, H, m.nodes))
    est = local_hessians(f, np.array([0, 10, 50]))
    np.testing.assert_allclose(est, np.broadcast_to(H, est.shape), atol=1e-9)


def test_hessian_growth_on_pl_needs_window():
    m = polygon_mesh(regular_polygon(16), 0.2)
    f = geo.build_pl(m.nodes, 0.5 * (m.nodes ** 2).sum(axis=1))
    with pytest.raises(InsufficientSamples):
        hessian_growth_fit(f, [5.0, 5.0], distances=(1e-3, 1e-2))


# ---------------------------------------------------------------------------
# asymptotics


@pytest.mark.parametrize("n", [3, 4, 5])
def test_radial_decay_coefficient(n):
    fit = asymptotic_decay_check(RadialSingularSolution(n, 1.0))
    assert fit.relative_error < 0.01
    assert fit.rate.exponent == pytest.approx(2 - n, abs=0.05)


def test_decay_check_errors():
    with pytest.raises(ValueError):
        asymptotic_decay_check(RadialSingularSolution(2, 1.0))
    with pytest.raises(InsufficientSamples):
        asymptotic_decay_check(RadialSingularSolution(3, 1.0), radii=[10, 20, 30])
    with pytest.raises(TypeError):
        asymptotic_decay_check(np.zeros(3))


def test_log_fit_without_atoms():
    m = polygon_mesh(regular_polygon(128, 16.0), 0.5)
    f = geo.build_pl(m.nodes, 0.5 * (m.nodes ** 2).sum(axis=1))
    fit = asymptotic_decay_check(f)
    assert abs(fit.d) < 0.01 and fit.expected == 0.0


def test_log_fit_on_sampled_exact_solution():
    # the radial c = 1 profile grows like r^2/2 + (1/2) log r
    m = polygon_mesh(regular_polygon(128, 16.0), 0.25)
    sol = RadialSingularSolution(2, 1.0)
    f = geo.build_pl(m.nodes, radial_value(sol, np.linalg.norm(m.nodes, axis=1)))
    cfg = SingularConfiguration(2, [[0.0, 0.0]], [math.pi])
    fit = asymptotic_decay_check(f, cfg, radii=np.geomspace(3, 11, 16))
    assert fit.d == pytest.approx(0.5, rel=0.02)
    assert fit.expected == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# dimension counts


def test_dimension_examples():
    assert orbifold_dimension(3, 2) == 2
    assert orbifold_dimension(3, 5) == 13
    assert orbifold_dimension(4, 3) == 5


@given(st.integers(3, 10), st.integers(2, 12))
def test_dimension_forms_agree(n, k):
    d = orbifold_dimension(n, k)
    assert d == moduli_parameter_count(n, k)
    if k - 1 <= n:
        assert d == (k - 1) + (k - 1) * k // 2


@pytest.mark.parametrize("n", range(3, 11))
def test_branches_meet(n):
    k = n + 1
    assert (k - 1) * (k + 2) // 2 == (k - 1) * (n + 1) - n * (n - 1) // 2
    assert orbifold_dimension(n, k) == (k - 1) * (k + 2) // 2


def test_dimension_grows_with_points():
    for n in range(3, 7):
        dims = [orbifold_dimension(n, k) for k in range(2, 12)]
        assert all(b > a for a, b in zip(dims, dims[1:]))


def test_dimension_out_of_range():
    for args in [(2, 3), (3, 1), (3.5, 2)]:
        with pytest.raises(ValueError):
            orbifold_dimension(*args)


# ---------------------------------------------------------------------------
# canonical form


def test_canonical_example():
    can = canonicalize(SingularConfiguration(3, [[1.0, 0.0, 0.0]], [8.0]))
    assert can.transform.scale == pytest.approx(2.0)
    assert is_canonical(can.config)
    assert can.config.masses[0] == 1.0


def test_already_canonical_is_unchanged():
    cfg = SingularConfiguration(3, [[0.0, 0.0, 0.0]], [1.0])
    can = canonicalize(cfg)
    assert is_canonical(cfg)
    np.testing.assert_array_equal(can.config.points, cfg.points)
    np.testing.assert_allclose(can.transform.forward([[1.0, 2.0, 3.0]]), [[1.0, 2.0, 3.0]])


def random_config(seed, n=3):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 5))
    B = rng.normal(size=(n, n))
    A = B @ B.T + n * np.eye(n)
    A /= np.linalg.det(A) ** (1 / n)
    return SingularConfiguration(n, rng.normal(size=(k, n)), rng.uniform(0.2, 5, size=k),
                                 A=A, b=rng.normal(size=n), c=float(rng.normal()))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_canonicalize_idempotent(seed):
    once = canonicalize(random_config(seed)).config
    twice = canonicalize(once).config
    np.testing.assert_allclose(twice.points, once.points, atol=1e-12)
    np.testing.assert_allclose(twice.masses, once.masses, rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_canonical_map_round_trip(seed):
    cfg = random_config(seed)
    T = canonicalize(cfg).transform
    x = np.random.default_rng(seed).normal(size=(5, 3))
    np.testing.assert_allclose(T.inverse(T.forward(x)), x, atol=1e-10)
    np.testing.assert_allclose(T.forward(cfg.points[-1]), 0.0, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_canonical_map_carries_the_radial_family(seed):
    # one point P, mass a, asymptote x^T A x / 2 + b.x + c: the solution is
    # U_{a/omega}(|M x - M P|) + Q.(M x) - |Q|^2/2 + b.x + c
    n = 3
    cfg = random_config(seed, n)
    cfg = SingularConfiguration(n, cfg.points[-1:], cfg.masses[-1:], A=cfg.A, b=cfg.b, c=cfg.c)
    T = canonicalize(cfg).transform
    a = cfg.masses[0]
    M, Q = cfg.root_A(), cfg.root_A() @ cfg.points[0]
    x = np.random.default_rng(seed).normal(scale=2, size=(6, n))
    z = x @ M.T
    sol = RadialSingularSolution(n, a / unit_ball_volume(n))
    u = (radial_value(sol, np.linalg.norm(z - Q, axis=1)) + z @ Q - 0.5 * Q @ Q
         + x @ cfg.b + cfg.c)
    canon = RadialSingularSolution(n, 1 / unit_ball_volume(n))
    y = T.forward(x)
    np.testing.assert_allclose(T.transform_values(x, u),
                               radial_value(canon, np.linalg.norm(y, axis=1)), atol=1e-10)


def test_compose_matches_sequential_maps():
    T1 = canonicalize(random_config(1)).transform
    T2 = canonicalize(random_config(2)).transform
    x = np.random.default_rng(0).normal(size=(4, 3))
    np.testing.assert_allclose(T2.compose(T1).forward(x), T2.forward(T1.forward(x)),
                               atol=1e-10)


# ---------------------------------------------------------------------------
# metric completion


def test_metric_completion_n2():
    rep = metric_completion_check(RadialSingularSolution(2, 1.0), probes=[[1.0, 0.0]])
    assert rep.passed and rep.finite and rep.triangle_ok
    assert rep.to_center[0] == pytest.approx(0.6139778377661609, abs=1e-9)
    assert len(rep.triples) == 100


def test_metric_completion_euclidean():
    rep = metric_completion_check(RadialSingularSolution(2, 0.0), probes=[[0.6, 0.8], [0.3, 0.0]],
                                  triples=20, rings=20, spokes=48, neighbours=24)
    np.testing.assert_allclose(rep.to_center, [1.0, 0.3], atol=1e-12)
    assert rep.passed
