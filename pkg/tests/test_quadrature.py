import math

import numpy as np
import pytest

from cgbkit import quadrature as q
from cgbkit.hypersurface import area_element, geodesic_sphere
from cgbkit.manifold import euclidean, hyperbolic_normal, hyperbolic_polar


def test_circle_weights():
    g = q.sphere_grid(1, 16)
    assert len(g) == 16 and np.allclose(g.weights, 2 * math.pi / 16)


@pytest.mark.parametrize("m,order", [(2, 24), (3, 24), (4, 16), (6, 16)])
def test_weights_sum_to_sphere_volume(m, order):
    g = q.sphere_grid(m, order)
    assert abs(q.pairwise_sum(g.weights) - q.sphere_volume(m)) <= 1e-12 * q.sphere_volume(m) * 10


def test_nodes_avoid_poles():
    g = q.sphere_grid(3, 12)
    col = g.nodes[:, :-1]
    assert np.all(col > 0) and np.all(col < math.pi)
    assert np.all(q.jacobian_factor(g.nodes) > 0)


def test_unit_vector_round_trip():
    g = q.sphere_grid(3, 8)
    u = np.stack(q.unit_vector([g.nodes[:, i] for i in range(3)]), axis=-1)
    assert np.allclose(np.linalg.norm(u, axis=-1), 1.0)
    assert np.allclose(q.angles_of(u), g.nodes)


def test_integrate_constant_and_polynomial():
    c, f = q.grid_pair(2, 24)
    val, err = q.integrate(lambda x: np.ones(len(x)), c, f)
    assert val == pytest.approx(4 * math.pi, rel=1e-13) and err <= 1e-12
    # integral of z^2 over S^2 is 4 pi / 3
    val, _ = q.integrate(lambda x: np.cos(x[:, 0]) ** 2, c, f)
    assert val == pytest.approx(4 * math.pi / 3, rel=1e-12)


def test_error_estimate_shrinks_with_order():
    f = lambda x: np.exp(np.cos(x[:, 0]) * np.sin(x[:, 1]))  # noqa: E731
    _, e_lo = q.integrate(f, *q.grid_pair(2, 8))
    _, e_hi = q.integrate(f, *q.grid_pair(2, 24))
    assert e_hi < e_lo


def test_area_of_spheres():
    c, f = q.grid_pair(2, 24)
    emb = geodesic_sphere(euclidean(3), 1.0)
    val, _ = q.integrate(lambda U: area_element(emb, U), c, f, measure="coordinate")
    assert val == pytest.approx(4 * math.pi, rel=1e-10)
    c, f = q.grid_pair(3, 16)
    for chart in (hyperbolic_normal(4), hyperbolic_polar(4)):
        emb = geodesic_sphere(chart, 1.0)
        val, _ = q.integrate(lambda U: area_element(emb, U), c, f, measure="coordinate")
        assert val == pytest.approx(math.sinh(1.0) ** 3 * q.sphere_volume(3), rel=1e-8)


def test_radial_integration():
    assert q.radial_integrate(lambda r: 4 * math.pi * r**2, 1.0) == pytest.approx(q.ball_volume(3), rel=1e-14)
    assert q.radial_integrate(lambda r: 2 * math.pi**2 * r**3, 1.0) == pytest.approx(q.ball_volume(4), rel=1e-14)
    exact = q.sphere_volume(3) * (math.cosh(1.0) ** 3 / 3 - math.cosh(1.0) + 2 / 3)
    assert q.radial_integrate(lambda r: q.sphere_volume(3) * np.sinh(r) ** 3, 1.0) == pytest.approx(exact, rel=1e-8)


def test_non_finite_integrand_reports_node():
    c, f = q.grid_pair(2, 8)
    with pytest.raises(q.QuadratureError, match="non-finite"):
        q.integrate(lambda x: np.where(x[:, 0] > 1, np.nan, 1.0), c, f)


@pytest.mark.parametrize("args", [(0, 8), (2, 3), (8, 8)])
def test_grid_argument_errors(args):
    with pytest.raises(q.QuadratureError):
        q.sphere_grid(*args)
    with pytest.raises(q.QuadratureError):
        q.grid_pair(2, 9)


def test_pairwise_sum_deterministic_and_accurate():
    v = np.full(1001, 0.1)
    assert q.pairwise_sum(v) == pytest.approx(100.1, abs=1e-12)
    assert q.pairwise_sum(np.zeros((0,))) == 0.0
