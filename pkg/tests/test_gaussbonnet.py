import math

import numpy as np
import pytest

from cgbkit import gaussbonnet as gb
from cgbkit.hypersurface import ambient_frame_along, ellipsoid, geodesic_sphere, perturbed_sphere, shape_at
from cgbkit.manifold import (
    euclidean,
    hyperbolic_normal,
    hyperbolic_polar,
    hyperbolic_times_flat,
    orthonormal_frame,
    round_sphere,
)
from cgbkit.quadrature import sphere_grid


def nodes(m, order=6):
    return sphere_grid(m, order).nodes


def test_transgression_constants():
    assert gb.transgression_constant(2, 0) == pytest.approx(1.0)
    assert gb.transgression_constant(4, 0) == pytest.approx(1 / 6)
    assert gb.transgression_constant(4, 1) == pytest.approx(1 / 4)
    for bad in [(3, 0), (4, 2), (6, -1)]:
        with pytest.raises(gb.GaussBonnetError):
            gb.transgression_constant(*bad)


def test_pfaffian_of_spheres():
    assert np.allclose(gb.pf_scalar(orthonormal_frame(round_sphere(2), nodes(2, 4))), 1.0)
    assert np.allclose(gb.pf_scalar(orthonormal_frame(round_sphere(4), nodes(4, 4))), 1.0, atol=1e-8)
    fr = orthonormal_frame(hyperbolic_normal(4), np.array([0.1, 0.2, -0.3, 0.2]))
    assert gb.pf_scalar(fr) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(gb.GaussBonnetError):
        gb.pf_scalar(orthonormal_frame(euclidean(3), np.zeros(3)))


def test_flat_transgression_equals_gauss_kronecker():
    sd = shape_at(ellipsoid([1.0, 1.1, 1.2, 1.3]), nodes(3))
    assert np.allclose(gb.tpf_scalar(sd), sd.gauss_kronecker, atol=1e-12)


def test_four_dimensional_transgression_decomposes():
    r = 0.9
    sd = shape_at(geodesic_sphere(hyperbolic_normal(4), r), nodes(3))
    c = 1 / math.tanh(r)
    tpf = gb.tpf_scalar(sd)
    corr = gb.correction_term(sd)
    assert np.allclose(corr, -3 * c, atol=1e-8)
    assert np.allclose(tpf, c**3 - 1.5 * c, atol=1e-7)
    assert np.allclose(tpf, sd.gauss_kronecker + 0.5 * corr, atol=1e-7)
    parts = gb.tpf_scalar(sd, terms=True)
    assert np.allclose(sum(parts), tpf)


def test_transgression_independent_of_tangent_frame(rotation):
    emb = perturbed_sphere(geodesic_sphere(hyperbolic_times_flat(4), 1.0), 0.1, "sectoral2", 8)
    sd = shape_at(emb, nodes(3, 4))
    Q = rotation(np.random.default_rng(5), 3)
    rotated = np.einsum("nia,ab->nib", sd.principal_frame, Q)
    a = gb.tpf_scalar(sd)
    b = gb.tpf_scalar(sd, ambient_frame_along(sd, rotated))
    assert np.allclose(a, b, atol=1e-10)


def test_odd_dimension_has_no_transgression():
    sd = shape_at(geodesic_sphere(hyperbolic_normal(3), 1.0), nodes(2))
    with pytest.raises(gb.GaussBonnetError):
        gb.tpf_scalar(sd)


def test_curvature_wedge_lemma():
    p = np.array([0.3, -0.2, 0.1, 0.5, 0.7])
    val, _ = gb.lemma31_residual(orthonormal_frame(hyperbolic_times_flat(5), p))
    assert val <= 1e-9
    val, where = gb.lemma31_residual(orthonormal_frame(hyperbolic_normal(4), p[:4]))
    assert val > 0.1 and len(where) == 2
    with pytest.raises(gb.GaussBonnetError):
        gb.lemma31_residual(orthonormal_frame(hyperbolic_normal(3), p[:3]))


def test_correction_is_non_positive_in_nonpositive_curvature():
    emb = perturbed_sphere(geodesic_sphere(hyperbolic_times_flat(4), 1.0), 0.1, "zonal2", 8)
    sd = shape_at(emb, nodes(3))
    assert np.all(gb.correction_term(sd) <= 0)
    sd = shape_at(geodesic_sphere(euclidean(4), 1.0), nodes(3))
    assert np.all(gb.correction_term(sd) == 0)


def test_structure_fit():
    rng = np.random.default_rng(0)
    gk = rng.uniform(0, 1, 50)
    corr = -rng.uniform(0.1, 1, 50)
    fit = gb.fit_structure_constants(gk + 0.5 * corr, gk, corr)
    assert fit.defined and fit.constant == pytest.approx(0.5) and fit.spread <= 1e-12
    flat = gb.fit_structure_constants(gk, gk, np.zeros(50))
    assert not flat.defined and math.isnan(flat.constant)
    assert flat.message == "decomposition trivially consistent"


@pytest.mark.parametrize(
    "args,expected",
    [
        ((1.0, 1.0, 0.0), "pass"),
        ((1.1, 1.0, 0.0), "fail"),
        ((1.0005, 1.0, 0.01), "inconclusive"),
        ((1.5, 1.0, 0.01), "fail"),
    ],
)
def test_integral_verdict(args, expected):
    assert gb.integral_verdict(*args, rel_tol=1e-3)[0] == expected


def test_bound_verdicts():
    assert gb.lower_bound_verdict(2.0, 1.0, 0.0) == "pass"
    assert gb.lower_bound_verdict(0.99, 1.0, 0.01) == "inconclusive"
    assert gb.lower_bound_verdict(0.5, 1.0, 0.01) == "fail"
    assert gb.pointwise_verdict(-1e-12) == "pass"
    assert gb.pointwise_verdict(-1e-3) == "fail"


def test_four_ball_euler_characteristic():
    chi, err = gb.euler_characteristic_ball(geodesic_sphere(hyperbolic_normal(4), 1.0), order=12)
    assert chi == pytest.approx(1.0, abs=1e-5)


def test_closed_sphere_integral():
    val, err = gb.closed_pfaffian_integral(round_sphere(2, 2.0), 16)
    assert val == pytest.approx(2.0, abs=1e-10)


def test_disk_balance_in_hyperbolic_plane():
    rep = gb.verify_theorem(geodesic_sphere(hyperbolic_polar(2), 1.0), order=24)
    assert rep.case == "n2" and rep.verdicts["gauss_bonnet_balance"] == "pass"
    assert rep.integral == pytest.approx(2 * math.pi, rel=1e-8)


def test_theorem_report_in_product_space():
    rep = gb.verify_theorem(geodesic_sphere(hyperbolic_times_flat(4), 1.0), order=12)
    assert rep.case == "even_n" and rep.passed
    assert rep.total_curvature > rep.target and not rep.equality
    assert rep.fit["defined"] and rep.fit["constant"] > 0
    rec = rep.record()
    assert rec["verdicts"] == rep.verdicts


def test_theorem_equality_in_euclidean_space():
    rep = gb.verify_theorem(geodesic_sphere(euclidean(3), 1.0), order=16)
    assert rep.case == "odd_n" and rep.passed and rep.equality
    assert "decomposition" not in rep.verdicts


def test_isoperimetric_deficits():
    flat = gb.verify_isoperimetric(geodesic_sphere(euclidean(3), 1.0), order=16)
    assert abs(flat.deficit) <= 1e-8
    hyp = gb.verify_isoperimetric(geodesic_sphere(hyperbolic_normal(3), 1.0), order=16)
    assert hyp.deficit > 0 and hyp.verdict == "pass"
