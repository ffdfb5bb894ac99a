"""Acceptance criteria, one test per criterion.

Each test records a single pass/fail line (shown in the terminal summary)
at the stated tolerance and then asserts it.
"""

import math
import time

import numpy as np
import pytest

from cgbkit import gaussbonnet as gb
from cgbkit import hypersurface as hs
from cgbkit import manifold as mf
from cgbkit.forms import AlternatingForm, TwoFormMatrix, pfaffian_form
from cgbkit.quadrature import grid_pair, pairwise_sum, sphere_grid, sphere_volume
from cgbkit.suites import sample_points


def _sphere_points(rng, k, count):
    pts = rng.uniform(0.15, math.pi - 0.15, size=(count, k))
    pts[:, -1] = rng.uniform(0, 2 * math.pi, size=count)
    return pts


def _random_skew(rng, k, d):
    """Skew matrix of 2-forms with coefficients uniform in [-0.5, 0.5]."""
    R = np.zeros((d, d, k, k))
    a, b = np.triu_indices(d, 1)
    i, j = np.triu_indices(k, 1)
    C = rng.uniform(-0.5, 0.5, size=(len(a), len(i)))
    R[a[:, None], b[:, None], i, j] = C
    R[b[:, None], a[:, None], i, j] = -C
    R[a[:, None], b[:, None], j, i] = -C
    R[b[:, None], a[:, None], j, i] = C
    return TwoFormMatrix.from_tensor(R)


def _max_coeff_diff(a, b):
    keys = set(a.coeffs) | set(b.coeffs)
    return max((abs(a.coeffs.get(m, 0.0) - b.coeffs.get(m, 0.0)) for m in keys), default=0.0)


def test_pfaffian_normalization(acceptance):
    rng = np.random.default_rng(1)
    errs = {}
    for k in (2, 4, 6):
        fr = mf.orthonormal_frame(mf.round_sphere(k), _sphere_points(rng, k, 100))
        errs[k] = float(np.max(np.abs(gb.pf_scalar(fr) - 1.0)))
    ok = all(e < 1e-7 for e in errs.values())
    acceptance(1, "Pf == 1 on unit S^k, k=2,4,6, 100 points", ok, f"max |err| by k: {errs}")


def test_pfaffian_method_equivalence(acceptance):
    rng = np.random.default_rng(2)
    worst = 0.0
    count = 0
    for k in (2, 4, 6):
        for _ in range(200):
            om = _random_skew(rng, k, 6)
            ref = pfaffian_form(om, "naive")
            for method in ("matching", "subset_dp"):
                worst = max(worst, _max_coeff_diff(ref, pfaffian_form(om, method)))
            count += 1
    om8 = _random_skew(rng, 8, 8)
    t0 = time.perf_counter()
    phi8 = pfaffian_form(om8, "subset_dp")
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0 and phi8.grade == 8
    acceptance(
        2,
        "naive / matching / subset_dp agree; k=8 subset_dp under 1 s",
        ok,
        f"{count} matrices, max coeff diff {worst:.2e}; k=8 subset_dp {elapsed:.3f} s",
    )


def test_closed_chern_gauss_bonnet(acceptance):
    vals = {}
    for k, order in ((2, 24), (4, 12)):
        vals[k], _ = gb.closed_pfaffian_integral(mf.round_sphere(k), order)
    ok = all(abs(v - 2.0) <= 1e-3 for v in vals.values())
    acceptance(3, "(2/|S^k|) int Pf = 2 on S^k, k=2,4", ok, f"values {vals}")


def test_boundary_chern_gauss_bonnet_flat(acceptance):
    vals, gaps = {}, {}
    for k, order in ((2, 24), (4, 16), (6, 8)):
        emb = hs.geodesic_sphere(mf.euclidean(k), 1.0)
        vals[k], _, gaps[k] = gb.transgression_integral(emb, order)
    ell = {}
    for axes, order in (((1.0, 1.5), 24), ((1.0, 1.2, 1.5), 24), ((1.0, 1.1, 1.2, 1.3), 16), ((1, 1, 1, 1, 1.1, 1.2), 10)):
        emb = hs.ellipsoid(axes)
        grid = sphere_grid(len(axes) - 1, order)
        sd = hs.shape_at(emb, grid.nodes)
        total = float(pairwise_sum(sd.gauss_kronecker * hs.area_element(emb, grid.nodes) * grid.raw_weights))
        ell[len(axes)] = total / sphere_volume(len(axes) - 1) - 1.0
    ok = (
        all(abs(v - 1.0) <= 1e-4 for v in vals.values())
        and all(g <= 1e-9 for g in gaps.values())
        and all(abs(e) <= 1e-3 for e in ell.values())
    )
    detail = (
        f"euler by k {{{', '.join(f'{k}: {v:.8f}' for k, v in vals.items())}}}; "
        f"max |TPf-GK| {max(gaps.values()):.1e}; ellipsoid rel err by k "
        f"{{{', '.join(f'{k}: {e:.1e}' for k, e in ell.items())}}}"
    )
    acceptance(4, "flat boundary CGB on the unit ball, TPf = GK, ellipsoids", ok, detail)


def test_curvature_form_products_vanish(acceptance):
    rng = np.random.default_rng(5)
    res = {}
    for n in (4, 5, 6):
        chart = mf.hyperbolic_times_flat(n)
        fr = mf.orthonormal_frame(chart, sample_points(chart, rng, 50))
        res[n], _ = gb.lemma31_residual(fr)
    h4 = mf.hyperbolic_normal(4)
    control, where = gb.lemma31_residual(mf.orthonormal_frame(h4, sample_points(h4, rng, 10)))
    ok = all(r <= 1e-9 for r in res.values()) and control >= 0.9
    acceptance(
        5,
        "Omega_ij ^ Omega_kl = 0 on H^3 x R^(n-3); H^4 control",
        ok,
        f"max residual by n {res}; H^4 control {control:.4f} at {where}",
    )


def test_nullity_index(acceptance):
    rng = np.random.default_rng(6)
    cases = [(mf.euclidean(4), 4), (mf.hyperbolic_normal(4), 0)]
    cases += [(mf.hyperbolic_times_flat(n), n - 3) for n in (4, 5, 6)]
    bad = []
    min_gap = math.inf
    for chart, expected in cases:
        for p in sample_points(chart, rng, 20):
            r = mf.nullity_space(chart, p)
            min_gap = min(min_gap, r.gap)
            if r.nullity_dim != expected:
                bad.append((chart.name, r.nullity_dim, expected))
    ok = not bad and min_gap >= 1e3
    acceptance(6, "nullity dimension n, n-3, 0 with gap >= 1e3", ok, f"mismatches {bad[:3]}; min gap {min_gap:.3g}")


def test_gauss_equation(acceptance):
    cases = [
        (mf.euclidean(3), 1.0),
        (mf.euclidean(4), 1.5),
        (mf.hyperbolic_normal(3), 1.0),
        (mf.hyperbolic_normal(4), 0.8),
        (mf.hyperbolic_times_flat(4), 0.5),
        (mf.hyperbolic_times_flat(4), 1.0),
    ]
    res = {}
    for chart, r in cases:
        emb = hs.geodesic_sphere(chart, r)
        grid = sphere_grid(emb.dimension, 8)
        res[f"{chart.name} r={r}"] = float(np.max(hs.gauss_form_residual(emb, grid.nodes)))
    ok = all(v <= 1e-4 for v in res.values())
    acceptance(7, "Gauss equation form residual <= 1e-4", ok, f"max residual {max(res.values()):.2e} over {len(res)} spheres")


def test_total_curvature_odd_dimension(acceptance):
    target = 8 * math.pi**2 / 3
    lines, ok = [], True
    for r in (0.25, 0.5, 1.0):
        rep = gb.verify_theorem(hs.geodesic_sphere(mf.hyperbolic_times_flat(5), r), order=12)
        band = max(0.01 * target, 3 * rep.integral_error)
        ok &= abs(rep.integral - target) <= band
        ok &= rep.min_gk_gap >= -1e-8
        ok &= rep.total_curvature >= target
        lines.append(f"r={r}: int Pf {rep.integral:.6f} (err {rep.integral_error:.1e}), G {rep.total_curvature:.4f}")
    r = 1.0
    rep3 = gb.verify_theorem(hs.geodesic_sphere(mf.hyperbolic_normal(3), r), order=24)
    closed = math.cosh(r) ** 2 * sphere_volume(2)
    ok &= abs(rep3.total_curvature - closed) <= 0.005 * closed
    ok &= abs(rep3.integral - sphere_volume(2)) <= 0.01 * sphere_volume(2)
    ok &= rep3.min_gk_gap >= -1e-8
    lines.append(f"H^3 r=1: G {rep3.total_curvature:.6f} vs cosh^2 |S^2| {closed:.6f}")
    acceptance(8, "odd case n=5 on H^3 x R^2, and n=3 on H^3", bool(ok), "; ".join(lines))


def test_total_curvature_even_dimension(acceptance):
    target = 2 * math.pi**2
    chart = mf.hyperbolic_times_flat(4)
    surfaces = [hs.geodesic_sphere(chart, r) for r in (0.25, 0.5, 1.0)]
    surfaces.append(hs.perturbed_sphere(surfaces[-1], 0.05, "zonal2"))
    lines, ok = [], True
    for emb in surfaces:
        rep = gb.verify_theorem(emb, order=16)
        band = max(0.01 * target, 3 * rep.integral_error)
        ok &= rep.max_abs_interior_pf <= 1e-9
        ok &= abs(rep.integral - target) <= band
        ok &= rep.min_gk_gap >= -1e-8
        ok &= rep.total_curvature >= target
        lines.append(f"{emb.name}: int TPf {rep.integral:.6f}, G {rep.total_curvature:.4f}, max|Pf_C| {rep.max_abs_interior_pf:.1e}")
    acceptance(9, "even case n=4 on H^3 x R", bool(ok), "; ".join(lines))


def test_two_dimensional_case(acceptance):
    lines, ok = [], True
    for r in (0.5, 1.0):
        emb = hs.geodesic_sphere(mf.hyperbolic_normal(2), r)
        coarse, fine = grid_pair(1, 24)
        (inner, _), (boundary, _) = gb.disk_balance(emb, fine, coarse)
        closed_inner = -2 * math.pi * (math.cosh(r) - 1)
        closed_boundary = (1 / math.tanh(r)) * 2 * math.pi * math.sinh(r)
        ok &= abs(inner + boundary - 2 * math.pi) <= 1e-6
        ok &= abs(inner - closed_inner) <= 1e-6 and abs(boundary - closed_boundary) <= 1e-6
        lines.append(f"r={r}: int K {inner:.9f}, int GK {boundary:.9f}, sum - 2pi {inner + boundary - 2 * math.pi:.1e}")
    acceptance(10, "n=2: 2 pi = int_C K + int GK on H^2 disks", bool(ok), "; ".join(lines))


def test_decomposition_constants(acceptance):
    fits = {}
    families = {
        3: [hs.geodesic_sphere(mf.hyperbolic_normal(3), 1.0)],
        4: [
            hs.geodesic_sphere(mf.hyperbolic_times_flat(4), 1.0),
            hs.perturbed_sphere(hs.geodesic_sphere(mf.hyperbolic_times_flat(4), 1.0), 0.05, "zonal2"),
        ],
        5: [hs.geodesic_sphere(mf.hyperbolic_times_flat(5), 0.5)],
    }
    for n, embs in families.items():
        lhs, gk, corr = [], [], []
        for emb in embs:
            s = gb.surface_samples(emb, sphere_grid(n - 1, 8))
            lhs.append(s.lhs)
            gk.append(s.gk)
            corr.append(s.correction)
        fits[n] = gb.fit_structure_constants(np.concatenate(lhs), np.concatenate(gk), np.concatenate(corr))
    ok = all(f.defined and f.constant > 0 and f.spread <= 1e-3 for f in fits.values())
    ok &= abs(fits[3].constant - 1.0) <= 1e-6
    detail = ", ".join(f"n={n}: c={f.constant:.8f} spread {f.spread:.1e}" for n, f in fits.items())
    acceptance(11, "fitted decomposition constants positive and constant", bool(ok), detail)


def test_isoperimetric(acceptance):
    ok = True
    eq = []
    for n in (3, 4):
        rep = gb.verify_isoperimetric(hs.geodesic_sphere(mf.euclidean(n), 0.7))
        eq.append(abs(rep.ratio / rep.euclidean_constant - 1))
    ok &= max(eq) <= 1e-8
    lines = [f"euclidean equality {max(eq):.1e}"]
    for chart in (mf.hyperbolic_normal(4), mf.hyperbolic_times_flat(4)):
        deficits = []
        for r in (1.0, 0.5, 0.25, 0.125):
            rep = gb.verify_isoperimetric(hs.geodesic_sphere(chart, r), order=12)
            ok &= rep.ratio >= rep.euclidean_constant
            deficits.append(rep.deficit)
        ok &= all(a > b > 0 for a, b in zip(deficits, deficits[1:]))
        lines.append(f"{chart.name} deficits {[f'{d:.4g}' for d in deficits]}")
    acceptance(12, "isoperimetric ratio >= Euclidean constant", bool(ok), "; ".join(lines))


def test_frame_independence(acceptance, rotation):
    rng = np.random.default_rng(13)
    spread = {}
    # Pf of H^4 at one point
    h4 = mf.hyperbolic_normal(4)
    p = np.array([0.3, -0.2, 0.5, 0.1])
    base = mf.orthonormal_frame(h4, p)
    vals = [gb.pf_scalar(mf.orthonormal_frame(h4, p, frame=base.frame @ rotation(rng, 4))) for _ in range(20)]
    spread["Pf H^4"] = float(np.ptp(vals + [gb.pf_scalar(base)]))
    # intrinsic Pf of a 4-dimensional surface in H^3 x R^2
    emb = hs.geodesic_sphere(mf.hyperbolic_times_flat(5), 0.5)
    u = np.array([0.7, 1.1, 2.0, 0.4])
    chart = hs.induced_chart(emb)
    base = mf.orthonormal_frame(chart, u)
    vals = [gb.pf_scalar(mf.orthonormal_frame(chart, u, frame=base.frame @ rotation(rng, 4))) for _ in range(20)]
    spread["Pf surface"] = float(np.ptp(vals + [gb.pf_scalar(base)]))
    # TPf on spheres in H^3 x R and H^4, tangent frame rotated
    for chart4 in (mf.hyperbolic_times_flat(4), mf.hyperbolic_normal(4)):
        emb = hs.geodesic_sphere(chart4, 0.8)
        sd = hs.shape_at(emb, np.array([0.9, 1.3, 2.2]))
        ref = gb.tpf_scalar(sd)
        vals = [gb.tpf_scalar(sd, hs.ambient_frame_along(sd, sd.principal_frame @ rotation(rng, 3))) for _ in range(20)]
        spread[f"TPf {chart4.name}"] = float(np.ptp(vals + [ref]))
    ok = all(v <= 1e-8 for v in spread.values())
    acceptance(13, "Pf and TPf invariant under 20 SO re-framings", ok, ", ".join(f"{k}: {v:.1e}" for k, v in spread.items()))
