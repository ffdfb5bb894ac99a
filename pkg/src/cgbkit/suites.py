"""Verification suites run by the command line tool.

Each suite returns a list of :class:`VerdictRecord`. Numeric exceptions
inside a suite become ``fail`` records instead of escaping.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import gaussbonnet as gb
from . import hypersurface as hs
from . import manifold as mf
from .quadrature import sphere_grid, sphere_volume


@dataclass
class VerdictRecord:
    suite: str
    case: str
    verdict: str
    quantities: dict
    tolerance: float
    error_estimates: dict = field(default_factory=dict)
    notes: str = ""
    provenance: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(_finite(asdict(self)), sort_keys=True)


def _finite(obj):
    """JSON-safe copy: non-finite floats become strings, arrays become lists."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


@dataclass
class RunContext:
    config: object
    ambient: mf.ManifoldChart
    rng: np.random.Generator
    seed: int
    timestamp: str

    @property
    def provenance(self):
        return {"config_hash": self.config.config_hash, "seed": self.seed, "timestamp": self.timestamp}

    def record(self, suite, case, verdict, quantities, tolerance, errors=None, notes=""):
        return VerdictRecord(suite, case, verdict, quantities, tolerance, errors or {}, notes, self.provenance)


def make_context(config, seed=None):
    seed = config.seed if seed is None else seed
    return RunContext(
        config,
        config.ambient.build(),
        np.random.default_rng(seed),
        seed,
        datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def sample_points(chart, rng, count):
    """Random chart points well inside the domain."""
    n = chart.dimension
    tag = chart.model_tag
    if tag == "sphere":
        pts = rng.uniform(0.2, math.pi - 0.2, size=(count, n))
        pts[:, -1] = rng.uniform(0.0, 2 * math.pi, size=count)
        return pts
    if tag == "half_space":
        pts = rng.normal(scale=0.5, size=(count, n))
        pts[:, -1] = np.exp(rng.normal(scale=0.5, size=count))
        return pts
    if tag == "hyperbolic_polar":
        pts = np.empty((count, n))
        pts[:, 0] = rng.uniform(0.2, 1.5, size=count)
        if n > 1:
            pts[:, 1:] = rng.uniform(0.2, math.pi - 0.2, size=(count, n - 1))
            pts[:, -1] = rng.uniform(0.0, 2 * math.pi, size=count)
        return pts
    origin = np.zeros(n) if chart.origin is None else np.asarray(chart.origin, dtype=float)
    return origin + rng.normal(scale=0.6, size=(count, n))


def build_surface(ambient, spec, check_order=16):
    if spec.type == "ellipsoid":
        return hs.ellipsoid(spec.axes)
    base = hs.geodesic_sphere(ambient, spec.radius)
    if spec.type == "perturbed_sphere":
        return hs.perturbed_sphere(base, spec.amplitude, spec.mode, check_order)
    return base


def _error_record(ctx, suite, case, exc):
    point = getattr(exc, "point", None)
    q = {"error_type": type(exc).__name__}
    if point is not None:
        q["point"] = np.asarray(point).tolist()
    return ctx.record(suite, case, "fail", q, math.nan, notes=str(exc))


def _guarded(suite, case, ctx, fn):
    try:
        return fn()
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return [_error_record(ctx, suite, case, exc)]


# ---------------------------------------------------------------- suites


def suite_normalization(ctx):
    t = ctx.config.tolerances["normalization"]
    out = []
    for k in (2, 4, 6):

        def run(k=k):
            chart = mf.round_sphere(k)
            pts = sample_points(chart, ctx.rng, max(ctx.config.points, 20))
            err = float(np.max(np.abs(gb.pf_scalar(mf.orthonormal_frame(chart, pts)) - 1.0)))
            verdict = "pass" if err < t else "fail"
            return [ctx.record("normalization", f"unit S^{k}", verdict, {"max_abs_error": err, "points": len(pts)}, t)]

        out += _guarded("normalization", f"unit S^{k}", ctx, run)
    return out


def suite_cgb_closed(ctx):
    t = ctx.config.tolerances["closed_cgb"]
    out = []
    for k in (2, 4):

        def run(k=k):
            val, err = gb.closed_pfaffian_integral(mf.round_sphere(k), ctx.config.order_for(k))
            verdict, band = gb.integral_verdict(val, 2.0, err, t / 2.0)
            q = {"euler_estimate": val, "expected": 2.0}
            return [ctx.record("cgb_closed", f"unit S^{k}", verdict, q, band, {"euler_estimate": err})]

        out += _guarded("cgb_closed", f"unit S^{k}", ctx, run)
    return out


FLAT_BOUNDARY_ORDERS = {1: 24, 3: 16, 5: 10}


def suite_cgb_boundary(ctx):
    t = ctx.config.tolerances["boundary_cgb"]
    tp = ctx.config.tolerances["flat_pointwise"]
    out = []
    for k in (2, 4, 6):

        def run(k=k):
            emb = hs.geodesic_sphere(mf.euclidean(k), 1.0)
            order = ctx.config.orders.get(k - 1, FLAT_BOUNDARY_ORDERS[k - 1])
            val, err, gap = gb.transgression_integral(emb, order)
            verdict = "pass" if abs(val - 1.0) <= t and gap <= tp else "fail"
            q = {"euler_estimate": val, "expected": 1.0, "max_abs_tpf_minus_gk": gap}
            return [ctx.record("cgb_boundary", f"unit ball B^{k}", verdict, q, t, {"euler_estimate": err})]

        out += _guarded("cgb_boundary", f"unit ball B^{k}", ctx, run)
    return out


def suite_lemma31(ctx):
    chart = ctx.ambient
    n = chart.dimension
    t = ctx.config.tolerances["lemma"]
    case = chart.name
    if n < 4:
        return [ctx.record("lemma31", case, "inconclusive", {"dimension": n}, t, notes="needs dimension >= 4")]

    def run():
        pts = sample_points(chart, ctx.rng, ctx.config.points)
        res, where = gb.lemma31_residual(mf.orthonormal_frame(chart, pts))
        nullity = min(mf.nullity_space(chart, p, ctx.config.tolerances["nullity_rel"]).nullity_dim for p in pts)
        met = nullity >= n - 3
        q = {
            "max_wedge_residual": res,
            "attained_at": [list(w) for w in where],
            "min_sampled_nullity": nullity,
            "hypothesis_met": met,
            "points": len(pts),
        }
        if met:
            verdict = "pass" if res <= t else "fail"
            notes = "nullity >= n-3 at all sampled points (sampling estimate)"
        else:
            verdict = "inconclusive"
            notes = "nullity hypothesis not met; residual reported as a control"
        return [ctx.record("lemma31", case, verdict, q, t, notes=notes)]

    return _guarded("lemma31", case, ctx, run)


def suite_nullity(ctx):
    chart = ctx.ambient
    t = ctx.config.tolerances["nullity_rel"]

    def run():
        pts = sample_points(chart, ctx.rng, ctx.config.points)
        results = [mf.nullity_space(chart, p, t) for p in pts]
        dims = [r.nullity_dim for r in results]
        gaps = [r.gap for r in results]
        consistent = len(set(dims)) == 1
        q = {
            "nullity_estimate": min(dims),
            "nullity_dims": dims,
            "min_gap": min(gaps),
            "singular_values_first_point": results[0].singular_values.tolist(),
            "points": len(pts),
        }
        verdict = "pass" if consistent and min(gaps) >= 1e3 else "inconclusive"
        notes = "pointwise minimum over sampled points; a sampling estimate of the infimum"
        return [ctx.record("nullity", chart.name, verdict, q, t, notes=notes)]

    return _guarded("nullity", chart.name, ctx, run)


def suite_gauss_equation(ctx):
    t = ctx.config.tolerances["gauss_equation"]
    out = []
    for spec in ctx.config.surfaces:

        def run(spec=spec):
            emb = build_surface(ctx.ambient, spec)
            grid = sphere_grid(emb.dimension, 8)
            res = float(np.max(hs.gauss_form_residual(emb, grid.nodes)))
            return [
                ctx.record(
                    "gauss_equation",
                    spec.name,
                    "pass" if res <= t else "fail",
                    {"max_form_residual": res, "points": len(grid)},
                    t,
                )
            ]

        out += _guarded("gauss_equation", spec.name, ctx, run)
    return out


def suite_theorem(ctx):
    cfg = ctx.config
    out = []
    for spec in cfg.surfaces:

        def run(spec=spec):
            emb = build_surface(ctx.ambient, spec)
            rep = gb.verify_theorem(
                emb,
                cfg.order_for(emb.dimension, spec),
                rel_tol=cfg.tolerances["integral_rel"],
                slack=cfg.tolerances["pointwise"],
            )
            q = {
                k: v
                for k, v in rep.record().items()
                if k not in ("verdicts", "surface", "tolerance", "integral_error", "total_curvature_error")
            }
            q["verdicts"] = rep.verdicts
            verdicts = list(rep.verdicts.values())
            verdict = "fail" if "fail" in verdicts else "inconclusive" if "inconclusive" in verdicts else "pass"
            errs = {"integral": rep.integral_error, "total_curvature": rep.total_curvature_error}
            notes = "convexity: grid-verified"
            if rep.equality:
                notes += "; equality case (total curvature equals the sphere volume within tolerance)"
            return [ctx.record("theorem", spec.name, verdict, q, rep.tolerance, errs, notes)]

        out += _guarded("theorem", spec.name, ctx, run)
    return out


def suite_isoperimetric(ctx):
    cfg = ctx.config
    teq = cfg.tolerances["isoperimetric_equality"]
    out = []
    for spec in cfg.surfaces:

        def run(spec=spec):
            emb = build_surface(ctx.ambient, spec)
            rep = gb.verify_isoperimetric(emb, cfg.order_for(emb.dimension, spec), cfg.radial_order, teq)
            q = rep.record()
            q.pop("surface")
            q.pop("verdict")
            notes = "equality (Euclidean ball)" if abs(rep.deficit) <= teq else ""
            return [ctx.record("isoperimetric", spec.name, rep.verdict, q, teq, {"area": rep.area_error}, notes)]

        out += _guarded("isoperimetric", spec.name, ctx, run)
    return out


SUITE_FUNCTIONS = {
    "normalization": suite_normalization,
    "cgb_closed": suite_cgb_closed,
    "cgb_boundary": suite_cgb_boundary,
    "lemma31": suite_lemma31,
    "gauss_equation": suite_gauss_equation,
    "theorem": suite_theorem,
    "isoperimetric": suite_isoperimetric,
    "nullity": suite_nullity,
}


def run_suites(config, names=None, seed=None):
    ctx = make_context(config, seed)
    records = []
    for name in names or config.suites:
        records += SUITE_FUNCTIONS[name](ctx)
    return records


# ---------------------------------------------------------------- output

CSV_FIELDS = ("suite", "case", "verdict", "quantity", "value", "error_estimate", "tolerance")


def _flat_quantities(q, prefix=""):
    for k, v in q.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flat_quantities(v, key + ".")
        else:
            yield key, v


def write_reports(records, out_dir, formats=("jsonl", "csv")):
    """Write ``report.jsonl`` and ``summary.csv``; returns the written paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if "jsonl" in formats:
        p = os.path.join(out_dir, "report.jsonl")
        with open(p, "w", encoding="utf-8") as fh:
            for r in records:
                fh.write(r.to_json() + "\n")
        paths.append(p)
    if "csv" in formats:
        p = os.path.join(out_dir, "summary.csv")
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_FIELDS)
            for r in records:
                for key, v in _flat_quantities(_finite(r.quantities)):
                    err = r.error_estimates.get(key, "")
                    w.writerow([r.suite, r.case, r.verdict, key, _cell(v), _cell(err), _cell(r.tolerance)])
        paths.append(p)
    return paths


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return json.dumps(_finite(v))
    return v


def format_table(records):
    """Human-readable verdict table."""
    lines = [f"{'suite':<15} {'verdict':<13} case"]
    for r in records:
        lines.append(f"{r.suite:<15} {r.verdict:<13} {r.case}")
    return "\n".join(lines)
