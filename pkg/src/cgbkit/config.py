"""Declarative run configuration (TOML).

Example::

    seed = 7

    [ambient]
    model = "hyperbolic_times_flat"
    dimension = 4

    [[surfaces]]
    type = "geodesic_sphere"
    radius = 1.0

    [suites]
    run = ["theorem", "lemma31"]
"""

import hashlib
import json
import sys
from dataclasses import dataclass, field

from . import manifold as mf
from . import tolerances as tol
from .hypersurface import PERTURBATION_MODES

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SUITES = (
    "normalization",
    "cgb_closed",
    "cgb_boundary",
    "lemma31",
    "gauss_equation",
    "theorem",
    "isoperimetric",
    "nullity",
)

MODELS = {
    "euclidean": "flat R^n",
    "hyperbolic": "H^n in normal coordinates about the origin (curvature < 0)",
    "hyperbolic_polar": "H^n in geodesic polar coordinates (r, angles)",
    "half_space": "H^n upper half-space model",
    "sphere": "round S^n in hyperspherical angles",
    "hyperbolic_times_flat": "product H^3 x R^(n-3)",
    "product": "product of [[ambient.factors]] charts",
}

SURFACES = {
    "geodesic_sphere": "exp_center(r u): radius",
    "perturbed_sphere": "exp_center((r + amplitude h(u)) u): radius, amplitude, mode",
    "ellipsoid": "Euclidean ellipsoid: axes (ambient must be euclidean)",
}

DEFAULT_TOLERANCES = {
    "integral_rel": tol.INTEGRAL_REL,
    "pointwise": tol.POINTWISE_SLACK,
    "normalization": 1e-7,
    "closed_cgb": 1e-3,
    "boundary_cgb": 1e-4,
    "flat_pointwise": 1e-9,
    "lemma": tol.LEMMA_WEDGE,
    "gauss_equation": 1e-4,
    "fit_spread": tol.FIT_SPREAD,
    "isoperimetric_equality": 1e-8,
    "nullity_rel": tol.NULLITY_REL,
}


class ConfigError(ValueError):
    """Invalid configuration; ``where`` names the offending field or line."""

    def __init__(self, where, message):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class AmbientSpec:
    model: str
    dimension: int
    curvature: float = -1.0
    radius: float = 1.0
    derivative_mode: str = "dual_number"
    factors: tuple = ()

    def build(self):
        chart = _build_chart(self)
        return chart.with_mode(self.derivative_mode) if self.derivative_mode != chart.derivative_mode else chart


def _build_chart(spec):
    n = spec.dimension
    if spec.model == "euclidean":
        return mf.euclidean(n)
    if spec.model == "hyperbolic":
        return mf.hyperbolic_normal(n, spec.curvature)
    if spec.model == "hyperbolic_polar":
        return mf.hyperbolic_polar(n, spec.curvature)
    if spec.model == "half_space":
        return mf.half_space(n)
    if spec.model == "sphere":
        return mf.round_sphere(n, spec.radius)
    if spec.model == "hyperbolic_times_flat":
        return mf.hyperbolic_times_flat(n, curvature=spec.curvature)
    if spec.model == "product":
        return mf.product(*[_build_chart(f) for f in spec.factors])
    raise ConfigError("ambient.model", f"unknown model {spec.model!r}")


@dataclass(frozen=True)
class SurfaceSpec:
    type: str
    radius: float = 1.0
    amplitude: float = 0.0
    mode: str = "zonal2"
    axes: tuple = ()
    order: int = 0
    label: str = ""

    @property
    def name(self):
        if self.label:
            return self.label
        if self.type == "ellipsoid":
            return f"ellipsoid{list(self.axes)}"
        if self.type == "perturbed_sphere":
            return f"perturbed_sphere(r={self.radius:g},eps={self.amplitude:g},{self.mode})"
        return f"geodesic_sphere(r={self.radius:g})"


@dataclass(frozen=True)
class RunConfig:
    ambient: AmbientSpec
    surfaces: tuple
    suites: tuple
    tolerances: dict
    orders: dict
    radial_order: int = 32
    points: int = 20
    seed: int = 0
    out_dir: str = "cgb-report"
    formats: tuple = ("jsonl", "csv")
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def config_hash(self):
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def order_for(self, m, surface=None):
        if surface is not None and surface.order:
            return surface.order
        return self.orders.get(m)


def _get(table, key, kind, where, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(where, "missing required field")
        return default
    v = table[key]
    if kind is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if kind is not None and not isinstance(v, kind) or isinstance(v, bool) and kind is not bool:
        raise ConfigError(where, f"expected {getattr(kind, '__name__', kind)}, got {type(v).__name__}")
    return v


def _ambient(table, where="ambient"):
    if not isinstance(table, dict):
        raise ConfigError(where, "expected a table")
    model = _get(table, "model", str, f"{where}.model", required=True)
    if model not in MODELS:
        raise ConfigError(f"{where}.model", f"unknown model {model!r}; choose from {sorted(MODELS)}")
    factors = ()
    if model == "product":
        raw = table.get("factors")
        if not isinstance(raw, list) or len(raw) < 2:
            raise ConfigError(f"{where}.factors", "product needs at least two factor tables")
        factors = tuple(_ambient(f, f"{where}.factors[{i}]") for i, f in enumerate(raw))
        dim = sum(f.dimension for f in factors)
        given = table.get("dimension", dim)
        if given != dim:
            raise ConfigError(f"{where}.dimension", f"{given} does not match the factor total {dim}")
    else:
        dim = _get(table, "dimension", int, f"{where}.dimension", required=True)
    if dim < 1:
        raise ConfigError(f"{where}.dimension", "must be positive")
    if dim > tol.MAX_DIMENSION:
        raise ConfigError(
            f"{where}.dimension", f"dimension {dim} exceeds desk-scale guard (max {tol.MAX_DIMENSION})"
        )
    if model == "sphere" and dim > tol.MAX_SPHERE_DIM:
        raise ConfigError(f"{where}.dimension", f"sphere dimension {dim} exceeds {tol.MAX_SPHERE_DIM}")
    if model == "hyperbolic_times_flat" and dim < 3:
        raise ConfigError(f"{where}.dimension", "H^3 x R^k needs dimension >= 3")
    curvature = _get(table, "curvature", float, f"{where}.curvature", -1.0)
    if model in ("hyperbolic", "hyperbolic_polar", "hyperbolic_times_flat") and curvature >= 0:
        raise ConfigError(f"{where}.curvature", "hyperbolic curvature must be negative")
    radius = _get(table, "radius", float, f"{where}.radius", 1.0)
    if radius <= 0:
        raise ConfigError(f"{where}.radius", "must be positive")
    mode = _get(table, "derivative_mode", str, f"{where}.derivative_mode", "dual_number")
    if mode not in ("dual_number", "central_difference"):
        raise ConfigError(f"{where}.derivative_mode", f"unknown mode {mode!r}")
    return AmbientSpec(model, dim, curvature, radius, mode, factors)


def _surface(table, i, ambient):
    where = f"surfaces[{i}]"
    if not isinstance(table, dict):
        raise ConfigError(where, "expected a table")
    kind = _get(table, "type", str, f"{where}.type", required=True)
    if kind not in SURFACES:
        raise ConfigError(f"{where}.type", f"unknown surface type {kind!r}; choose from {sorted(SURFACES)}")
    radius = _get(table, "radius", float, f"{where}.radius", 1.0)
    if radius <= 0:
        raise ConfigError(f"{where}.radius", "must be positive")
    amplitude = _get(table, "amplitude", float, f"{where}.amplitude", 0.0)
    mode = _get(table, "mode", str, f"{where}.mode", "zonal2")
    if mode not in PERTURBATION_MODES:
        raise ConfigError(f"{where}.mode", f"unknown mode {mode!r}; choose from {list(PERTURBATION_MODES)}")
    axes = tuple(float(a) for a in _get(table, "axes", list, f"{where}.axes", []))
    if kind == "ellipsoid":
        if ambient.model != "euclidean":
            raise ConfigError(f"{where}.type", "ellipsoids need a euclidean ambient")
        if len(axes) != ambient.dimension:
            raise ConfigError(f"{where}.axes", f"need {ambient.dimension} semi-axes, got {len(axes)}")
        if any(a <= 0 for a in axes):
            raise ConfigError(f"{where}.axes", "semi-axes must be positive")
    if ambient.model == "sphere":
        raise ConfigError(where, "surfaces need a Cartan-Hadamard ambient, not a sphere")
    order = _get(table, "order", int, f"{where}.order", 0)
    if order and (order < 8 or order % 2):
        raise ConfigError(f"{where}.order", "grid order must be even and >= 8")
    label = _get(table, "label", str, f"{where}.label", "")
    return SurfaceSpec(kind, radius, amplitude, mode, axes, order, label)


def parse_config(text, source="<config>"):
    """Parse and validate TOML text into a :class:`RunConfig`."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(source, f"TOML syntax error: {exc}") from exc
    known = {"seed", "ambient", "surfaces", "suites", "tolerances", "grids", "output"}
    for key in raw:
        if key not in known:
            raise ConfigError(key, f"unknown top-level key; expected one of {sorted(known)}")
    if "ambient" not in raw:
        raise ConfigError("ambient", "missing required table")
    ambient = _ambient(raw["ambient"])
    surfaces_raw = raw.get("surfaces", [])
    if not isinstance(surfaces_raw, list):
        raise ConfigError("surfaces", "expected an array of tables ([[surfaces]])")
    surfaces = tuple(_surface(t, i, ambient) for i, t in enumerate(surfaces_raw))

    suites_t = raw.get("suites", {})
    if not isinstance(suites_t, dict):
        raise ConfigError("suites", "expected a table")
    names = _get(suites_t, "run", list, "suites.run", ["theorem"])
    for s in names:
        if s not in SUITES:
            raise ConfigError("suites.run", f"unknown suite {s!r}; choose from {list(SUITES)}")

    tols = dict(DEFAULT_TOLERANCES)
    for k, v in raw.get("tolerances", {}).items():
        if k not in tols:
            raise ConfigError(f"tolerances.{k}", "unknown tolerance")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
            raise ConfigError(f"tolerances.{k}", "tolerance values must be positive numbers")
        tols[k] = float(v)

    grids = raw.get("grids", {})
    orders = {}
    for k, v in grids.get("orders", {}).items():
        try:
            m = int(k)
        except ValueError:
            raise ConfigError(f"grids.orders.{k}", "keys are sphere dimensions") from None
        if not 1 <= m <= tol.MAX_SPHERE_DIM:
            raise ConfigError(f"grids.orders.{k}", f"sphere dimension outside 1..{tol.MAX_SPHERE_DIM}")
        if not isinstance(v, int) or v < 8 or v % 2:
            raise ConfigError(f"grids.orders.{k}", "grid order must be an even integer >= 8")
        orders[m] = v
    radial = _get(grids, "radial_order", int, "grids.radial_order", 32)
    points = _get(grids, "points", int, "grids.points", 20)
    if radial < 2 or points < 1:
        raise ConfigError("grids", "radial_order must be >= 2 and points >= 1")

    seed = _get(raw, "seed", int, "seed", 0)
    out = raw.get("output", {})
    out_dir = _get(out, "dir", str, "output.dir", "cgb-report")
    formats = tuple(_get(out, "formats", list, "output.formats", ["jsonl", "csv"]))
    for f in formats:
        if f not in ("jsonl", "csv"):
            raise ConfigError("output.formats", f"unknown format {f!r}")
    return RunConfig(ambient, surfaces, tuple(names), tols, orders, radial, points, seed, out_dir, formats, raw)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))
