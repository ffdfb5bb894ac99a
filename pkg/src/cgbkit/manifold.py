"""Chart metrics, Levi-Civita connection and curvature.

Every per-point routine accepts a single point of shape ``(n,)`` or a batch
``(..., n)`` and returns arrays with the same leading axes.

Curvature convention: the curvature operator is
``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z`` and the
stored 4-tensor is lowered so that ``R[i,j,i,j]`` is the sectional curvature
of the ``(i,j)`` coordinate plane times its squared area, i.e.
``R[i,j,k,l] = <R(d_i, d_j) d_l, d_k>``. The curvature 2-forms of a frame
are then ``Omega_ij(X, Y) = R(X, Y, e_i, e_j)`` with
``Omega_ij(e_i, e_j) = K_ij`` and the Pfaffian of the unit sphere is ``+1``.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import dual as dm
from . import numdiff
from . import tolerances as tol
from .forms import AlternatingForm, TwoFormMatrix

MODEL_TAGS = (
    "euclidean",
    "hyperbolic_polar",
    "hyperbolic_normal",
    "half_space",
    "sphere",
    "product",
    "custom",
)
ZERO_TENSOR = 1e-12


class ManifoldError(ValueError):
    pass


class DomainError(ManifoldError):
    pass


class SingularMetricError(ManifoldError):
    pass


@dataclass(frozen=True)
class ManifoldChart:
    """A single chart with a smooth metric.

    ``metric`` maps a list of ``n`` coordinates (floats, arrays or duals) to
    an ``n x n`` nested list. ``exp_closed``, when given, maps ``(p, v)`` to
    ``exp_p(v)`` or returns ``None`` where no closed form applies.
    """

    dimension: int
    metric: Callable
    derivative_mode: str = "dual_number"
    model_tag: str = "custom"
    name: str = "custom"
    domain: Optional[Callable] = None
    exp_closed: Optional[Callable] = None
    origin: Optional[tuple] = None
    factors: tuple = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension < 1:
            raise ManifoldError("dimension must be positive")
        if self.model_tag not in MODEL_TAGS:
            raise ManifoldError(f"unknown model tag {self.model_tag!r}")
        if self.derivative_mode not in ("dual_number", "central_difference"):
            raise ManifoldError(f"unknown derivative mode {self.derivative_mode!r}")

    def with_mode(self, mode):
        return ManifoldChart(
            self.dimension,
            self.metric,
            mode,
            self.model_tag,
            self.name,
            self.domain,
            self.exp_closed,
            self.origin,
            self.factors,
            self.params,
        )

    def check_domain(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise DomainError(f"point has {x.shape[-1]} coordinates, chart has {self.dimension}")
        if not np.all(np.isfinite(x)):
            raise DomainError("non-finite coordinates")
        if self.domain is not None:
            ok = np.asarray(self.domain(x))
            if not np.all(ok):
                bad = x.reshape(-1, self.dimension)[~ok.reshape(-1)][0]
                raise DomainError(f"point {bad.tolist()} outside the {self.name} chart domain")
        return x

    def metric_at(self, x):
        x = self.check_domain(x)
        (g,) = dm.jet(self.metric, x, order=0)
        _check_metric(g)
        return g

    def jets(self, x, order=2):
        """Metric and its coordinate derivatives; derivative index last."""
        x = self.check_domain(x)
        out = numdiff.derivatives(self.metric, x, order, self.derivative_mode)
        _check_metric(out[0])
        return out


def _check_metric(g):
    asym = np.max(np.abs(g - np.swapaxes(g, -1, -2))) if g.size else 0.0
    if asym > tol.METRIC_SYMMETRY * max(1.0, float(np.max(np.abs(g)))):
        raise SingularMetricError(f"metric not symmetric (defect {asym:.3e})")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError("metric is not positive-definite") from exc


# ---------------------------------------------------------------- models


def euclidean(n):
    def metric(x):
        return [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]

    def exp_closed(p, v):
        return [pi + vi for pi, vi in zip(p, v)]

    return ManifoldChart(
        n, metric, model_tag="euclidean", name=f"R^{n}", exp_closed=exp_closed, origin=(0.0,) * n
    )


def _series_eval(coeffs, t):
    out = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        out = dm.add(dm.mul(out, t), c)
    return out


_SERIES_MAX = 1.0
_A_COEFFS = [2.0 ** (2 * j + 1) / math.factorial(2 * j + 2) for j in range(18)]
_B_COEFFS = [-(2.0 ** (2 * j + 3)) / math.factorial(2 * j + 4) for j in range(18)]


def _where(cond, a, b):
    t = max(getattr(a, "tag", 0), getattr(b, "tag", 0))
    if t == 0:
        return np.where(cond, a, b)
    ar, ad = dm.split(a, t)
    br, bd = dm.split(b, t)
    return dm.Dual(_where(cond, ar, br), _where(cond, ad, bd), t)


def _sinh_ratio_sq(t):
    # a(t) = sinh(sqrt t)^2 / t and b(t) = (1 - a(t)) / t, both entire in t
    small = np.asarray(dm.value(t)) <= _SERIES_MAX
    a_ser = _series_eval(_A_COEFFS, t)
    b_ser = _series_eval(_B_COEFFS, t)
    if np.all(small):
        return a_ser, b_ser
    with np.errstate(all="ignore"):
        tt = _where(small, 2.0 * _SERIES_MAX, t)
        s = dm.sinh(dm.sqrt(tt))
        a_cf = dm.div(dm.mul(s, s), tt)
        b_cf = dm.div(dm.add(1.0, -a_cf), tt)
    return _where(small, a_ser, a_cf), _where(small, b_ser, b_cf)


def hyperbolic_normal(n, curvature=-1.0):
    """Hyperbolic space in normal (exponential) coordinates about the origin.

    ``g = a(|K| r^2) I + |K| b(|K| r^2) x x^T`` with ``r = |x|``; geodesics
    through the origin are straight lines, so ``exp_0(v) = v``.
    """
    k = -float(curvature)
    if k <= 0:
        raise ManifoldError("hyperbolic curvature must be negative")

    def metric(x):
        t = 0.0
        for xi in x:
            t = dm.add(t, dm.mul(xi, xi))
        a, b = _sinh_ratio_sq(dm.mul(k, t))
        bk = dm.mul(k, b)
        g = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                e = dm.mul(bk, dm.mul(x[i], x[j]))
                if i == j:
                    e = dm.add(a, e)
                g[i][j] = e
                g[j][i] = e
        return g

    def exp_closed(p, v):
        if all(float(np.max(np.abs(dm.value(pi)))) == 0.0 for pi in p):
            return list(v)
        return None

    return ManifoldChart(
        n,
        metric,
        model_tag="hyperbolic_normal",
        name=f"H^{n}",
        exp_closed=exp_closed,
        origin=(0.0,) * n,
        params={"curvature": float(curvature)},
    )


def hyperbolic_polar(n, curvature=-1.0):
    """Geodesic polar coordinates ``(r, phi_1, ..., phi_{n-1})`` on H^n.

    ``g = dr^2 + (sinh(sqrt|K| r)/sqrt|K|)^2 dsigma^2``; the center is the
    degenerate locus ``r = 0`` and is not a chart point.
    """
    k = -float(curvature)
    if k <= 0:
        raise ManifoldError("hyperbolic curvature must be negative")
    sk = math.sqrt(k)
    rs = _round_sphere_diag(n - 1)

    def metric(x):
        s = dm.div(dm.sinh(dm.mul(sk, x[0])), sk)
        s2 = dm.mul(s, s)
        diag = [1.0] + [dm.mul(s2, d) for d in rs(x[1:])]
        return [[diag[i] if i == j else 0.0 for j in range(n)] for i in range(n)]

    def domain(x):
        ok = x[..., 0] > 0
        if n > 2:
            ok &= np.all((x[..., 1 : n - 1] > 0) & (x[..., 1 : n - 1] < np.pi), axis=-1)
        return ok

    return ManifoldChart(
        n,
        metric,
        model_tag="hyperbolic_polar",
        name=f"H^{n} (polar)",
        domain=domain,
        params={"curvature": float(curvature)},
    )


def half_space(n):
    """Upper half-space model ``(dx_1^2 + ... + dx_n^2) / x_n^2``."""

    def metric(x):
        c = dm.div(1.0, dm.mul(x[-1], x[-1]))
        return [[c if i == j else 0.0 for j in range(n)] for i in range(n)]

    def exp_closed(p, v):
        # vertical geodesics only
        if n and all(float(np.max(np.abs(dm.value(vi)))) == 0.0 for vi in v[:-1]):
            return list(p[:-1]) + [dm.mul(p[-1], dm.exp(dm.div(v[-1], p[-1])))]
        return None

    return ManifoldChart(
        n,
        metric,
        model_tag="half_space",
        name=f"H^{n} (half-space)",
        domain=lambda x: x[..., -1] > 0,
        exp_closed=exp_closed,
        params={"curvature": -1.0},
    )


def _round_sphere_diag(m):
    # diagonal of the unit round metric on S^m in hyperspherical angles
    def diag(phi):
        out = [1.0]
        prod = 1.0
        for j in range(m - 1):
            s = dm.sin(phi[j])
            prod = dm.mul(prod, dm.mul(s, s))
            out.append(prod)
        return out[:m]

    return diag


def round_sphere(k, radius=1.0):
    """Round sphere S^k of the given radius in hyperspherical angles."""
    r2 = float(radius) ** 2
    diag = _round_sphere_diag(k)

    def metric(x):
        d = diag(x)
        return [[dm.mul(r2, d[i]) if i == j else 0.0 for j in range(k)] for i in range(k)]

    def domain(x):
        if k == 1:
            return np.ones(x.shape[:-1], dtype=bool)
        return np.all((x[..., : k - 1] > 0) & (x[..., : k - 1] < np.pi), axis=-1)

    return ManifoldChart(
        k,
        metric,
        model_tag="sphere",
        name=f"S^{k}",
        domain=domain,
        params={"radius": float(radius)},
    )


def product(*factors):
    """Riemannian product; coordinates are concatenated in factor order."""
    if not factors:
        raise ManifoldError("product needs at least one factor")
    dims = [f.dimension for f in factors]
    n = sum(dims)
    offsets = np.cumsum([0] + dims)

    def metric(x):
        g = [[0.0] * n for _ in range(n)]
        for f, o, d in zip(factors, offsets, dims):
            block = f.metric(list(x[o : o + d]))
            for i in range(d):
                for j in range(d):
                    g[o + i][o + j] = block[i][j]
        return g

    def domain(x):
        ok = np.ones(x.shape[:-1], dtype=bool)
        for f, o, d in zip(factors, offsets, dims):
            if f.domain is not None:
                ok &= np.asarray(f.domain(x[..., o : o + d]))
        return ok

    def exp_closed(p, v):
        out = []
        for f, o, d in zip(factors, offsets, dims):
            if f.exp_closed is None:
                return None
            part = f.exp_closed(list(p[o : o + d]), list(v[o : o + d]))
            if part is None:
                return None
            out.extend(part)
        return out

    origin = None
    if all(f.origin is not None for f in factors):
        origin = tuple(c for f in factors for c in f.origin)
    return ManifoldChart(
        n,
        metric,
        model_tag="product",
        name=" x ".join(f.name for f in factors),
        domain=domain,
        exp_closed=exp_closed,
        origin=origin,
        factors=tuple(factors),
    )


def hyperbolic_times_flat(n, hyperbolic_dim=3, curvature=-1.0):
    """``H^h x R^(n-h)``, the basic example with nullity index ``n - h``."""
    if n == hyperbolic_dim:
        return hyperbolic_normal(n, curvature)
    return product(hyperbolic_normal(hyperbolic_dim, curvature), euclidean(n - hyperbolic_dim))


# ---------------------------------------------------------------- connection


def christoffel_from(g, dg):
    """``Gamma[..., k, i, j]`` from the metric and ``dg[..., a, b, c] = d_c g_ab``."""
    first = 0.5 * (
        np.einsum("...ljk->...lkj", dg, optimize=True) + dg - np.einsum("...jkl->...ljk", dg, optimize=True)
    )
    # first[..., l, i, j] = 1/2 (d_i g_lj + d_j g_li - d_l g_ij)
    ginv = np.linalg.inv(g)
    return np.einsum("...kl,...lij->...kij", ginv, first, optimize=True)


def christoffel(chart, p):
    """Christoffel symbols of the second kind, ``Gamma[..., k, i, j]``."""
    g, dg = chart.jets(p, order=1)
    return christoffel_from(g, dg)


def riemann_from(g, dg, d2g):
    """Lowered curvature tensor (see module docstring) from metric jets."""
    n = g.shape[-1]
    batch = g.shape[:-2]
    ginv = np.linalg.inv(g)
    first = 0.5 * (np.swapaxes(dg, -1, -2) + dg - np.moveaxis(dg, -1, -3))
    # first[..., l, i, j] = 1/2 (d_i g_lj + d_j g_li - d_l g_ij)
    gam = (ginv @ first.reshape(batch + (n, n * n))).reshape(batch + (n, n, n))
    # d_m of first kind symbols: dfirst[..., l, i, j, m]
    dfirst = 0.5 * (
        np.swapaxes(d2g, -3, -2) + d2g - np.moveaxis(d2g, -2, -4)
    )
    # d_m ginv = -ginv (d_m g) ginv, stacked as [..., m, k, l]
    dgm = np.moveaxis(dg, -1, -3)
    dginv = -(ginv[..., None, :, :] @ dgm @ ginv[..., None, :, :])
    t = dginv @ first.reshape(batch + (1, n, n * n))  # [..., m, k, (i j)]
    dgam = np.moveaxis(t.reshape(batch + (n, n, n, n)), -4, -1)
    dgam = dgam + (ginv @ dfirst.reshape(batch + (n, n**3))).reshape(batch + (n,) * 4)
    # R^l_{ijk} = d_i Gam^l_jk - d_j Gam^l_ik + Gam^l_im Gam^m_jk - Gam^l_jm Gam^m_ik
    t1 = np.moveaxis(dgam, -1, -3)  # [..., l, i, j, k] = d_i Gam^l_jk
    quad = (gam.reshape(batch + (n * n, n)) @ gam.reshape(batch + (n, n * n))).reshape(batch + (n,) * 4)
    rup = t1 - np.swapaxes(t1, -3, -2) + quad - np.swapaxes(quad, -3, -2)
    # lowered: R[i,j,k,l] = g_km R^m_{ijl}
    low = (g @ rup.reshape(batch + (n, n**3))).reshape(batch + (n,) * 4)  # [..., k, i, j, l]
    return np.moveaxis(low, -4, -2)


@dataclass
class CurvatureData:
    point: np.ndarray
    riemann_lowered: np.ndarray
    metric: np.ndarray
    convention: str = "R[i,j,k,l] = <R(d_i,d_j)d_l, d_k>; R[i,j,i,j] = K |d_i ^ d_j|^2"

    def symmetry_defect(self):
        """Largest violation of the algebraic symmetries, relative to max |R|."""
        R = self.riemann_lowered
        scale = max(float(np.max(np.abs(R))), 1e-300)
        defects = [
            R + np.swapaxes(R, -4, -3),
            R + np.swapaxes(R, -2, -1),
            R - np.einsum("...ijkl->...klij", R),
            R + np.einsum("...jkil->...ijkl", R) + np.einsum("...kijl->...ijkl", R),
        ]
        return max(float(np.max(np.abs(d))) for d in defects) / scale


def riemann(chart, p):
    p = np.asarray(p, dtype=float)
    g, dg, d2g = chart.jets(p, order=2)
    return CurvatureData(p, riemann_from(g, dg, d2g), g)


def sectional_curvature(curv, X, Y):
    R = curv.riemann_lowered
    g = curv.metric
    num = np.einsum("...ijkl,...i,...j,...k,...l->...", R, X, Y, X, Y)
    gxx = np.einsum("...ij,...i,...j->...", g, X, X)
    gyy = np.einsum("...ij,...i,...j->...", g, Y, Y)
    gxy = np.einsum("...ij,...i,...j->...", g, X, Y)
    return num / (gxx * gyy - gxy * gxy)


# ---------------------------------------------------------------- frames


def gram_schmidt(g, vectors):
    """Orthonormalize the columns of ``vectors`` under ``g`` in column order."""
    V = np.array(vectors, dtype=float)
    out = np.empty_like(V)
    for a in range(V.shape[-1]):
        v = V[..., a].copy()
        for b in range(a):
            e = out[..., b]
            v = v - np.einsum("...i,...ij,...j->...", e, g, v)[..., None] * e
        norm = np.sqrt(np.einsum("...i,...ij,...j->...", v, g, v))
        out[..., a] = v / norm[..., None]
    return out


def frame_components(R, E):
    """``R(e_a, e_b, e_c, e_d)`` for frame columns ``E``."""
    out = np.asarray(R, dtype=float)
    E = np.asarray(E, dtype=float)
    n, k = E.shape[-2], E.shape[-1]
    for _ in range(4):
        # contract the leading tensor index and append the frame index last
        out = np.moveaxis(out, -4, -1)
        rest = out.shape[-4:-1]
        flat = out.reshape(out.shape[:-4] + (-1, n)) @ E
        out = flat.reshape(flat.shape[:-2] + rest + (k,))
    return out


@dataclass
class OrthonormalFrameData:
    """Orthonormal frame at a point with its curvature forms.

    ``frame[..., :, a]`` is ``e_{a+1}`` in chart coordinates and
    ``riemann_frame[..., a, b, c, d] = R(e_a, e_b, e_c, e_d)``.
    """

    point: np.ndarray
    frame: np.ndarray
    metric: np.ndarray
    riemann_frame: np.ndarray

    @property
    def dimension(self):
        return self.frame.shape[-1]

    @cached_property
    def coframe_matrix(self):
        return np.linalg.inv(self.frame)

    @property
    def coframe(self):
        return [AlternatingForm.coframe(self.dimension, i + 1) for i in range(self.dimension)]

    @cached_property
    def omega(self):
        return TwoFormMatrix.from_tensor(self.riemann_frame)

    @property
    def sectional(self):
        R = self.riemann_frame
        return np.einsum("...ijij->...ij", R)

    def orthonormality_defect(self):
        G = np.einsum("...ia,...ij,...jb->...ab", self.frame, self.metric, self.frame)
        return float(np.max(np.abs(G - np.eye(self.dimension))))

    def restrict(self, k):
        """Frame data for the first ``k`` frame vectors (curvature of the ambient)."""
        return OrthonormalFrameData(
            self.point, self.frame[..., :k], self.metric, self.riemann_frame[..., :k, :k, :k, :k]
        )


def orthonormal_frame(chart, p, order=None, frame=None, curvature=None):
    """Positively oriented orthonormal frame and its curvature data.

    By default Gram-Schmidt runs over the coordinate basis in index order
    (or in ``order``); the last vector is flipped if the result is
    negatively oriented. An explicit ``frame`` (columns) is used as given.
    """
    p = np.asarray(p, dtype=float)
    n = chart.dimension
    curv = curvature if curvature is not None else riemann(chart, p)
    g = curv.metric
    if frame is None:
        order = list(range(n)) if order is None else list(order)
        basis = np.broadcast_to(np.eye(n)[:, order], g.shape).copy()
        E = gram_schmidt(g, basis)
        flip = np.linalg.det(E) < 0
        E[..., :, -1] = np.where(flip[..., None], -E[..., :, -1], E[..., :, -1])
    else:
        E = np.broadcast_to(np.asarray(frame, dtype=float), g.shape).copy()
    data = OrthonormalFrameData(p, E, g, frame_components(curv.riemann_lowered, E))
    if data.orthonormality_defect() > tol.FRAME_ORTHONORMAL:
        raise ManifoldError("frame is not orthonormal")
    return data


# ---------------------------------------------------------------- nullity


@dataclass
class NullityResult:
    point: np.ndarray
    nullity_dim: int
    nullity_basis: np.ndarray
    singular_values: np.ndarray
    tolerance: float

    @property
    def gap(self):
        """Ratio of the smallest kept to the largest discarded singular value."""
        s = self.singular_values
        r = len(s) - self.nullity_dim
        if r == 0 or self.nullity_dim == 0:
            return math.inf
        lo = s[r]
        return math.inf if lo == 0 else float(s[r - 1] / lo)


def _curvature_operator_matrix(Rf):
    # rows (i<j, l), columns z:  <R(e_i, e_j) e_z, e_l> = Rf[i, j, l, z]
    n = Rf.shape[-1]
    rows = [Rf[..., i, j, :, :] for i in range(n) for j in range(i + 1, n)]
    return np.concatenate(rows, axis=-2) if rows else np.zeros(Rf.shape[:-4] + (0, n))


def nullity_space(chart, p, tol_rel=tol.NULLITY_REL):
    """Nullity space of the curvature tensor at a single point ``p``."""
    if not 0 < tol_rel < 1:
        raise ManifoldError("tolerance must lie in (0, 1)")
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ManifoldError("nullity_space takes a single point")
    fr = orthonormal_frame(chart, p)
    n = chart.dimension
    M = _curvature_operator_matrix(fr.riemann_frame)
    if M.shape[0] == 0:
        return NullityResult(p, n, fr.frame.copy(), np.zeros(n), tol_rel)
    _, s, vh = np.linalg.svd(M)
    s = np.concatenate([s, np.zeros(n - len(s))]) if len(s) < n else s
    if s[0] <= ZERO_TENSOR:
        dim = n
    else:
        dim = int(np.sum(s < tol_rel * s[0]))
    vh = np.concatenate([vh, np.zeros((n - vh.shape[0], n))]) if vh.shape[0] < n else vh
    null_frame = vh[n - dim :].T if dim else np.zeros((n, 0))
    if dim == n:
        null_frame = np.eye(n)
    basis = fr.frame @ null_frame
    return NullityResult(p, dim, basis, s, tol_rel)


def nullity_index_estimate(chart, points, tol_rel=tol.NULLITY_REL):
    """Pointwise minimum of ``dim N_p`` over sample points (a sampling estimate)."""
    return min(nullity_space(chart, p, tol_rel).nullity_dim for p in np.asarray(points))


def curvature_projection_residual(chart, p, samples=50, rng=None, tol_rel=tol.NULLITY_REL):
    """Max ``|R(X,Y,Z,W) - R(piX,piY,piZ,piW)|`` over random unit quadruples.

    ``pi`` projects onto the orthogonal complement of the nullity space.
    """
    rng = np.random.default_rng(rng)
    null = nullity_space(chart, p, tol_rel)
    fr = orthonormal_frame(chart, p)
    n = chart.dimension
    B = np.linalg.solve(fr.frame, null.nullity_basis)  # nullity basis in frame coords
    if null.nullity_dim == n:
        B = np.eye(n)
    P = np.eye(n) - B @ B.T
    Rf = fr.riemann_frame
    V = rng.normal(size=(samples, 4, n))
    V /= np.linalg.norm(V, axis=-1, keepdims=True)
    full = np.einsum("abcd,sa,sb,sc,sd->s", Rf, V[:, 0], V[:, 1], V[:, 2], V[:, 3])
    W = V @ P.T
    proj = np.einsum("abcd,sa,sb,sc,sd->s", Rf, W[:, 0], W[:, 1], W[:, 2], W[:, 3])
    return float(np.max(np.abs(full - proj)))


# ---------------------------------------------------------------- geodesics


def _geodesic_rhs(chart, x, v):
    gam = christoffel(chart, x)
    return v, -np.einsum("...kij,...i,...j->...k", gam, v, v)


def integrate_geodesic(chart, p, v, steps=1000, t=1.0):
    """Fixed-step classical RK4 for ``x'' = -Gamma(x', x')`` on ``[0, t]``."""
    if steps < 1:
        raise ManifoldError("steps must be >= 1")
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    shape = np.broadcast_shapes(p.shape, v.shape)
    x = np.broadcast_to(p, shape).copy()
    u = np.broadcast_to(v, shape).copy()
    if not np.all(np.isfinite(u)):
        raise ManifoldError("initial velocity must be finite")
    h = t / steps
    for _ in range(steps):
        try:
            k1x, k1v = _geodesic_rhs(chart, x, u)
            k2x, k2v = _geodesic_rhs(chart, x + 0.5 * h * k1x, u + 0.5 * h * k1v)
            k3x, k3v = _geodesic_rhs(chart, x + 0.5 * h * k2x, u + 0.5 * h * k2v)
            k4x, k4v = _geodesic_rhs(chart, x + h * k3x, u + h * k3v)
        except DomainError as exc:
            raise DomainError(f"geodesic left the chart domain: {exc}") from exc
        x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        u = u + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    chart.check_domain(x)
    return x


def exp_map(chart, p, v, steps=1000, closed_form=True):
    """Riemannian exponential ``exp_p(v)`` in chart coordinates."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ManifoldError("tangent vector must be finite")
    if closed_form and chart.exp_closed is not None:
        comps_p = [p[..., i] for i in range(chart.dimension)]
        comps_v = [v[..., i] for i in range(chart.dimension)]
        out = chart.exp_closed(comps_p, comps_v)
        if out is not None:
            shape = np.broadcast_shapes(p.shape, v.shape)
            x = np.stack([np.broadcast_to(np.asarray(c, dtype=float), shape[:-1]) for c in out], axis=-1)
            return chart.check_domain(x)
    return integrate_geodesic(chart, p, v, steps)


def geodesic_distance_closed(chart, p, q):
    """Closed-form distance for the hyperbolic models (used as a check)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if chart.model_tag == "euclidean":
        return np.linalg.norm(p - q, axis=-1)
    if chart.model_tag == "half_space":
        num = np.sum((p - q) ** 2, axis=-1)
        return np.arccosh(1 + num / (2 * p[..., -1] * q[..., -1]))
    raise ManifoldError(f"no closed-form distance for {chart.name}")
