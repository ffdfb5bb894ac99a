"""Closed hypersurfaces parametrized over hyperspherical angles.

A hypersurface is described by a *sweep* ``(angles, s) -> point`` with
``s = 1`` on the surface itself and ``0 < s < 1`` sweeping the enclosed
body. Radial graphs ``exp_c(s * rho(u) * u)`` cover geodesic spheres and
their perturbations.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import dual as dm
from . import numdiff
from . import tolerances as tol
from .forms import AlternatingForm
from .manifold import (
    ManifoldChart,
    ManifoldError,
    OrthonormalFrameData,
    christoffel_from,
    frame_components,
    gram_schmidt,
    integrate_geodesic,
    riemann,
    riemann_from,
)
from .quadrature import sphere_grid, unit_vector


class HypersurfaceError(ValueError):
    pass


class DegenerateParametrizationError(HypersurfaceError):
    pass


class ConvexityError(HypersurfaceError):
    def __init__(self, message, point=None, min_curvature=None):
        super().__init__(message)
        self.point = point
        self.min_curvature = min_curvature


class FrameMatchError(HypersurfaceError):
    pass


@dataclass(frozen=True)
class HypersurfaceEmbedding:
    ambient: ManifoldChart
    sweep: Callable
    center: Optional[tuple] = None
    param_jacobian_mode: str = "dual_number"
    name: str = "surface"
    radius: Optional[float] = None

    @property
    def dimension(self):
        return self.ambient.dimension - 1

    def param(self, u):
        return self.sweep(list(u), 1.0)

    def points(self, U, scale=1.0):
        U = np.asarray(U, dtype=float)
        comps = [U[..., i] for i in range(U.shape[-1])]
        out = self.sweep(comps, scale)
        return np.stack([np.broadcast_to(np.asarray(dm.value(c), dtype=float), U.shape[:-1]) for c in out], axis=-1)

    def jets(self, U, order=2):
        return numdiff.derivatives(self.param, U, order, self.param_jacobian_mode)


def _center_frame(ambient, center):
    g = ambient.metric_at(np.asarray(center, dtype=float))
    E = gram_schmidt(g, np.eye(ambient.dimension))
    if np.linalg.det(E) < 0:
        E[:, -1] *= -1
    return E


def radial_graph(ambient, rho, center=None, name="radial graph", radius=None, steps=400):
    """Surface ``u -> exp_center(rho(u) * u)`` over the unit directions.

    ``rho`` takes the unit vector (list of components) and must be written
    with :mod:`cgbkit.dual` functions. In a geodesic polar chart the center
    is the pole and the surface is ``r = rho(u)`` directly.
    """
    n = ambient.dimension
    if ambient.model_tag == "hyperbolic_polar":

        def sweep(u, s):
            return [dm.mul(s, rho(unit_vector(u)))] + list(u)

        return HypersurfaceEmbedding(ambient, sweep, None, "dual_number", name, radius)

    if center is None:
        if ambient.origin is None:
            raise HypersurfaceError("a center point is required for this chart")
        center = ambient.origin
    center = tuple(float(c) for c in center)
    E = _center_frame(ambient, center)
    # a generic direction: some charts only have closed forms for special ones
    probe = ambient.exp_closed(list(center), [1e-3] * n) if ambient.exp_closed else None
    closed = probe is not None

    def tangent(u, s):
        w = unit_vector(u)
        scale = dm.mul(s, rho(w))
        return [
            dm.mul(scale, sum_terms([dm.mul(E[i, j], w[j]) for j in range(n) if E[i, j] != 0.0]))
            for i in range(n)
        ]

    if closed:

        def sweep(u, s):
            return ambient.exp_closed(list(center), tangent(u, s))

        mode = "dual_number"
    else:

        def sweep(u, s):
            v = tangent(u, s)
            shape = np.broadcast_shapes(*[np.shape(dm.value(c)) for c in v])
            V = np.stack([np.broadcast_to(np.asarray(c, dtype=float), shape) for c in v], axis=-1)
            X = integrate_geodesic(ambient, np.asarray(center), V, steps)
            return [X[..., i] for i in range(n)]

        mode = "central_difference"
    return HypersurfaceEmbedding(ambient, sweep, center, mode, name, radius)


def sum_terms(terms):
    out = 0.0
    for t in terms:
        out = dm.add(out, t)
    return out


def geodesic_sphere(ambient, r, center=None):
    if r <= 0:
        raise HypersurfaceError("radius must be positive")
    r = float(r)
    return radial_graph(ambient, lambda w: r, center, name=f"geodesic sphere r={r:g}", radius=r)


def harmonic(mode, n):
    """Low-order spherical harmonics on S^(n-1), as functions of ``u``."""
    if mode == "degree1":
        return lambda w: w[0]
    if mode == "zonal2":
        return lambda w: dm.add(dm.mul(w[0], w[0]), -1.0 / n)
    if mode == "zonal3":
        return lambda w: dm.add(dm.mul(w[0], dm.mul(w[0], w[0])), dm.mul(-3.0 / (n + 2), w[0]))
    if mode == "sectoral2":
        return lambda w: dm.mul(w[0], w[1])
    raise HypersurfaceError(f"unknown perturbation mode {mode!r}")


PERTURBATION_MODES = ("degree1", "zonal2", "zonal3", "sectoral2")


def perturbed_sphere(base, amplitude, mode="zonal2", check_order=16):
    """Radial perturbation ``r + amplitude * h(u)`` of a geodesic sphere.

    Convexity is checked on a quadrature grid; a violation raises
    :class:`ConvexityError` with the offending parameter point.
    """
    if base.radius is None:
        raise HypersurfaceError("base must be a geodesic sphere")
    r = base.radius
    h = harmonic(mode, base.ambient.dimension)
    eps = float(amplitude)

    def rho(w):
        return dm.add(r, dm.mul(eps, h(w)))

    emb = radial_graph(
        base.ambient, rho, base.center, name=f"perturbed sphere r={r:g} eps={eps:g} {mode}"
    )
    if eps != 0.0:
        check_convexity(emb, check_order)
    return emb


def ellipsoid(axes):
    """Euclidean ellipsoid with the given semi-axes, as a radial graph."""
    from .manifold import euclidean

    axes = [float(a) for a in axes]
    inv2 = [1.0 / (a * a) for a in axes]

    def rho(w):
        return dm.div(1.0, dm.sqrt(sum_terms([dm.mul(c, dm.mul(x, x)) for c, x in zip(inv2, w)])))

    return radial_graph(euclidean(len(axes)), rho, name=f"ellipsoid {axes}")


def check_convexity(emb, order=16, tolerance=tol.CONVEX):
    grid = sphere_grid(emb.dimension, order)
    sd = shape_at(emb, grid.nodes)
    kmin = sd.principal_curvatures.min(axis=-1)
    i = int(np.argmin(kmin))
    if kmin[i] < -tolerance:
        raise ConvexityError(
            f"{emb.name} is not convex: min principal curvature {kmin[i]:.3e} at {grid.nodes[i].tolist()}",
            point=grid.nodes[i],
            min_curvature=float(kmin[i]),
        )
    return float(kmin[i])


# ---------------------------------------------------------------- shape


@dataclass
class ShapeData:
    """Extrinsic geometry at parameter points (leading axes are a batch).

    ``principal_frame[..., :, a]`` is the ambient-coordinate principal
    direction for ``principal_curvatures[..., a]`` (descending);
    ``principal_param`` holds the same directions in parameter coordinates.
    """

    params: np.ndarray
    point: np.ndarray
    normal: np.ndarray
    shape_operator: np.ndarray
    principal_curvatures: np.ndarray
    principal_frame: np.ndarray
    principal_param: np.ndarray
    gauss_kronecker: np.ndarray
    symmetry_defect: np.ndarray
    metric: np.ndarray
    induced_metric: np.ndarray
    normal_unit_defect: np.ndarray
    normal_orthogonality_defect: np.ndarray
    jets: tuple = ()

    @property
    def alpha(self):
        """Shape-operator 1-forms ``alpha_i = kappa_i theta_i`` in the principal coframe."""
        m = self.principal_curvatures.shape[-1]
        eye = np.eye(m)
        return [
            AlternatingForm.one_form(self.principal_curvatures[..., i, None] * eye[i]) for i in range(m)
        ]

    def is_convex(self, tolerance=tol.CONVEX):
        return bool(np.all(self.principal_curvatures >= -tolerance))

    @cached_property
    def ambient_frame(self):
        """``(e_1, ..., e_{n-1}, nu)`` in chart coordinates."""
        return np.concatenate([self.principal_frame, self.normal[..., None]], axis=-1)


def _outward_radial(emb, U):
    m = U.shape[-1]
    t = dm.new_tag()
    comps = [U[..., i] for i in range(m)]
    out = emb.sweep(comps, dm.Dual(1.0, 1.0, t)) if emb.param_jacobian_mode == "dual_number" else None
    if out is None:
        h = 1e-6
        return (emb.points(U, 1 + h) - emb.points(U, 1 - h)) / (2 * h)
    return np.stack(
        [np.broadcast_to(np.asarray(dm.split(c, t)[1], dtype=float), U.shape[:-1]) for c in out], axis=-1
    )


def shape_at(emb, U, with_second=True):
    """Normal, shape operator and principal data at parameter points ``U``."""
    U = np.asarray(U, dtype=float)
    X, J, H2 = emb.jets(U, order=2)
    amb = emb.ambient
    order = 2 if with_second else 1
    mj = amb.jets(X, order=order)
    g, dg = mj[0], mj[1]
    gG = np.einsum("...ia,...ij,...jb->...ab", J, g, J)
    try:
        L = np.linalg.cholesky(gG)
    except np.linalg.LinAlgError as exc:
        raise DegenerateParametrizationError(f"{emb.name}: pullback metric is degenerate") from exc

    _, _, vh = np.linalg.svd(np.swapaxes(J, -1, -2))
    w = vh[..., -1, :]
    ginv = np.linalg.inv(g)
    nu = np.einsum("...ij,...j->...i", ginv, w)
    nu = nu / np.sqrt(np.einsum("...i,...i->...", w, nu))[..., None]
    radial = _outward_radial(emb, U)
    sgn = np.sign(np.einsum("...i,...ij,...j->...", nu, g, radial))
    sgn = np.where(sgn == 0, 1.0, sgn)
    nu = nu * sgn[..., None]

    gam = christoffel_from(g, dg)
    # h_ab = <nabla_{T_b} nu, T_a>
    dgTb = np.einsum("...ijk,...kb->...ijb", dg, J)
    h = -np.einsum("...ijb,...i,...ja->...ab", dgTb, nu, J)
    h -= np.einsum("...ij,...i,...jab->...ab", g, nu, H2)
    gam_b_nu = np.einsum("...ikl,...kb,...l->...ib", gam, J, nu)
    h += np.einsum("...ij,...ib,...ja->...ab", g, gam_b_nu, J)
    defect = np.max(np.abs(h - np.swapaxes(h, -1, -2)), axis=(-1, -2))
    hs = 0.5 * (h + np.swapaxes(h, -1, -2))

    Linv = np.linalg.inv(L)
    S = np.einsum("...ai,...ij,...bj->...ab", Linv, hs, Linv)
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    kap, Y = np.linalg.eigh(S)
    kap = kap[..., ::-1]
    Y = Y[..., ::-1]
    V = np.einsum("...ia,...ib->...ab", Linv, Y)  # L^{-T} Y
    P = np.einsum("...ia,...ab->...ib", J, V)
    E = np.concatenate([P, nu[..., None]], axis=-1)
    flip = np.linalg.det(E) < 0
    V[..., :, -1] = np.where(flip[..., None], -V[..., :, -1], V[..., :, -1])
    P[..., :, -1] = np.where(flip[..., None], -P[..., :, -1], P[..., :, -1])

    unit = np.abs(np.einsum("...i,...ij,...j->...", nu, g, nu) - 1.0)
    orth = np.max(np.abs(np.einsum("...i,...ij,...ja->...a", nu, g, J)), axis=-1)
    return ShapeData(
        params=U,
        point=X,
        normal=nu,
        shape_operator=S,
        principal_curvatures=kap,
        principal_frame=P,
        principal_param=V,
        gauss_kronecker=np.prod(kap, axis=-1),
        symmetry_defect=defect,
        metric=g,
        induced_metric=gG,
        normal_unit_defect=unit,
        normal_orthogonality_defect=orth,
        jets=tuple(mj),
    )


def ambient_frame_along(shape, frame=None):
    """Ambient curvature data in the frame ``(e_1..e_{n-1}, nu)``.

    ``frame`` optionally replaces the principal tangent vectors by another
    orthonormal tangent frame (columns, ambient coordinates).
    """
    if len(shape.jets) < 3:
        raise HypersurfaceError("shape data was computed without second metric derivatives")
    g, dg, d2g = shape.jets
    R = riemann_from(g, dg, d2g)
    if frame is None:
        E = shape.ambient_frame
    else:
        E = np.concatenate([np.asarray(frame, dtype=float), shape.normal[..., None]], axis=-1)
    return OrthonormalFrameData(shape.point, E, g, frame_components(R, E))


def induced_chart(emb):
    """The hypersurface as a Riemannian manifold in its own angle chart."""
    m = emb.dimension
    amb = emb.ambient

    if emb.param_jacobian_mode == "dual_number":

        def metric(u):
            x, cols = dm.partials(emb.param, list(u))
            G = amb.metric(x)
            return _pullback(G, cols, m)

    else:

        def metric(u):
            U = np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in u]), axis=-1)
            x, J = numdiff.central_jet(emb.param, U, order=1)
            G = amb.metric([x[..., i] for i in range(amb.dimension)])
            cols = [[J[..., i, a] for i in range(amb.dimension)] for a in range(m)]
            return _pullback(G, cols, m)

    def domain(x):
        if m == 1:
            return np.ones(x.shape[:-1], dtype=bool)
        return np.all((x[..., : m - 1] > 0) & (x[..., : m - 1] < np.pi), axis=-1)

    return ManifoldChart(
        m,
        metric,
        derivative_mode=emb.param_jacobian_mode,
        model_tag="custom",
        name=f"induced({emb.name})",
        domain=domain,
    )


def _pullback(G, cols, m):
    n = len(G)
    g = [[None] * m for _ in range(m)]
    for a in range(m):
        Ga = [sum_terms([dm.mul(G[i][j], cols[a][j]) for j in range(n) if not _zero(G[i][j])]) for i in range(n)]
        for b in range(a, m):
            e = sum_terms([dm.mul(Ga[i], cols[b][i]) for i in range(n)])
            g[a][b] = e
            g[b][a] = e
    return g


def _zero(x):
    return type(x) in (int, float) and x == 0


def area_element(emb, U):
    """``sqrt(det)`` of the pullback metric in angle coordinates."""
    U = np.asarray(U, dtype=float)
    X, J = emb.jets(U, order=1)
    g = emb.ambient.metric_at(X)
    gG = np.einsum("...ia,...ij,...jb->...ab", J, g, J)
    det = np.linalg.det(gG)
    if np.any(det <= 0):
        raise DegenerateParametrizationError(f"{emb.name}: degenerate area element")
    return np.sqrt(det)


def intrinsic_frame(emb, U, frame_param=None):
    """Orthonormal frame data of the induced metric at ``U``.

    ``frame_param`` (columns in angle coordinates) overrides Gram-Schmidt.
    """
    from .manifold import orthonormal_frame

    chart = induced_chart(emb)
    return orthonormal_frame(chart, U, frame=frame_param)


def gauss_form_residual(emb, U, shape=None):
    """Coefficientwise defect of ``Omega^G_ij = Omega_ij + k_i k_j th_i^th_j``.

    Both sides are expressed in the principal frame; returns the maximum
    defect per point.
    """
    U = np.asarray(U, dtype=float)
    sd = shape if shape is not None else shape_at(emb, U)
    chart = induced_chart(emb)
    curv = riemann(chart, U)
    V = sd.principal_param
    match = np.einsum("...ia,...ij,...jb->...ab", V, curv.metric, V) - np.eye(emb.dimension)
    if np.max(np.abs(match)) > tol.FRAME_MATCH:
        raise FrameMatchError(
            f"principal frame is not orthonormal for the induced metric (defect {np.max(np.abs(match)):.2e})"
        )
    intrinsic = frame_components(curv.riemann_lowered, V)
    amb = ambient_frame_along(sd)
    m = emb.dimension
    ext = amb.riemann_frame[..., :m, :m, :m, :m].copy()
    k = sd.principal_curvatures
    eye = np.eye(m)
    kk = k[..., :, None] * k[..., None, :]
    # Omega_ij(e_c, e_d) gains k_i k_j (delta_ci delta_dj - delta_cj delta_di)
    ext += np.einsum("...ij,ci,dj->...cdij", kk, eye, eye) - np.einsum("...ij,cj,di->...cdij", kk, eye, eye)
    diff = np.abs(intrinsic - ext)
    return np.max(diff.reshape(diff.shape[:-4] + (-1,)), axis=-1)
