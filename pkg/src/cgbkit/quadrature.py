"""Product quadrature on hyperspherical angle boxes and radial intervals.

Angles on S^m are ``(phi_1, ..., phi_m)`` with colatitudes
``phi_1..phi_{m-1}`` in ``(0, pi)`` and the azimuth ``phi_m`` periodic on
``[0, 2 pi)``. The unit vector is

    u_1 = cos phi_1
    u_2 = sin phi_1 cos phi_2
    ...
    u_m = sin phi_1 ... sin phi_{m-1} cos phi_m
    u_{m+1} = sin phi_1 ... sin phi_{m-1} sin phi_m

and the surface element is ``prod_j sin(phi_j)^(m-j) dphi``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import dual as dm
from . import tolerances as tol

DEFAULT_ORDERS = {1: 24, 2: 24, 3: 24, 4: 16, 5: 16, 6: 12}


class QuadratureError(ValueError):
    pass


def sphere_volume(m):
    """``|S^m|``, the volume of the unit m-sphere in R^(m+1)."""
    return 2 * math.pi ** ((m + 1) / 2) / math.gamma((m + 1) / 2)


def ball_volume(m):
    """``|B^m|``, the volume of the unit ball in R^m."""
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


def unit_vector(phi):
    """Hyperspherical angles to a unit vector; dual-number friendly."""
    m = len(phi)
    out = []
    prod = 1.0
    for j in range(m):
        out.append(dm.mul(prod, dm.cos(phi[j])))
        prod = dm.mul(prod, dm.sin(phi[j]))
    out.append(prod)
    return out


def angles_of(u):
    """Inverse of :func:`unit_vector` for plain arrays, shape (..., m+1)."""
    u = np.asarray(u, dtype=float)
    m = u.shape[-1] - 1
    phi = np.empty(u.shape[:-1] + (m,))
    for j in range(m - 1):
        tail = np.linalg.norm(u[..., j:], axis=-1)
        phi[..., j] = np.arccos(np.clip(u[..., j] / np.where(tail > 0, tail, 1.0), -1, 1))
    phi[..., m - 1] = np.mod(np.arctan2(u[..., m], u[..., m - 1]), 2 * np.pi)
    return phi


def jacobian_factor(phi):
    phi = np.asarray(phi, dtype=float)
    m = phi.shape[-1]
    out = np.ones(phi.shape[:-1])
    for j in range(m - 1):
        out = out * np.sin(phi[..., j]) ** (m - 1 - j)
    return out


@dataclass(frozen=True)
class QuadratureGrid:
    """Product rule on the angle box of S^m.

    ``weights`` include the hyperspherical Jacobian and integrate functions
    on the unit sphere; ``raw_weights`` are the plain coordinate weights,
    for integrands that already carry their own area element.
    """

    m: int
    order: int
    nodes: np.ndarray
    weights: np.ndarray
    raw_weights: np.ndarray
    periodic: tuple

    def __len__(self):
        return len(self.weights)


def gauss_legendre(order, a, b):
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1), half * w


def sphere_grid(m, order):
    """Gauss-Legendre in each colatitude, trapezoid in the azimuth."""
    if not 1 <= m <= tol.MAX_SPHERE_DIM:
        raise QuadratureError(f"sphere dimension {m} outside 1..{tol.MAX_SPHERE_DIM}")
    if order < 4:
        raise QuadratureError(f"order must be >= 4, got {order}")
    axes = []
    raw = []
    for _ in range(m - 1):
        x, w = gauss_legendre(order, 0.0, math.pi)
        axes.append(x)
        raw.append(w)
    az = 2 * math.pi * np.arange(order) / order
    axes.append(az)
    raw.append(np.full(order, 2 * math.pi / order))
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([a.reshape(-1) for a in mesh], axis=-1)
    wmesh = np.meshgrid(*raw, indexing="ij")
    raw_w = np.prod(np.stack([w.reshape(-1) for w in wmesh], axis=-1), axis=-1)
    weights = raw_w * jacobian_factor(nodes)
    return QuadratureGrid(m, order, nodes, weights, raw_w, (False,) * (m - 1) + (True,))


def default_order(m):
    return DEFAULT_ORDERS[m]


def grid_pair(m, order=None):
    """Coarse and fine grids for order-doubling error estimates.

    ``order`` is the fine order; the coarse grid uses half as many points
    per angle.
    """
    fine = default_order(m) if order is None else order
    if fine < 8 or fine % 2:
        raise QuadratureError("fine order must be even and >= 8")
    return sphere_grid(m, fine // 2), sphere_grid(m, fine)


def pairwise_sum(values):
    """Deterministic pairwise summation along the first axis."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] == 0:
        return np.zeros(v.shape[1:])
    while v.shape[0] > 1:
        if v.shape[0] % 2:
            v = np.concatenate([v, np.zeros((1,) + v.shape[1:])])
        v = v[0::2] + v[1::2]
    return v[0]


def _weighted_sum(values, grid, measure):
    values = np.asarray(values, dtype=float)
    if values.shape[0] != len(grid):
        raise QuadratureError("integrand must give one value per node")
    bad = ~np.isfinite(values)
    if np.any(bad):
        i = int(np.argmax(bad.reshape(len(grid), -1).any(axis=-1)))
        raise QuadratureError(f"non-finite integrand at node {grid.nodes[i].tolist()}")
    w = grid.weights if measure == "sphere" else grid.raw_weights
    return float(pairwise_sum(values * w.reshape((-1,) + (1,) * (values.ndim - 1))))


def integrate(f, grid, grid_doubled, measure="sphere"):
    """Integrate ``f`` (called on a node array) on two grids.

    Returns ``(value, error_estimate)`` with the value from the finer grid
    and the estimate ``|fine - coarse|``. ``measure="coordinate"`` uses the
    raw coordinate weights, for integrands that include an area element.
    """
    if measure not in ("sphere", "coordinate"):
        raise QuadratureError(f"unknown measure {measure!r}")
    coarse, fine = sorted([grid, grid_doubled], key=len)
    vc = _weighted_sum(f(coarse.nodes), coarse, measure)
    vf = _weighted_sum(f(fine.nodes), fine, measure)
    return vf, abs(vf - vc)


def radial_nodes(R, order):
    return gauss_legendre(order, 0.0, float(R))


def radial_integrate(g, R, order=32):
    """Gauss-Legendre integral of ``g`` over ``(0, R)``.

    ``g`` is called once with the array of radial nodes.
    """
    if R <= 0:
        raise QuadratureError("radius must be positive")
    r, w = radial_nodes(R, order)
    vals = np.asarray(g(r), dtype=float)
    if vals.shape != r.shape:
        raise QuadratureError("radial integrand must return one value per node")
    return float(pairwise_sum(vals * w))
