"""Central-difference derivatives with one Richardson level.

Fallback for black-box functions that cannot be evaluated on duals. The
first-derivative step is ``cbrt(eps) * max(1, |x|)``; second derivatives use
the larger step ``eps**(1/6) * max(1, |x|)`` because their roundoff grows like
``eps / h**2``.
"""

import numpy as np

from . import dual

EPS = np.finfo(float).eps
STEP1 = EPS ** (1.0 / 3.0)
STEP2 = EPS ** (1.0 / 6.0)


def _eval(f, x):
    (v,) = dual.jet(f, x, order=0)
    return v


def _shift(x, k, h):
    y = x.copy()
    y[..., k] += h
    return y


def _expand(h, v):
    return h.reshape(h.shape + (1,) * (v.ndim - h.ndim))


def _stencil(x, order, scale):
    """Shifted copies of ``x`` needed for the requested order, keyed by offset."""
    m = x.shape[-1]
    pts = {(): x}
    if order >= 1:
        for k in range(m):
            for h in (STEP1, STEP1 / 2):
                for sg in (1, -1):
                    pts[((k, sg * h),)] = _shift(x, k, sg * h * scale[..., k])
    if order >= 2:
        for k in range(m):
            for l in range(k, m):
                for h in (STEP2, STEP2 / 2):
                    for sk in (1, -1):
                        if k == l:
                            pts[((k, sk * h),)] = _shift(x, k, sk * h * scale[..., k])
                            continue
                        for sl in (1, -1):
                            y = _shift(_shift(x, k, sk * h * scale[..., k]), l, sl * h * scale[..., l])
                            pts[((k, sk * h), (l, sl * h))] = y
    return pts


def central_jet(f, x, order=2):
    """Same contract as :func:`cgbkit.dual.jet`, by finite differences.

    All stencil points are evaluated in a single batched call of ``f``.
    """
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    scale = np.maximum(1.0, np.abs(x))
    pts = _stencil(x, order, scale)
    keys = list(pts)
    values = _eval(f, np.stack([pts[k] for k in keys]))
    val = dict(zip(keys, values))
    f0 = val[()]
    if order == 0:
        return (f0,)

    def d1(k, h):
        hk = h * scale[..., k]
        return (val[((k, h),)] - val[((k, -h),)]) / (2 * _expand(hk, f0))

    grad = np.stack(
        [(4 * d1(k, STEP1 / 2) - d1(k, STEP1)) / 3 for k in range(m)], axis=-1
    )
    if order == 1:
        return f0, grad

    def d2(k, l, h):
        hk = h * scale[..., k]
        hl = h * scale[..., l]
        if k == l:
            num = val[((k, h),)] - 2 * f0 + val[((k, -h),)]
            return num / _expand(hk * hk, f0)
        pp = val[((k, h), (l, h))]
        pm = val[((k, h), (l, -h))]
        mp = val[((k, -h), (l, h))]
        mm = val[((k, -h), (l, -h))]
        return (pp - pm - mp + mm) / _expand(4 * hk * hl, f0)

    hess = np.empty(f0.shape + (m, m))
    for k in range(m):
        for l in range(k, m):
            h = (4 * d2(k, l, STEP2 / 2) - d2(k, l, STEP2)) / 3
            hess[..., k, l] = h
            hess[..., l, k] = h
    return f0, grad, hess


def derivatives(f, x, order=2, mode="dual_number"):
    if mode == "dual_number":
        return dual.jet(f, x, order)
    if mode == "central_difference":
        return central_jet(f, x, order)
    raise ValueError(f"unknown differentiation mode {mode!r}")
