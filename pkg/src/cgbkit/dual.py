"""Tagged, nestable dual numbers over numpy arrays.

A :class:`Dual` is ``re + du*eps`` where ``eps**2 = 0``. Components may be
floats, numpy arrays (so a single evaluation is vectorized over a batch of
points) or other duals with an older tag, which gives higher derivatives by
nesting. Tags keep perturbations from different nesting levels apart: the
dual with the larger tag is always the outer one.

The math functions in this module (``sin``, ``exp``, ...) accept plain
numbers, arrays and duals alike, so metric and parametrization functions
written against them can be differentiated without change.
"""

import itertools

import numpy as np

_tags = itertools.count(1)


def new_tag():
    return next(_tags)


def _is_zero(x):
    return type(x) in (int, float) and x == 0


class Dual:
    __slots__ = ("re", "du", "tag")
    __array_ufunc__ = None

    def __init__(self, re, du, tag):
        self.re = re
        self.du = du
        self.tag = tag

    def __repr__(self):
        return f"Dual({self.re!r}, {self.du!r}, tag={self.tag})"

    def __neg__(self):
        return Dual(-self.re, -self.du, self.tag)

    def __pos__(self):
        return self

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(other, -self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __pow__(self, p):
        if isinstance(p, Dual):
            return exp(p * log(self))
        if isinstance(p, int) and p >= 0:
            return _ipow(self, p)
        r = self.re
        return Dual(r**p, mul(p * r ** (p - 1), self.du), self.tag)


def _top(a, b):
    ta = a.tag if isinstance(a, Dual) else 0
    tb = b.tag if isinstance(b, Dual) else 0
    return max(ta, tb)


def split(x, tag):
    """Return ``(re, du)`` of ``x`` with respect to perturbation ``tag``."""
    if isinstance(x, Dual) and x.tag == tag:
        return x.re, x.du
    return x, 0.0


def neg(x):
    return -x


def add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    t = _top(a, b)
    if t == 0:
        return a + b
    ar, ad = split(a, t)
    br, bd = split(b, t)
    return Dual(add(ar, br), add(ad, bd), t)


def mul(a, b):
    if _is_zero(a) or _is_zero(b):
        return 0.0
    t = _top(a, b)
    if t == 0:
        return a * b
    ar, ad = split(a, t)
    br, bd = split(b, t)
    return Dual(mul(ar, br), add(mul(ar, bd), mul(ad, br)), t)


def div(a, b):
    if _is_zero(a):
        return 0.0
    t = _top(a, b)
    if t == 0:
        return a / b
    ar, ad = split(a, t)
    br, bd = split(b, t)
    q = div(ar, br)
    return Dual(q, div(add(ad, neg(mul(q, bd))), br), t)


def _ipow(x, p):
    out = 1.0
    base = x
    while p:
        if p & 1:
            out = mul(out, base)
        p >>= 1
        if p:
            base = mul(base, base)
    return out


def _unary(f, df):
    # df(re, f(re)) gives the derivative evaluated on the real part.
    def g(x):
        if not isinstance(x, Dual):
            return f(x)
        fr = g(x.re)
        return Dual(fr, mul(df(x.re, fr), x.du), x.tag)

    return g


sin = _unary(np.sin, lambda r, fr: cos(r))
cos = _unary(np.cos, lambda r, fr: -sin(r))
exp = _unary(np.exp, lambda r, fr: fr)
log = _unary(np.log, lambda r, fr: div(1.0, r))
sqrt = _unary(np.sqrt, lambda r, fr: div(0.5, fr))
sinh = _unary(np.sinh, lambda r, fr: cosh(r))
cosh = _unary(np.cosh, lambda r, fr: sinh(r))
tanh = _unary(np.tanh, lambda r, fr: add(1.0, neg(mul(fr, fr))))
arctanh = _unary(np.arctanh, lambda r, fr: div(1.0, add(1.0, neg(mul(r, r)))))
arctan = _unary(np.arctan, lambda r, fr: div(1.0, add(1.0, mul(r, r))))


def value(x):
    """Innermost real part of a (possibly nested) dual."""
    while isinstance(x, Dual):
        x = x.re
    return x


def _as_array(x, shape):
    return np.broadcast_to(np.asarray(value(x), dtype=float), shape)


def _tree_map(f, tree):
    if isinstance(tree, (list, tuple)):
        return [_tree_map(f, t) for t in tree]
    return f(tree)


def _to_array(tree, batch):
    arr = np.array(_tree_map(lambda t: _as_array(t, batch), tree), dtype=float)
    nout = arr.ndim - len(batch)
    return np.moveaxis(arr, list(range(nout)), list(range(len(batch), arr.ndim)))


def jet(f, x, order=2):
    """Value and derivatives of ``f`` at ``x`` by nested dual evaluation.

    Parameters
    ----------
    f : callable
        Takes a list of ``m`` coordinates and returns a scalar or a nested
        list of scalars (e.g. a metric matrix).
    x : array_like, shape (..., m)
        Evaluation points; leading axes are a batch.
    order : {0, 1, 2}

    Returns
    -------
    tuple of arrays
        ``value`` with shape ``(...,) + out``, then for ``order >= 1`` the
        gradient ``(...,) + out + (m,)`` and for ``order == 2`` the Hessian
        ``(...,) + out + (m, m)``.
    """
    x = np.asarray(x, dtype=float)
    batch, m = x.shape[:-1], x.shape[-1]
    comps = [x[..., i] for i in range(m)]
    if order == 0:
        return (_to_array(f(comps), batch),)
    if order == 1:
        grads = []
        val = None
        for k in range(m):
            t = new_tag()
            y = f([Dual(c, 1.0, t) if i == k else c for i, c in enumerate(comps)])
            if val is None:
                val = _to_array(_tree_map(lambda z: split(z, t)[0], y), batch)
            grads.append(_to_array(_tree_map(lambda z: split(z, t)[1], y), batch))
        return val, np.stack(grads, axis=-1)
    if order != 2:
        raise ValueError("order must be 0, 1 or 2")
    val = None
    grads = [None] * m
    hess = [[None] * m for _ in range(m)]
    for k in range(m):
        for l in range(k, m):
            ta = new_tag()
            tb = new_tag()
            args = []
            for i, c in enumerate(comps):
                inner = Dual(c, 1.0, ta) if i == l else c
                args.append(Dual(inner, 1.0, tb) if i == k else inner)
            y = f(args)
            low = _tree_map(lambda z: split(z, tb)[0], y)
            high = _tree_map(lambda z: split(z, tb)[1], y)
            if val is None:
                val = _to_array(_tree_map(lambda z: split(z, ta)[0], low), batch)
            if grads[l] is None:
                grads[l] = _to_array(_tree_map(lambda z: split(z, ta)[1], low), batch)
            if grads[k] is None:
                grads[k] = _to_array(_tree_map(lambda z: split(z, ta)[0], high), batch)
            h = _to_array(_tree_map(lambda z: split(z, ta)[1], high), batch)
            hess[k][l] = h
            hess[l][k] = h
    g = np.stack(grads, axis=-1)
    H = np.stack([np.stack(row, axis=-1) for row in hess], axis=-2)
    return val, g, H


def partials(f, comps):
    """First partials of ``f`` at ``comps``, which may themselves be duals.

    Used inside functions that are being differentiated, e.g. a pullback
    metric needs the Jacobian of a parametrization. Returns the value tree
    and a list with one derivative tree per coordinate.
    """
    val = None
    out = []
    for k in range(len(comps)):
        t = new_tag()
        y = f([Dual(c, 1.0, t) if i == k else c for i, c in enumerate(comps)])
        if val is None:
            val = _tree_map(lambda z: split(z, t)[0], y)
        out.append(_tree_map(lambda z: split(z, t)[1], y))
    return val, out
