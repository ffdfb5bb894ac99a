"""Exterior algebra on a fixed coframe.

Forms are stored sparsely: a multi-index ``i_1 < ... < i_p`` over
``{1..d}`` is encoded as a bitmask and maps to its coefficient. Coefficients
are floats or numpy arrays of a common shape; with arrays every operation is
carried out for a whole batch of points at once.

The Pfaffian of a skew matrix of 2-forms is available in three equivalent
forms: the literal signed sum over permutations, a sum over perfect
matchings, and a dynamic program over subsets of already-paired indices.
"""

import itertools
import math
from functools import lru_cache

import numpy as np

from . import tolerances as tol

MAX_DIM = 64


class FormError(ValueError):
    pass


def _bits(mask):
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _mask(indices):
    m = 0
    for i in indices:
        m |= 1 << i
    return m


@lru_cache(maxsize=None)
def _merge_sign(a, b):
    # sign of moving the sorted bits of b past those of a
    inv = 0
    for j in _bits(b):
        inv += bin(a >> (j + 1)).count("1")
    return -1.0 if inv & 1 else 1.0


def _negligible(c):
    if isinstance(c, np.ndarray):
        return bool(np.all(np.abs(c) < tol.UNDERFLOW))
    return abs(c) < tol.UNDERFLOW


def _perm_sign(seq):
    inv = sum(1 for a, b in itertools.combinations(seq, 2) if a > b)
    return -1.0 if inv & 1 else 1.0


class AlternatingForm:
    """Grade-``p`` form over a ``d``-dimensional space.

    ``coeffs`` maps bitmasks (bit ``i`` set means ``theta_{i+1}`` present)
    to coefficients. Use :meth:`from_indices` for 1-based index tuples.
    """

    __slots__ = ("dimension", "grade", "_coeffs")

    def __init__(self, dimension, grade, coeffs=None):
        if not 1 <= dimension <= MAX_DIM:
            raise FormError(f"dimension must be in 1..{MAX_DIM}, got {dimension}")
        if grade < 0:
            raise FormError("grade must be nonnegative")
        clean = {}
        if grade <= dimension:
            for mask, c in (coeffs or {}).items():
                if mask >> dimension or bin(mask).count("1") != grade:
                    raise FormError(f"multi-index {_bits(mask)} invalid for grade {grade}")
                if not _negligible(c):
                    clean[mask] = c
        self.dimension = dimension
        self.grade = grade
        self._coeffs = clean

    @classmethod
    def from_indices(cls, dimension, grade, components):
        """Build from ``{(i_1, ..., i_p): c}`` with 1-based, increasing indices."""
        coeffs = {}
        for idx, c in components.items():
            idx = tuple(idx)
            if len(idx) != grade or list(idx) != sorted(set(idx)):
                raise FormError(f"indices {idx} not strictly increasing of length {grade}")
            if idx and (idx[0] < 1 or idx[-1] > dimension):
                raise FormError(f"indices {idx} outside 1..{dimension}")
            coeffs[_mask(i - 1 for i in idx)] = c
        return cls(dimension, grade, coeffs)

    @classmethod
    def scalar(cls, dimension, c=1.0):
        return cls(dimension, 0, {0: c})

    @classmethod
    def coframe(cls, dimension, i):
        """The 1-form ``theta_i`` (1-based)."""
        return cls(dimension, 1, {1 << (i - 1): 1.0})

    @classmethod
    def one_form(cls, values):
        """1-form with ``values[..., j]`` on ``theta_{j+1}``."""
        values = np.asarray(values, dtype=float)
        d = values.shape[-1]
        return cls(d, 1, {1 << j: _squeeze(values[..., j]) for j in range(d)})

    @classmethod
    def two_form(cls, values):
        """2-form whose value on ``(e_a, e_b)`` is ``values[..., a, b]``."""
        values = np.asarray(values, dtype=float)
        d = values.shape[-1]
        return cls(
            d,
            2,
            {(1 << a) | (1 << b): _squeeze(values[..., a, b]) for a in range(d) for b in range(a + 1, d)},
        )

    @property
    def coeffs(self):
        return dict(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def coefficient(self, indices):
        """Coefficient on ``theta_{i_1} ^ ... ^ theta_{i_p}`` (1-based, increasing)."""
        return self._coeffs.get(_mask(i - 1 for i in indices), 0.0)

    def components(self):
        return {tuple(i + 1 for i in _bits(m)): c for m, c in self._coeffs.items()}

    def max_abs(self):
        if not self._coeffs:
            return 0.0
        return max(float(np.max(np.abs(c))) for c in self._coeffs.values())

    def is_zero(self):
        return not self._coeffs

    def _check(self, other):
        if not isinstance(other, AlternatingForm):
            raise FormError("expected an AlternatingForm")
        if other.dimension != self.dimension:
            raise FormError(f"dimension mismatch: {self.dimension} vs {other.dimension}")

    def __add__(self, other):
        self._check(other)
        if other.grade != self.grade:
            raise FormError("cannot add forms of different grade")
        out = dict(self._coeffs)
        for m, c in other._coeffs.items():
            out[m] = out[m] + c if m in out else c
        return AlternatingForm(self.dimension, self.grade, out)

    def __neg__(self):
        return AlternatingForm(self.dimension, self.grade, {m: -c for m, c in self._coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        if isinstance(s, AlternatingForm):
            return NotImplemented
        return AlternatingForm(self.dimension, self.grade, {m: c * s for m, c in self._coeffs.items()})

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    def __repr__(self):
        return f"AlternatingForm(d={self.dimension}, p={self.grade}, {self.components()})"


def _squeeze(x):
    return float(x) if np.ndim(x) == 0 else x


def wedge(a, b):
    """Exterior product ``a ^ b``."""
    a._check(b)
    d = a.dimension
    grade = a.grade + b.grade
    out = {}
    if grade <= d:
        for ma, ca in a._coeffs.items():
            for mb, cb in b._coeffs.items():
                if ma & mb:
                    continue
                term = ca * cb
                if _merge_sign(ma, mb) < 0:
                    term = -term
                key = ma | mb
                out[key] = out[key] + term if key in out else term
    return AlternatingForm(d, grade, out)


def wedge_all(forms, dimension=None):
    if not forms:
        if dimension is None:
            raise FormError("empty product needs an explicit dimension")
        return AlternatingForm.scalar(dimension)
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def evaluate(a, vectors):
    """Evaluate ``a`` on ``p`` vectors given in the dual basis.

    Each vector is an array with trailing axis of length ``d``; leading axes
    broadcast against array coefficients.
    """
    if len(vectors) != a.grade:
        raise FormError(f"form of grade {a.grade} evaluated on {len(vectors)} vectors")
    vs = [np.asarray(v, dtype=float) for v in vectors]
    for v in vs:
        if v.shape[-1] != a.dimension:
            raise FormError(f"vector has {v.shape[-1]} components, expected {a.dimension}")
    if a.grade == 0:
        return a._coeffs.get(0, 0.0)
    V = np.stack(np.broadcast_arrays(*vs), axis=-1)  # (..., d, p)
    total = 0.0
    for mask, c in a._coeffs.items():
        rows = _bits(mask)
        total = total + c * np.linalg.det(V[..., rows, :])
    return _squeeze(total)


class TwoFormMatrix:
    """Skew ``k x k`` matrix of 2-forms over a common dimension."""

    def __init__(self, entries, check=True):
        k = len(entries)
        if k < 1 or any(len(row) != k for row in entries):
            raise FormError("entries must be a square k x k array of forms")
        d = entries[0][0].dimension
        for row in entries:
            for f in row:
                if f.dimension != d or (f.grade != 2 and not f.is_zero()):
                    raise FormError("entries must be 2-forms over a common dimension")
        self.size = k
        self.dimension = d
        self.entries = [[e if e.grade == 2 else AlternatingForm(d, 2) for e in row] for row in entries]
        if check:
            self.check_skew()

    def check_skew(self, tolerance=tol.SKEW):
        for i in range(self.size):
            if self.entries[i][i].max_abs() > tolerance:
                raise FormError(f"diagonal entry ({i + 1},{i + 1}) is not zero")
            for j in range(i + 1, self.size):
                defect = (self.entries[i][j] + self.entries[j][i]).max_abs()
                if defect > tolerance:
                    raise FormError(f"skew-symmetry violated at ({i + 1},{j + 1}) by {defect:.3e}")

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @classmethod
    def from_tensor(cls, R, check=True):
        """``Omega_ij`` with ``Omega_ij(e_a, e_b) = R[..., a, b, i, j]``.

        ``R`` has shape ``(..., d, d, k, k)``.
        """
        R = np.asarray(R, dtype=float)
        k = R.shape[-1]
        entries = [[AlternatingForm.two_form(R[..., :, :, i, j]) for j in range(k)] for i in range(k)]
        return cls(entries, check=check)


def _matchings(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for pos, partner in enumerate(rest):
        for pairs in _matchings(rest[:pos] + rest[pos + 1 :]):
            yield [(first, partner)] + pairs


def pfaffian_form(omega, method="subset_dp"):
    """Signed permutation sum of wedges of the entries of ``omega``.

    Returns the ``k``-form without the ``1/k!`` normalization.
    """
    k = omega.size
    if k % 2:
        raise FormError(f"Pfaffian needs an even size, got {k}")
    omega.check_skew()
    return mixed_pfaffian_form([], omega, 0, method=method)


def mixed_pfaffian_form(alpha, omega, n_alpha, method="subset_dp"):
    """``sum_sigma sgn(sigma) alpha_s1 ^ ... ^ alpha_sp ^ Omega_.. ^ ...``.

    The first ``n_alpha`` permuted indices feed 1-forms from ``alpha`` and
    the remaining ones are paired into entries of ``omega``. With
    ``n_alpha = 0`` this is the plain Pfaffian form.
    """
    k = omega.size
    d = omega.dimension
    s2 = k - n_alpha
    if n_alpha < 0 or s2 < 0 or s2 % 2:
        raise FormError(f"{k - n_alpha} indices cannot be paired")
    if n_alpha and len(alpha) != k:
        raise FormError("need one 1-form per index")
    s = s2 // 2
    if method == "naive":
        return _mixed_naive(alpha, omega, n_alpha, d)
    if method == "matching":
        return _mixed_matching(alpha, omega, n_alpha, s, d)
    if method == "subset_dp":
        return _mixed_dp(alpha, omega, n_alpha, s, d)
    raise FormError(f"unknown method {method!r}")


def _mixed_naive(alpha, omega, p, d):
    k = omega.size
    total = AlternatingForm(d, k)
    for sigma in itertools.permutations(range(k)):
        factors = [alpha[i] for i in sigma[:p]]
        factors += [omega[sigma[a], sigma[a + 1]] for a in range(p, k, 2)]
        total = total + _perm_sign(sigma) * wedge_all(factors, d)
    return total


def _mixed_matching(alpha, omega, p, s, d):
    k = omega.size
    total = AlternatingForm(d, p + 2 * s)
    for chosen in itertools.combinations(range(k), p):
        rest = [i for i in range(k) if i not in chosen]
        head = wedge_all([alpha[i] for i in chosen], d)
        for pairs in _matchings(rest):
            seq = list(chosen) + [i for pr in pairs for i in pr]
            term = wedge_all([head] + [omega[i, j] for i, j in pairs], d)
            total = total + _perm_sign(seq) * term
    mult = math.factorial(p) * math.factorial(s) * 2**s
    return total * float(mult)


def _mixed_dp(alpha, omega, p, s, d):
    k = omega.size
    full = (1 << k) - 1
    # states keyed by (used mask, number of alpha factors used)
    layer = {(0, 0): AlternatingForm.scalar(d)}
    for _ in range(k):
        nxt = {}
        for (mask, na), form in layer.items():
            if mask == full:
                nxt[(mask, na)] = form
                continue
            i = next(b for b in range(k) if not mask >> b & 1)
            used_above_i = bin(mask >> (i + 1)).count("1")
            if na < p:
                term = wedge(form, alpha[i])
                if (i - na) & 1:
                    term = -term
                key = (mask | 1 << i, na + 1)
                nxt[key] = nxt[key] + term if key in nxt else term
            for j in range(i + 1, k):
                if mask >> j & 1:
                    continue
                inv = used_above_i + bin(mask >> (j + 1)).count("1")
                term = wedge(form, omega[i, j])
                if inv & 1:
                    term = -term
                key = (mask | 1 << i | 1 << j, na)
                nxt[key] = nxt[key] + term if key in nxt else term
        layer = nxt
        if all(m == full for m, _ in layer):
            break
    result = layer.get((full, p), AlternatingForm(d, p + 2 * s))
    mult = math.factorial(p) * math.factorial(s) * 2**s
    return result * float(mult)
