"""Real matrix polynomials and the elementary algebra on them.

A :class:`MatPoly` stores its coefficient matrices degree-ascending in a
single ``(degree + 1, rows, cols)`` array, so ``coeffs[j]`` multiplies
``lam**j``. Instances are immutable.

Throughout the package pairs are kept in *right* orientation: two
polynomials sharing the column count ``q`` with a possible common right
factor ``C`` (``A = Abar C``, ``B = Bbar C``). Left factors are handled by
transposing both inputs first.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NormalizationError, ParameterError

__all__ = [
    "MatPoly",
    "PolyPair",
    "FactorizationTriple",
    "mul",
    "evaluate",
    "dist",
    "transpose",
    "transpose_pair",
    "add_noise",
    "add_noise_pair",
    "monic_normalize",
    "random_with_common_factor",
    "padded_coeffs",
]


class MatPoly:
    """Matrix polynomial ``A(lam) = A_0 + A_1 lam + ... + A_n lam**n``.

    Parameters
    ----------
    coeffs : array_like
        Sequence of ``n + 1`` equally shaped 2-D coefficient matrices,
        lowest degree first. A 1-D sequence is read as the coefficients of a
        scalar (1x1) polynomial.

    Notes
    -----
    Exactly-zero leading coefficients are dropped on construction, so a
    nonconstant polynomial always has a nonzero leading coefficient. The
    zero polynomial is represented with degree 0.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.ndim == 1:
            c = c.reshape(-1, 1, 1)
        if c.ndim != 3 or c.shape[0] == 0 or c.shape[1] == 0 or c.shape[2] == 0:
            raise DimensionError(
                f"coefficients must form a nonempty (n+1, rows, cols) array, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ParameterError("coefficients must be finite")
        top = c.shape[0] - 1
        while top > 0 and not np.any(c[top]):
            top -= 1
        c = c[: top + 1].copy()
        c.setflags(write=False)
        self._c = c

    @classmethod
    def from_entries(cls, entries):
        """Build from a nested list of scalar polynomials.

        ``entries[i][j]`` is the ascending coefficient list of entry (i, j).

        >>> MatPoly.from_entries([[[1, 1], [0, -1]], [[3, -1], [-1]]]).degree
        1
        """
        rows = len(entries)
        cols = len(entries[0])
        if any(len(r) != cols for r in entries):
            raise DimensionError("ragged entry list")
        deg = max(len(e) for r in entries for e in r) - 1
        c = np.zeros((deg + 1, rows, cols))
        for i, r in enumerate(entries):
            for j, e in enumerate(r):
                c[: len(e), i, j] = e
        return cls(c)

    @classmethod
    def constant(cls, matrix):
        return cls(np.asarray(matrix, dtype=float)[None])

    @classmethod
    def identity(cls, size):
        return cls.constant(np.eye(size))

    @property
    def coeffs(self):
        return self._c

    @property
    def degree(self):
        return self._c.shape[0] - 1

    @property
    def rows(self):
        return self._c.shape[1]

    @property
    def cols(self):
        return self._c.shape[2]

    @property
    def shape(self):
        return self._c.shape[1:]

    @property
    def leading(self):
        return self._c[-1]

    def padded(self, degree):
        """Coefficient array zero-padded up to ``degree``."""
        if degree < self.degree:
            raise ParameterError(f"cannot pad degree {self.degree} down to {degree}")
        out = np.zeros((degree + 1,) + self.shape)
        out[: self.degree + 1] = self._c
        return out

    def allclose(self, other, atol=1e-12, rtol=0.0):
        if self.shape != other.shape:
            return False
        n = max(self.degree, other.degree)
        return np.allclose(self.padded(n), other.padded(n), atol=atol, rtol=rtol)

    def __matmul__(self, other):
        return mul(self, other)

    def __add__(self, other):
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape} polynomials")
        n = max(self.degree, other.degree)
        return MatPoly(self.padded(n) + other.padded(n))

    def __sub__(self, other):
        return self + MatPoly(-other.coeffs)

    def __call__(self, lam):
        return evaluate(self, lam)

    def __eq__(self, other):
        if not isinstance(other, MatPoly):
            return NotImplemented
        return self._c.shape == other._c.shape and np.array_equal(self._c, other._c)

    __hash__ = None

    def __repr__(self):
        return f"MatPoly(rows={self.rows}, cols={self.cols}, degree={self.degree})"

    def to_dict(self):
        """Plain-JSON representation (rows, cols, degree, coeffs)."""
        return {
            "rows": self.rows,
            "cols": self.cols,
            "degree": self.degree,
            "coeffs": [[[float(x) for x in row] for row in blk] for blk in self._c],
        }

    @classmethod
    def from_dict(cls, data):
        for key in ("rows", "cols", "degree", "coeffs"):
            if key not in data:
                raise ParameterError(f"polynomial object is missing field '{key}'")
        try:
            c = np.array(data["coeffs"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ParameterError(f"field 'coeffs' is not a numeric array: {exc}") from None
        rows, cols, deg = int(data["rows"]), int(data["cols"]), int(data["degree"])
        if c.shape != (deg + 1, rows, cols):
            raise DimensionError(
                f"field 'coeffs' has shape {c.shape}, expected {(deg + 1, rows, cols)}")
        return cls(c)


@dataclass(frozen=True)
class PolyPair:
    """Two matrix polynomials with a common column count (right orientation)."""

    a: MatPoly
    b: MatPoly

    def __post_init__(self):
        if self.a.cols != self.b.cols:
            raise DimensionError(
                f"pair needs a common column count, got {self.a.cols} and {self.b.cols}")

    @property
    def cols(self):
        return self.a.cols

    @property
    def degree(self):
        return max(self.a.degree, self.b.degree)

    def __iter__(self):
        return iter((self.a, self.b))


@dataclass(frozen=True)
class FactorizationTriple:
    """Common right factor ``c`` with cofactors: ``a ~ abar c``, ``b ~ bbar c``."""

    c: MatPoly
    abar: MatPoly
    bbar: MatPoly

    @property
    def d(self):
        return self.c.degree

    def product(self):
        return PolyPair(mul(self.abar, self.c), mul(self.bbar, self.c))


def padded_coeffs(pair, degree=None):
    """Return the two coefficient arrays of ``pair`` padded to a common degree."""
    n = pair.degree if degree is None else degree
    return pair.a.padded(n), pair.b.padded(n)


def mul(p, q):
    """Product ``p(lam) q(lam)`` by coefficient convolution."""
    if p.cols != q.rows:
        raise DimensionError(f"cannot multiply {p.shape} by {q.shape}")
    out = np.zeros((p.degree + q.degree + 1, p.rows, q.cols))
    for i, pi in enumerate(p.coeffs):
        out[i: i + q.degree + 1] += np.matmul(pi, q.coeffs)
    return MatPoly(out)


def evaluate(p, lam):
    """Evaluate ``p`` at the scalar ``lam`` (Horner)."""
    c = p.coeffs
    acc = c[-1].astype(np.result_type(c, lam))
    for blk in c[-2::-1]:
        acc = acc * lam + blk
    return acc


def dist(pair1, pair2):
    """Coefficient distance between two pairs.

    ``sqrt(sum_j ||A_j - Ahat_j||_F**2 + sum_j ||B_j - Bhat_j||_F**2)``, the
    shorter polynomial in each position being padded with zero coefficients.
    """
    total = 0.0
    for p, q in ((pair1.a, pair2.a), (pair1.b, pair2.b)):
        if p.shape != q.shape:
            raise DimensionError(f"shape mismatch {p.shape} vs {q.shape}")
        n = max(p.degree, q.degree)
        total += np.sum((p.padded(n) - q.padded(n)) ** 2)
    return float(np.sqrt(total))


def transpose(p):
    return MatPoly(np.swapaxes(p.coeffs, 1, 2))


def transpose_pair(a, b):
    """Turn a left-orientation pair (common rows) into a right-orientation pair."""
    return PolyPair(transpose(a), transpose(b))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def add_noise(p, level, seed):
    """Perturb every coefficient entry by ``level`` times a standard normal draw."""
    if level < 0:
        raise ParameterError("noise level must be nonnegative")
    rng = _rng(seed)
    noise = rng.standard_normal(p.coeffs.shape)
    if level == 0:
        return p
    return MatPoly(p.coeffs + level * noise)


def add_noise_pair(pair, level, seed):
    """Noisy copy of both polynomials, drawn from one stream (``a`` first)."""
    rng = _rng(seed)
    return PolyPair(add_noise(pair.a, level, rng), add_noise(pair.b, level, rng))


def monic_normalize(c, max_cond=1e12):
    """Left-multiply ``c`` by the inverse of its leading coefficient.

    Raises
    ------
    NormalizationError
        If the leading coefficient is singular or its condition number
        exceeds ``max_cond``. The smallest singular value is attached.
    """
    if c.rows != c.cols:
        raise DimensionError(f"monic normalization needs a square polynomial, got {c.shape}")
    lead = c.leading
    s = np.linalg.svd(lead, compute_uv=False)
    if s[-1] == 0 or s[0] / s[-1] > max_cond:
        raise NormalizationError(
            f"leading coefficient is singular to working precision "
            f"(smallest singular value {s[-1]:.3e}, largest {s[0]:.3e})",
            smallest_singular_value=float(s[-1]),
        )
    out = np.linalg.solve(lead, c.coeffs.transpose(1, 0, 2).reshape(c.rows, -1))
    out = out.reshape(c.rows, c.degree + 1, c.cols).transpose(1, 0, 2)
    out[-1] = np.eye(c.rows)
    return MatPoly(out)


def random_with_common_factor(m, n, d, seed):
    """Random ``m x m`` pair of degree ``n`` with a planted monic right factor.

    The factor ``C`` has identity leading coefficient and standard normal
    lower coefficients; the cofactors of degree ``n - d`` have standard
    normal entries.

    Returns
    -------
    pair : PolyPair
        ``(Abar C, Bbar C)``.
    triple : FactorizationTriple
        The planted ``(C, Abar, Bbar)``.
    """
    if not 0 < d < n:
        raise ParameterError(f"need 0 < d < n, got d={d}, n={n}")
    rng = _rng(seed)
    cc = rng.standard_normal((d + 1, m, m))
    cc[d] = np.eye(m)
    c = MatPoly(cc)
    abar = MatPoly(rng.standard_normal((n - d + 1, m, m)))
    bbar = MatPoly(rng.standard_normal((n - d + 1, m, m)))
    triple = FactorizationTriple(c, abar, bbar)
    return triple.product(), triple
