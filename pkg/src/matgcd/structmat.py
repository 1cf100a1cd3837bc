"""Generalized Sylvester resultants and related structured matrices.

Block layout of ``S_ell(A, B)`` for a pair of degree ``n`` with ``q``
columns: the top half has ``ell - n`` block rows, block row ``i`` holding
``[A_n, ..., A_0]`` starting at block column ``i``; the bottom half is the
same with ``B``. Inside these rows coefficients appear leading-first, while
:class:`~matgcd.matpoly.MatPoly` stores them ascending; conversion happens
here and nowhere else.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionError, ParameterError, StructureError
from .matpoly import MatPoly, PolyPair, padded_coeffs

__all__ = [
    "SylvesterLayout",
    "SylvesterMatrix",
    "layout_for",
    "build_resultant",
    "project_structure",
    "toeplitz_of",
    "block_hankel",
    "read_coefficients",
    "poly_distance_of",
    "corank",
    "default_ell",
]

RANK_TOL = 1e-8


@dataclass(frozen=True)
class SylvesterLayout:
    """Shape bookkeeping for ``S_ell``: block row heights, block width, degree, ell."""

    m_a: int
    m_b: int
    q: int
    n: int
    ell: int

    def __post_init__(self):
        if min(self.m_a, self.m_b, self.q) < 1 or self.n < 0:
            raise ParameterError(f"invalid layout {self}")
        if self.ell < self.n + 1:
            raise ParameterError(f"ell={self.ell} must be at least n+1={self.n + 1}")

    @property
    def reps(self):
        """Number of block rows per half (each coefficient appears this often)."""
        return self.ell - self.n

    @property
    def shape(self):
        return ((self.m_a + self.m_b) * self.reps, self.q * self.ell)

    @property
    def n_params(self):
        return (self.m_a + self.m_b) * self.q * (self.n + 1)


@dataclass(frozen=True, eq=False)
class SylvesterMatrix:
    layout: SylvesterLayout
    dense: np.ndarray

    @property
    def shape(self):
        return self.dense.shape


def default_ell(n, q):
    """``n (q + 1)``, the smallest window for which corank equals common multiplicity."""
    return max(n * (q + 1), n + 1)


def layout_for(pair, ell=None):
    n = pair.degree
    if ell is None:
        ell = default_ell(n, pair.cols)
    return SylvesterLayout(pair.a.rows, pair.b.rows, pair.cols, n, int(ell))


@lru_cache(maxsize=64)
def _positions(layout):
    """Flat dense indices of every coefficient entry, one row per entry.

    Rows are ordered (half, leading-first block index, row, col), so they
    match ``np.concatenate([lead_a.ravel(), lead_b.ravel()])`` where
    ``lead_*`` has shape ``(n + 1, rows, q)``.
    """
    L = layout
    ncols = L.q * L.ell
    out = []
    for half, (mh, row0) in enumerate(((L.m_a, 0), (L.m_b, L.m_a * L.reps))):
        i, r, c = np.meshgrid(np.arange(L.n + 1), np.arange(mh), np.arange(L.q), indexing="ij")
        j = np.arange(L.reps)
        rows = row0 + j[None, None, None, :] * mh + r[..., None]
        cols = (j[None, None, None, :] + i[..., None]) * L.q + c[..., None]
        out.append((rows * ncols + cols).reshape(-1, L.reps))
    pos = np.concatenate(out, axis=0)
    pos.setflags(write=False)
    return pos


def _leading_first(pair, n):
    a, b = padded_coeffs(pair, n)
    return a[::-1], b[::-1]


def _assemble(params, layout):
    dense = np.zeros(layout.shape)
    dense.reshape(-1)[_positions(layout)] = params[:, None]
    return dense


def _params_of(pair, layout):
    la, lb = _leading_first(pair, layout.n)
    return np.concatenate([la.ravel(), lb.ravel()])


def build_resultant(pair, ell=None):
    """The generalized Sylvester matrix ``S_ell(A, B)``.

    Parameters
    ----------
    pair : PolyPair
        Right-orientation pair; the lower-degree member is zero padded.
    ell : int, optional
        Number of block columns. Defaults to ``n (q + 1)``.
    """
    layout = layout_for(pair, ell)
    return SylvesterMatrix(layout, _assemble(_params_of(pair, layout), layout))


def _average(h, layout):
    return h.reshape(-1)[_positions(layout)].mean(axis=1)


def project_structure(h, layout):
    """Frobenius-orthogonal projection of ``h`` onto Sylvester structure.

    Every coefficient block becomes the mean of the ``ell - n`` blocks of
    ``h`` lying on its structural diagonal.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != layout.shape:
        raise DimensionError(f"matrix shape {h.shape} does not match layout {layout.shape}")
    return SylvesterMatrix(layout, _assemble(_average(h, layout), layout))


def project_dense(h, layout):
    """Array-in, array-out variant of :func:`project_structure` for inner loops."""
    return _assemble(_average(h, layout), layout)


def read_coefficients(s, tol=1e-10):
    """Recover the pair whose resultant is ``s``.

    Raises
    ------
    StructureError
        If ``s`` is farther than ``tol * max(1, ||s||_F)`` from its
        structured projection.
    """
    layout = s.layout
    params = _average(s.dense, layout)
    err = np.linalg.norm(s.dense - _assemble(params, layout))
    if err > tol * max(1.0, np.linalg.norm(s.dense)):
        raise StructureError(f"matrix is {err:.3e} away from Sylvester structure")
    L = layout
    na = (L.n + 1) * L.m_a * L.q
    # read from the first block row of each half rather than the averages
    first = s.dense.reshape(-1)[_positions(layout)[:, 0]]
    la = first[:na].reshape(L.n + 1, L.m_a, L.q)
    lb = first[na:].reshape(L.n + 1, L.m_b, L.q)
    return PolyPair(MatPoly(la[::-1]), MatPoly(lb[::-1]))


def poly_distance_of(epsilon, layout):
    """Coefficient distance encoded by a structured perturbation of Frobenius norm ``epsilon``."""
    if epsilon < 0:
        raise ParameterError("epsilon must be nonnegative")
    return float(epsilon / np.sqrt(layout.reps))


def toeplitz_of(c, block_cols):
    """Block Toeplitz multiplication matrix of a square polynomial ``c``.

    Has ``block_cols - d`` block rows; block row ``j`` holds
    ``[C_d, ..., C_0]`` starting at block column ``j``, so that
    ``S_{ell-d}(Abar, Bbar) @ toeplitz_of(C, ell) == S_ell(Abar C, Bbar C)``.
    """
    if c.rows != c.cols:
        raise DimensionError(f"toeplitz_of needs a square polynomial, got {c.shape}")
    q, d = c.rows, c.degree
    if block_cols < d + 1:
        raise ParameterError(f"block_cols={block_cols} must be at least d+1={d + 1}")
    row = np.concatenate(c.coeffs[::-1], axis=1)
    nr = block_cols - d
    t = np.zeros((nr * q, block_cols * q))
    for j in range(nr):
        t[j * q:(j + 1) * q, j * q:(j + d + 1) * q] = row
    return t


def block_hankel(v, m, d):
    """Mosaic Hankel matrix with ``m (d + 1)`` rows built from ``v``.

    ``v`` is read column-major into an ``m x c`` matrix ``Vbar``; column ``j``
    of the result stacks columns ``j, ..., j + d`` of ``Vbar``.
    """
    v = np.asarray(v, dtype=float).ravel()
    if m < 1 or v.size % m:
        raise DimensionError(f"vector length {v.size} is not a multiple of m={m}")
    c = v.size // m
    if c < d + 1:
        raise DimensionError(f"{c} block columns cannot hold a window of {d + 1}")
    win = np.lib.stride_tricks.sliding_window_view(v, m * (d + 1))[::m]
    return np.ascontiguousarray(win.T)


def corank(matrix, tol=RANK_TOL):
    """Number of singular values at most ``tol * sigma_max`` (plus missing ones of a wide matrix)."""
    m = np.asarray(getattr(matrix, "dense", matrix), dtype=float)
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return m.shape[1]
    return int(np.sum(s <= tol * s[0])) + max(0, m.shape[1] - m.shape[0])
