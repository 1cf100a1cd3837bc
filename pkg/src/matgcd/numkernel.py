"""Dense SVD and least-squares helpers used by both GCD algorithms.

LAPACK does the work (through numpy/scipy); this module pins down the
conventions the algorithms rely on: sorted singular values, a deterministic
sign for every singular pair, and a warning when the singular value being
tracked is not simple.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CoalescenceWarning, NumericError, ParameterError

__all__ = ["SvdResult", "svd", "smallest_triplets", "target_triplet", "least_squares",
           "null_space_basis"]

COALESCENCE_GAP = 1e-10


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``M = U diag(s) V^T`` with ``s`` nonincreasing."""

    u_vectors: np.ndarray
    singular_values: np.ndarray
    v_vectors: np.ndarray

    def reconstruct(self):
        return (self.u_vectors * self.singular_values) @ self.v_vectors.T


def _fix_signs(u, vt):
    # largest-magnitude entry of every left vector made positive
    idx = np.argmax(np.abs(u), axis=0)
    sgn = np.sign(u[idx, np.arange(u.shape[1])])
    sgn[sgn == 0] = 1.0
    return u * sgn, vt * sgn[:, None]


def _check_finite(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ParameterError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix has non-finite entries")
    return m


def _gesdd(m):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def svd(m):
    """Thin SVD of ``m`` with deterministic singular vector signs."""
    m = _check_finite(m)
    u, s, vt = _gesdd(m)
    u, vt = _fix_signs(u, vt)
    return SvdResult(u, s, vt.T)


def smallest_triplets(m, k):
    """The ``k`` smallest singular triplets of ``m`` in ascending order.

    Returns
    -------
    list of (sigma, u, v)
    """
    m = _check_finite(m)
    if not 1 <= k <= min(m.shape):
        raise ParameterError(f"k={k} out of range for a {m.shape[0]}x{m.shape[1]} matrix")
    res = svd(m)
    p = len(res.singular_values)
    return [(float(res.singular_values[i]), res.u_vectors[:, i], res.v_vectors[:, i])
            for i in range(p - 1, p - k - 1, -1)]


def target_triplet(m, k, warn=True):
    """The ``k``-th smallest singular triplet of a matrix with ``rows >= cols``.

    Also returns the largest singular value. Emits
    :class:`CoalescenceWarning` when the gap to either neighbour drops below
    ``COALESCENCE_GAP * sigma_max``; only the ``k``-th pair is then still
    well defined up to rotation, which the callers tolerate.
    """
    u, s, vt = _gesdd(m)
    p = len(s)
    i = p - k
    if warn and s[0] > 0:
        gaps = []
        if i > 0:
            gaps.append(s[i - 1] - s[i])
        if i + 1 < p:
            gaps.append(s[i] - s[i + 1])
        if gaps and min(gaps) < COALESCENCE_GAP * s[0] and s[i] > COALESCENCE_GAP * s[0]:
            warnings.warn("tracked singular value is not simple; continuing with one "
                          "vector pair of the cluster", CoalescenceWarning, stacklevel=2)
    ui, vi = u[:, i], vt[i]
    if ui[np.argmax(np.abs(ui))] < 0:
        ui, vi = -ui, -vi
    return float(s[i]), ui, vi, float(s[0])


def null_space_basis(m, k):
    """Orthonormal basis (as columns) of the ``k`` least significant right
    singular directions of ``m``, including the implicit null directions of a
    wide matrix. Also returns the full list of singular values."""
    m = _check_finite(m)
    if not 1 <= k <= m.shape[1]:
        raise ParameterError(f"k={k} out of range for {m.shape[1]} columns")
    _, s, vt = np.linalg.svd(m, full_matrices=True)
    return vt[-k:][::-1].T, s


def least_squares(m, rhs):
    """Minimum-norm minimizer of ``||m x - rhs||_F``."""
    m = _check_finite(m)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != m.shape[0]:
        raise ParameterError(f"rhs has {rhs.shape[0]} rows, matrix has {m.shape[0]}")
    x, *_ = scipy.linalg.lstsq(m, rhs, lapack_driver="gelsd")
    return x
