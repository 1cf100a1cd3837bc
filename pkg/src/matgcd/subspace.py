"""Subspace (null-space) method for common right factors.

The right null space of ``S_ell(A, B)`` coincides with that of ``tau(C)``
when ``A`` and ``B`` share the right factor ``C``. Writing ``tau(C) V_0 = 0``
block row by block row gives ``[C_d ... C_0] H(v) = 0`` for the mosaic Hankel
matrix of every null vector ``v``, so the coefficients of ``C`` span the
left null space of ``K = [H(v_1), ..., H(v_md)]``. With noisy data the same
recipe returns an approximate factor.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import numkernel
from .errors import (ConvergenceError, ExtractionWarning, ParameterError,
                     RankToleranceError)
from .matpoly import FactorizationTriple, MatPoly, dist, monic_normalize, padded_coeffs
from .structmat import block_hankel, build_resultant, toeplitz_of

__all__ = ["SubspaceDiagnostics", "subspace_gcd", "recover_cofactors", "exact_gcd_echelon",
           "shifted_echelon"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubspaceDiagnostics:
    """Quality indicators of one subspace solve.

    Attributes
    ----------
    k_matrix_singulars : ndarray
        The ``q`` smallest singular values of ``K`` (ascending); near zero
        when an exact factor exists.
    nullspace_gap : float
        ``sigma_(qd+1) / sigma_(qd)`` counted from the bottom of the
        resultant spectrum. Large values mean the requested degree is
        well separated from noise.
    residual : float
        ``||tau(C) V_0||_F`` for the normalized factor.
    distance : float
        Coefficient distance between the input and the least-squares pair
        carrying the factor.
    """

    k_matrix_singulars: np.ndarray
    nullspace_gap: float
    residual: float
    distance: float


def subspace_gcd(pair, d, ell=None):
    """Approximate common right factor of degree ``d`` by the subspace method.

    Parameters
    ----------
    pair : PolyPair
        Data in right orientation.
    d : int
        Degree of the sought factor, ``1 <= d < n``.
    ell : int, optional
        Resultant window; defaults to ``n (q + 1)``.

    Returns
    -------
    triple : FactorizationTriple
        Monic factor with least-squares cofactors.
    diag : SubspaceDiagnostics

    Raises
    ------
    NormalizationError
        If the leading block of the extracted factor is singular.
    """
    n, q = pair.degree, pair.cols
    if d < 1 or d >= n:
        raise ParameterError(f"factor degree must satisfy 1 <= d < n={n}, got {d}")
    s = build_resultant(pair, ell)
    ell = s.layout.ell
    k = q * d
    v0, sv = numkernel.null_space_basis(s.dense, k)

    kmat = np.hstack([block_hankel(v0[:, i], q, d) for i in range(k - 1, -1, -1)])
    u, ks, _ = np.linalg.svd(kmat, full_matrices=True)
    rows = u[:, -q:].T  # q x q(d+1), blocks leading-first
    kvals = np.zeros(q)
    tail = ks[::-1][:q]
    kvals[q - len(tail):] = tail
    kvals = np.sort(kvals)

    blocks = rows.reshape(q, d + 1, q).transpose(1, 0, 2)[::-1]
    c = monic_normalize(MatPoly(blocks))
    residual = float(np.linalg.norm(toeplitz_of(c, ell) @ v0))

    p = len(sv)
    lo, hi = (sv[p - k], sv[p - k - 1]) if p - k - 1 >= 0 else (sv[p - k], np.inf)
    gap = float(hi / lo) if lo > 0 else np.inf

    triple, distance = recover_cofactors(pair, c)
    diag = SubspaceDiagnostics(kvals, gap, residual, distance)
    log.debug("subspace: d=%d gap=%.3e residual=%.3e distance=%.6g", d, gap, residual, distance)
    return triple, diag


def recover_cofactors(pair, c):
    """Least-squares cofactors for a given right factor.

    Solves ``min ||A - Abar C||^2 + ||B - Bbar C||^2`` over the cofactor
    coefficients (a linear problem through ``tau(C)``).

    Returns
    -------
    triple : FactorizationTriple
    distance : float
        Coefficient distance from ``pair`` to ``(Abar C, Bbar C)``.
    """
    n, q, d = pair.degree, pair.cols, c.degree
    if c.rows != q or c.cols != q:
        raise ParameterError(f"factor must be {q}x{q}, got {c.shape}")
    if d > n:
        raise ParameterError(f"factor degree {d} exceeds pair degree {n}")
    t = toeplitz_of(c, n + 1)
    a, b = padded_coeffs(pair, n)
    rhs = np.vstack([np.concatenate(a[::-1], axis=1), np.concatenate(b[::-1], axis=1)])
    x = numkernel.least_squares(t.T, rhs.T).T
    ma = pair.a.rows

    def unpack(block_rows):
        return MatPoly(block_rows.reshape(len(block_rows), n - d + 1, q).transpose(1, 0, 2)[::-1])

    triple = FactorizationTriple(c, unpack(x[:ma]), unpack(x[ma:]))
    return triple, dist(pair, triple.product())


def shifted_echelon(m, tol=1e-10, ambiguity=1e3):
    """Row echelon form by Gaussian elimination with partial pivoting.

    Columns are swept left to right. A candidate pivot counts as zero when
    it is below ``tol`` times the largest row norm of ``m``.

    Returns
    -------
    r : ndarray
        The nonzero rows, ordered by pivot column.
    pivots : list of int
        Pivot column of each returned row.

    Raises
    ------
    RankToleranceError
        If a pivot magnitude lands within a factor ``ambiguity`` above the
        zero threshold.
    """
    a = np.array(m, dtype=float)
    nrows, ncols = a.shape
    scale = np.max(np.linalg.norm(a, axis=1)) if a.size else 0.0
    thresh = tol * scale
    pivots = []
    top = 0
    for col in range(ncols):
        if top == nrows:
            break
        j = top + int(np.argmax(np.abs(a[top:, col])))
        piv = abs(a[j, col])
        if piv <= thresh:
            a[top:, col] = 0.0
            continue
        if piv < ambiguity * thresh:
            raise RankToleranceError(
                f"pivot {piv:.3e} in column {col} is too close to the rank threshold {thresh:.3e}")
        if j != top:
            a[[top, j]] = a[[j, top]]
        f = a[top + 1:, col] / a[top, col]
        a[top + 1:, col:] -= np.outer(f, a[top, col:])
        a[top + 1:, col] = 0.0
        pivots.append(col)
        top += 1
    return a[:top], pivots


def exact_gcd_echelon(pair, max_ell=None, tol=1e-10, expected_degree=None):
    """Greatest common right divisor of an exactly factorable pair.

    Grows ``ell`` until ``rank S_(w+ell+1) - rank S_(w+ell) == q`` (with
    ``w`` the pair degree and ``q`` the column count), then reads the
    divisor off the last ``q`` rows of the echelon form of ``S_(w+ell+1)``.
    The returned polynomial is not normalized.

    Raises
    ------
    ConvergenceError
        If the rank criterion is not met for ``ell <= max_ell``.
    RankToleranceError
        If elimination hits a numerically ambiguous pivot.

    Warns
    -----
    ExtractionWarning
        When the divisor is constant (no common factor detected) or its
        degree exceeds ``expected_degree``.
    """
    w, q = pair.degree, pair.cols
    if max_ell is None:
        max_ell = w * (q + 1) + 2
    prev_rank = None
    for ell in range(1, max_ell + 2):
        r, piv = shifted_echelon(build_resultant(pair, w + ell).dense, tol=tol)
        if prev_rank is not None and len(piv) - prev_rank == q:
            break
        prev_rank = len(piv)
    else:
        raise ConvergenceError(f"rank criterion not met for ell <= {max_ell}")

    k = w + ell
    last = r[-q:]
    first_col = min(piv[-q:])
    f = first_col // q
    deg = k - 1 - f
    blocks = last[:, f * q:].reshape(q, deg + 1, q).transpose(1, 0, 2)[::-1]
    g = MatPoly(blocks)
    if g.degree == 0:
        warnings.warn("echelon extraction found no nonconstant common factor",
                      ExtractionWarning, stacklevel=2)
    elif expected_degree is not None and g.degree > expected_degree:
        warnings.warn(f"extracted factor has degree {g.degree} > expected {expected_degree}",
                      ExtractionWarning, stacklevel=2)
    return g
