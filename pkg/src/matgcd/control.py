"""Controllability of input/output systems ``P(sigma) y = Q(sigma) u``.

The behavior is controllable iff ``R(z) = [Q(z), -P(z)]`` has full row rank
for every complex ``z``, i.e. iff ``P`` and ``Q`` have no nonconstant common
left factor. Both checks below work on the transposed (right-orientation)
pair ``(P^T, Q^T)``; the sign of ``P`` in ``R`` plays no role.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, DimensionError, NormalizationError, ParameterError
from .matpoly import MatPoly, PolyPair, dist, transpose, transpose_pair
from .odegcd import GcdResult, OdeParams, agcd_ode
from .structmat import build_resultant, default_ell

__all__ = ["IoSystem", "is_controllable", "distance_to_uncontrollability",
           "UncontrollabilityResult", "monic_witness"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IoSystem:
    """Input/output system with ``p`` outputs and ``m`` inputs.

    Parameters
    ----------
    p_poly : MatPoly
        Square ``p x p`` polynomial acting on the outputs; must be monic
        unless ``check_monic`` is false.
    q_poly : MatPoly
        ``p x m`` polynomial acting on the inputs.
    check_monic : bool
        Set to false for solver-produced witnesses, whose leading
        coefficient may have drifted from the identity.
    """

    p_poly: MatPoly
    q_poly: MatPoly
    check_monic: bool = True

    def __post_init__(self):
        p = self.p_poly
        if p.rows != p.cols:
            raise DimensionError(f"P must be square, got {p.rows}x{p.cols}")
        if self.q_poly.rows != p.rows:
            raise DimensionError(
                f"P and Q need the same number of rows, got {p.rows} and {self.q_poly.rows}")
        if self.check_monic and (p.degree == 0 or
                                 not np.allclose(p.leading, np.eye(p.rows), atol=1e-12)):
            raise ParameterError("P must be monic with positive degree")

    @property
    def outputs(self):
        return self.p_poly.rows

    @property
    def inputs(self):
        return self.q_poly.cols

    @property
    def degree(self):
        return max(self.p_poly.degree, self.q_poly.degree)

    def right_pair(self):
        """``(P^T, Q^T)``: common left factors of ``(P, Q)`` become right factors."""
        return transpose_pair(self.p_poly, self.q_poly)

    @classmethod
    def from_right_pair(cls, pair, check_monic=False):
        return cls(transpose(pair.a), transpose(pair.b), check_monic)

    def to_dict(self):
        return {"p": self.p_poly.to_dict(), "q": self.q_poly.to_dict()}

    @classmethod
    def from_dict(cls, data, check_monic=True):
        for key in ("p", "q"):
            if key not in data:
                raise ParameterError(f"system object is missing field '{key}'")
        return cls(MatPoly.from_dict(data["p"]), MatPoly.from_dict(data["q"]), check_monic)


def is_controllable(sys, rank_tol=1e-8):
    """Left-primeness test through the generalized resultant.

    Returns
    -------
    controllable : bool
        True iff ``sigma_min > rank_tol * sigma_max`` for
        ``S_ell(P^T, Q^T)`` with ``ell = n (p + 1)``.
    margin : float
        The ratio ``sigma_min / sigma_max``.
    """
    pair = sys.right_pair()
    s = build_resultant(pair, default_ell(pair.degree, pair.cols))
    sv = np.linalg.svd(s.dense, compute_uv=False)
    # a wide resultant has a nontrivial kernel whatever the data
    smin = sv[-1] if s.shape[0] >= s.shape[1] else 0.0
    margin = float(smin / sv[0]) if sv[0] > 0 else 0.0
    return margin > rank_tol, margin


class UncontrollabilityResult(NamedTuple):
    """Outcome of :func:`distance_to_uncontrollability`.

    ``distance`` and ``witness`` answer the problem; ``monic_distance`` is
    the (larger or equal) distance to ``monic_witness``, the witness with
    its ``P`` renormalized to be monic. ``gcd`` is the underlying solver
    result in right orientation.
    """

    distance: float
    witness: IoSystem
    monic_distance: float
    monic_witness: IoSystem | None
    gcd: GcdResult


def monic_witness(sys, witness):
    """Left-multiply a witness by the inverse leading coefficient of its ``P``.

    This keeps the common left factor (so the result is still
    uncontrollable) and restores a monic ``P`` of the original degree.

    Returns
    -------
    (IoSystem or None, float)
        The monic witness and its coefficient distance to ``sys``; ``None``
        and ``inf`` when the leading coefficient cannot be inverted.
    """
    n = sys.p_poly.degree
    lead = witness.p_poly.padded(n)[n]
    try:
        cond = np.linalg.cond(lead)
        if not np.isfinite(cond) or cond > 1e12:
            raise NormalizationError("singular leading coefficient",
                                     float(np.linalg.svd(lead, compute_uv=False)[-1]))
        inv = np.linalg.inv(lead)
    except (np.linalg.LinAlgError, NormalizationError):
        return None, float("inf")
    pc = np.einsum("ij,kjl->kil", inv, witness.p_poly.padded(n))
    pc[n] = np.eye(sys.outputs)
    qc = np.einsum("ij,kjl->kil", inv, witness.q_poly.coeffs)
    w = IoSystem(MatPoly(pc), MatPoly(qc))
    return w, dist(sys.right_pair(), w.right_pair())


def distance_to_uncontrollability(sys, params=None):
    """Smallest coefficient perturbation of ``(P, Q)`` found that destroys controllability.

    Runs the ODE method for a common left factor of degree one on the
    transposed pair. The distance is measured on all coefficients of ``P``
    and ``Q`` (``Q`` zero padded to the degree of ``P``).

    Notes
    -----
    The solver only sees factors reachable with a nonsingular leading
    coefficient, and it is a local method, so the value is an upper bound
    on the true infimum.

    Raises
    ------
    ConvergenceError
        When the ODE method does not converge; ``err.best`` then holds the
        unconverged :class:`UncontrollabilityResult`.
    """
    params = params or OdeParams()
    pair = sys.right_pair()
    try:
        res, _ = agcd_ode(pair, 1, params)
    except ConvergenceError as exc:
        best = exc.best
        out = _package(sys, best) if isinstance(best, GcdResult) else None
        raise ConvergenceError(str(exc), best=out, trace=exc.trace) from None
    return _package(sys, res)


def _package(sys, res):
    hat = PolyPair(res.a_hat, res.b_hat)
    witness = IoSystem.from_right_pair(hat)
    mw, md = monic_witness(sys, witness)
    log.info("distance to uncontrollability %.8g (monic witness %.8g)",
             res.coeff_distance, md)
    return UncontrollabilityResult(res.coeff_distance, witness, md, mw, res)
