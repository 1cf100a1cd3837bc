"""Two-level gradient-flow method for approximate common factors.

The data resultant ``S`` is perturbed to ``S + eps E`` with ``E`` a unit
Frobenius norm Sylvester-structured matrix. With ``k = q d``, the ``k``-th
smallest singular value ``sigma_k`` of the perturbed matrix is driven to
zero:

* inner level -- for fixed ``eps``, integrate the norm-preserving gradient
  flow ``E' = -P(u v^T) + <E, P(u v^T)> E`` (``P`` the structure projection,
  ``u, v`` the singular vectors of ``sigma_k``) to a stationary point;
* outer level -- grow ``eps`` by integrating the free flow
  ``E' = -P(u v^T)`` until ``||E||`` has grown by the requested factor,
  renormalize, and go back to the inner level.

Both flows are integrated with explicit Euler and accept/reject step
control, so the accepted ``sigma_k`` values never increase within a phase.

Near a solution the ``k`` smallest singular values approach zero together
and ``sigma_k`` stops being smooth. When singular values below ``sigma_k``
come within ``cluster_tol * sigma_max`` of it, ``P(u v^T)`` is replaced by
the least-norm element of the cluster's generalized gradient, which keeps
the flows from zigzagging. If an inner phase reaches zero at an ``eps`` the
preceding free phase did not need, the outer step may have overshot and
``eps`` is refined by bisection.
"""

import logging
import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (ContinuationStallError, ConvergenceError, ExtractionWarning, MatGcdError,
                     NonConvergenceWarning, NumericError, StalledIntegrationError)
from .matpoly import PolyPair, dist
from .numkernel import target_triplet
from .structmat import (SylvesterMatrix, _assemble, _average, build_resultant, project_dense,
                        read_coefficients)
from .subspace import exact_gcd_echelon, recover_cofactors, subspace_gcd

__all__ = [
    "OdeParams",
    "InnerState",
    "OdeTrace",
    "GcdResult",
    "sigma_derivative",
    "gradient_direction",
    "alignment",
    "initial_state",
    "inner_iteration",
    "free_gradient_phase",
    "agcd_ode",
]

log = logging.getLogger(__name__)


# an inner phase ends once SLOW_WINDOW accepted steps cut sigma_k by less
# than the fraction SLOW_GAIN
SLOW_WINDOW = 100
SLOW_GAIN = 1e-3


@dataclass(frozen=True)
class OdeParams:
    """Tuning knobs of the ODE method.

    Attributes
    ----------
    eps0 : float or None
        Starting perturbation size. ``None`` starts at ``sigma_k(S)``,
        which never exceeds the optimal size (a perturbation of Frobenius
        norm ``eps`` moves singular values by at most ``eps``).
    delta : float or None
        Fixed outer increment of ``eps``. ``None`` picks each increment from
        the local slope ``d sigma_k / d eps = <E, P(u v^T)>`` (a Newton step
        on ``sigma_k(eps) = 0``), capped at doubling ``eps``.
    tol : float
        Zero tolerance: ``sigma_k <= tol * sigma_max`` counts as singular.
    h0, gamma : float
        Initial Euler step and the factor by which it shrinks on rejection
        and grows after a clean acceptance.
    stat_tol : float
        Inner iteration stops once ``|<E, P>| / ||P|| >= 1 - stat_tol``.
    max_inner, max_outer : int
        Step budget per phase and number of outer updates.
    h_min : float
        Step size below which integration is declared stalled.
    cluster_tol : float
        Singular values below ``sigma_k`` within ``cluster_tol * sigma_max``
        of it are treated as coalesced with it; the descent direction then
        accounts for the whole cluster.
    refine_tol : float
        Relative width at which the bisection on ``eps`` stops. Bisection
        starts when an inner phase reaches ``sigma_k = 0`` at an ``eps``
        that the preceding free phase did not need, a sign that the
        outer step overshot.
    max_stalls : int
        Consecutive stalled free phases tolerated. After the first, the
        solver settles the stall point with an inner phase; after later
        ones it jumps to a larger ``eps`` with the same ``E`` (doubling the
        jump each time) and restarts the inner flow there.
    """

    eps0: float | None = 1e-2
    delta: float | None = None
    tol: float = 1e-8
    h0: float = 0.1
    gamma: float = 1.2
    stat_tol: float = 1e-5
    max_inner: int = 5000
    max_outer: int = 200
    h_min: float = 1e-14
    cluster_tol: float = 1e-4
    refine_tol: float = 1e-4
    max_stalls: int = 4

    def __post_init__(self):
        for name in ("tol", "h0", "stat_tol", "h_min", "refine_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.eps0 is not None and not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if self.max_inner < 1 or self.max_outer < 1 or self.max_stalls < 1:
            raise ValueError("iteration caps must be positive")
        if not 0 <= self.cluster_tol < 1:
            raise ValueError("cluster_tol must lie in [0, 1)")


@dataclass(frozen=True, eq=False)
class InnerState:
    """Point on the flow: ``S + epsilon * e`` and its tracked singular triplet.

    ``g`` is the structured descent gradient at this point: ``P(u v^T)``
    when ``sigma_k`` is simple, otherwise the least-norm element of the
    generalized gradient of the cluster ``sigma_k`` belongs to (``cluster``
    counts its members).
    """

    e: np.ndarray
    epsilon: float
    sigma_k: float
    u: np.ndarray
    v: np.ndarray
    h: float
    sigma_max: float
    k: int
    layout: object
    g: np.ndarray
    cluster: int = 1

    def projected_gradient(self):
        return self.g


@dataclass
class OdeTrace:
    """Per-step log: ``(phase, eps, sigma_k, norm_e, h, accepted)`` rows.

    ``exits`` records every inner-phase exit as
    ``(eps, sigma_k, alignment, reason)``. The reason is ``"zero"``,
    ``"stationary"``, ``"slow"`` (no real progress over a window of
    steps), ``"max_inner"`` or ``"stalled"``. Exits are not part of the CSV.
    """

    rows: list = field(default_factory=list)
    exits: list = field(default_factory=list)

    HEADER = "phase,eps,sigma_k,norm_e,h,accepted"

    def add(self, phase, eps, sigma, norm_e, h, accepted):
        self.rows.append((phase, float(eps), float(sigma), float(norm_e), float(h), bool(accepted)))

    def extend(self, other):
        self.rows.extend(other.rows)
        self.exits.extend(other.exits)

    def exit(self, state, reason):
        self.exits.append((state.epsilon, state.sigma_k, alignment(state), reason))

    def __len__(self):
        return len(self.rows)

    def accepted_sigmas(self, phase=None):
        return [r[2] for r in self.rows if r[5] and (phase is None or r[0] == phase)]

    def phases(self):
        """Split into contiguous runs of one phase label."""
        out = []
        for r in self.rows:
            if not out or out[-1][0] != r[0]:
                out.append((r[0], []))
            out[-1][1].append(r)
        return out

    def to_csv(self):
        lines = [self.HEADER]
        for ph, eps, s, ne, h, ok in self.rows:
            lines.append(f"{ph},{eps:.17g},{s:.17g},{ne:.17g},{h:.17g},{int(ok)}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class GcdResult:
    """Outcome of :func:`agcd_ode`.

    ``coeff_distance`` is the coefficient distance between the data and
    ``(a_hat, b_hat)``; ``matrix_distance`` is the same perturbation measured
    on the resultant (``epsilon``). ``triple`` is the factor extracted from
    ``(a_hat, b_hat)``, or ``None`` if extraction failed; ``factor_distance``
    is then the distance from the data to the nearest pair carrying exactly
    that factor.
    """

    a_hat: object
    b_hat: object
    triple: object
    epsilon: float
    matrix_distance: float
    coeff_distance: float
    converged: bool
    factor_distance: float = math.nan
    sigma_k: float = math.nan
    sigma_max: float = math.nan
    outer_iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def pair(self):
        return PolyPair(self.a_hat, self.b_hat)


def _evaluate(s_dense, eps, e, k):
    """``(sigma_k, sigma_max, svd)`` of ``S + eps e``."""
    u, sv, vt = np.linalg.svd(s_dense + eps * e, full_matrices=False)
    return float(sv[-k]), float(sv[0]), (u, sv, vt)


def _hull_weights(gpar):
    """Weights ``W`` (symmetric psd, trace 1) of the least-norm ``sum_ab W_ab gpar[a][b]``.

    ``gpar[a][b]`` is the parameter vector of ``P(u_a v_b^T)``.
    """
    r = len(gpar)
    if r == 2:
        base = gpar[1][1]
        d1 = gpar[0][0] - base
        d2 = gpar[0][1] + gpar[1][0]
        h = np.array([[d1 @ d1, d1 @ d2], [d1 @ d2, d2 @ d2]])
        lin = np.array([base @ d1, base @ d2])
        # W = [[a, b], [b, 1 - a]] is psd iff (a - 1/2)^2 + b^2 <= 1/4
        try:
            a, b = np.linalg.solve(h, -lin)
            inside = (a - 0.5) ** 2 + b * b <= 0.25
        except np.linalg.LinAlgError:
            inside = False
        if not inside:
            t = np.linspace(0, 2 * np.pi, 721)
            pts = np.stack([0.5 + 0.5 * np.cos(t), 0.5 * np.sin(t)])
            vals = np.einsum("ip,ij,jp->p", pts, h, pts) + 2 * lin @ pts
            a, b = pts[:, np.argmin(vals)]
        return np.array([[a, b], [b, 1 - a]])
    # general cluster size: projected gradient on the spectraplex
    flat = np.array([gpar[i][j] for i in range(r) for j in range(r)])
    m = flat @ flat.T
    step = 1.0 / (2 * np.linalg.norm(m, 2) + 1e-300)
    w = np.eye(r) / r
    for _ in range(300):
        grad = (2 * m @ w.ravel()).reshape(r, r)
        w = w - step * 0.5 * (grad + grad.T)
        lam, q = np.linalg.eigh(w)
        lam = _simplex_projection(lam)
        w = (q * lam) @ q.T
    return w


def _simplex_projection(x):
    srt = np.sort(x)[::-1]
    css = np.cumsum(srt) - 1
    idx = np.arange(1, len(x) + 1)
    rho = idx[srt - css / idx > 0][-1]
    return np.maximum(x - css[rho - 1] / rho, 0)


def _descent(svd_, k, layout, cluster_tol, e=None):
    """Tracked pair ``(u, v)``, descent gradient ``g`` and cluster size.

    With ``e`` given, the cluster weights minimize the part of ``g``
    tangent to ``e`` (steepest descent on the unit sphere); otherwise they
    minimize ``||g||``.
    """
    u, sv, vt = svd_
    p = len(sv)
    i = p - k
    ui, vi = u[:, i], vt[i]
    if ui[np.argmax(np.abs(ui))] < 0:
        ui, vi = -ui, -vi
    j = i + 1
    while j < p and sv[i] - sv[j] <= cluster_tol * sv[0]:
        j += 1
    if j - i == 1:
        return ui, vi, project_dense(np.outer(ui, vi), layout), 1
    idx = range(i, j)
    gpar = [[_average(np.outer(u[:, a], vt[b]), layout) for b in idx] for a in idx]
    metric = gpar
    if e is not None and np.any(e):
        ep = _average(e, layout)
        ep = ep / np.linalg.norm(ep)
        metric = [[x - (x @ ep) * ep for x in row] for row in gpar]
    w = _hull_weights(metric)
    g = sum(w[a, b] * gpar[a][b] for a in range(j - i) for b in range(j - i))
    return ui, vi, _assemble(g, layout), j - i


def _state_from(svd_, e, eps, h, k, layout, params, tangent=True):
    ui, vi, g, r = _descent(svd_, k, layout, params.cluster_tol, e if tangent else None)
    sv = svd_[1]
    return InnerState(e, float(eps), float(sv[-k]), ui, vi, float(h), float(sv[0]), k, layout,
                      g, r)


def sigma_derivative(state, edot):
    """Rate of change ``eps u^T edot v`` of ``sigma_k`` along ``edot``."""
    return float(state.epsilon * (state.u @ edot @ state.v))


def gradient_direction(state):
    """Right-hand side ``-G + <E, G> E`` of the norm-preserving flow, ``G = P(u v^T)``."""
    g = state.g
    if not np.any(g) and state.sigma_k > 0:
        raise NumericError("structured projection of u v^T vanished at a nonzero singular value")
    return -g + np.vdot(state.e, g) * state.e


def alignment(state):
    """``|<E, G>| / ||G||``; equals 1 exactly at stationary points."""
    g = state.g
    return float(abs(np.vdot(state.e, g)) / np.linalg.norm(g))


def make_state(s, e, eps, k, params=None, h=None):
    """Evaluate ``S + eps e`` and package it as an :class:`InnerState`."""
    params = params or OdeParams()
    return _state_from(_evaluate(s.dense, eps, e, k)[2], e, eps,
                       params.h0 if h is None else h, k, s.layout, params)


def initial_state(s, k, params=None):
    """Steepest-descent start ``E = -G/||G||`` with ``G`` taken at ``eps = 0``."""
    params = params or OdeParams()
    st0 = make_state(s, np.zeros(s.shape), 0.0, k, params)
    eps0 = params.eps0 if params.eps0 is not None else st0.sigma_k
    return make_state(s, -st0.g / np.linalg.norm(st0.g), eps0, k, params)


def _is_zero(state, params):
    return state.sigma_k <= params.tol * state.sigma_max


def inner_iteration(s, state, params=None, trace=None):
    """Integrate the norm-preserving flow at fixed ``eps`` to a stationary point.

    Stops on ``sigma_k`` reaching the zero tolerance, on alignment within
    ``stat_tol`` of one, or when ``SLOW_WINDOW`` accepted steps lower
    ``sigma_k`` by less than the fraction ``SLOW_GAIN``.

    Returns
    -------
    state : InnerState
    trace : OdeTrace

    Raises
    ------
    StalledIntegrationError
        If the Euler step underflows ``params.h_min``; ``err.best`` holds
        the last accepted state (with its step reset to ``params.h0``).
    """
    params = params or OdeParams()
    trace = OdeTrace() if trace is None else trace
    k, eps = state.k, state.epsilon
    mark = state.sigma_k
    for it in range(params.max_inner):
        if _is_zero(state, params):
            trace.exit(state, "zero")
            return state, trace
        if alignment(state) >= 1 - params.stat_tol:
            trace.exit(state, "stationary")
            return state, trace
        if it and it % SLOW_WINDOW == 0:
            # creeping along a kink
            if mark - state.sigma_k <= SLOW_GAIN * mark:
                trace.exit(state, "slow")
                return state, trace
            mark = state.sigma_k
        edot = gradient_direction(state)
        h = state.h
        rejected = False
        while True:
            et = state.e + h * edot
            et /= np.linalg.norm(et)
            sig, _, svd_ = _evaluate(s.dense, eps, et, k)
            if sig <= state.sigma_k:
                break
            trace.add("inner", eps, sig, 1.0, h, False)
            h /= params.gamma
            rejected = True
            if h < params.h_min:
                trace.exit(state, "stalled")
                raise StalledIntegrationError(
                    f"inner Euler step underflow at eps={eps:.6g}",
                    best=replace(state, h=params.h0), trace=trace)
        trace.add("inner", eps, sig, 1.0, h, True)
        state = _state_from(svd_, et, eps, h if rejected else h * params.gamma, k,
                            state.layout, params)
    trace.exit(state, "max_inner")
    warnings.warn(f"inner iteration hit max_inner={params.max_inner} at eps={eps:.6g}",
                  NonConvergenceWarning, stacklevel=2)
    return state, trace


def _step_to_norm(f, fdot, target):
    # smallest h > 0 with ||f + h fdot|| == target (exists when ||f|| < target)
    a = np.vdot(fdot, fdot)
    b = 2 * np.vdot(f, fdot)
    c = np.vdot(f, f) - target * target
    return (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)


def free_gradient_phase(s, state, eps_target, params=None, trace=None):
    """Grow the perturbation along ``E' = -G`` up to size ``eps_target``.

    ``G`` is the descent gradient carried by the state (``P(u v^T)`` for a
    simple singular value). Integration starts from ``state.e`` (unit norm)
    and stops when ``state.epsilon * ||E||`` reaches ``eps_target`` (the
    last step is shortened to land on it) or when ``sigma_k`` falls to the
    zero tolerance. The returned state carries
    ``epsilon = state.epsilon * ||E||`` and ``E`` rescaled to unit norm.

    Raises
    ------
    ContinuationStallError
        If the norm target is not reached within ``params.max_inner`` steps
        or the step size underflows.
    """
    params = params or OdeParams()
    trace = OdeTrace() if trace is None else trace
    eps_hat = state.epsilon
    if eps_target <= eps_hat:
        return state
    ratio = eps_target / eps_hat
    k = state.k
    # cur.e is the unnormalized F, cur.epsilon stays eps_hat; a step size
    # shrunk at the end of an inner phase says nothing about the free flow
    cur = replace(state, h=max(state.h, params.h0))
    fn = 1.0
    for _ in range(params.max_inner):
        f = cur.e
        fdot = -cur.g
        h = cur.h
        rejected = False
        while True:
            step = h
            last = False
            ft = f + step * fdot
            ftn = np.linalg.norm(ft)
            if ftn >= ratio:
                step = _step_to_norm(f, fdot, ratio)
                ft = f + step * fdot
                ftn = ratio
                last = True
            sig_t, _, svd_ = _evaluate(s.dense, eps_hat, ft, k)
            if sig_t <= cur.sigma_k:
                break
            trace.add("free", eps_hat * ftn, sig_t, ftn, step, False)
            h /= params.gamma
            rejected = True
            if h < params.h_min:
                raise ContinuationStallError(
                    f"free gradient step underflow at eps={eps_hat * fn:.6g}",
                    best=_rescaled(replace(cur, h=params.h0), fn), trace=trace)
        fn = ftn
        cur = _state_from(svd_, ft, eps_hat, h if rejected else h * params.gamma, k,
                          state.layout, params, tangent=False)
        trace.add("free", eps_hat * fn, cur.sigma_k, fn, step, True)
        if last or _is_zero(cur, params):
            return _rescaled(cur, fn)
    raise ContinuationStallError(
        f"perturbation norm did not reach {ratio:.6g} within {params.max_inner} steps",
        best=_rescaled(cur, fn), trace=trace)


def _rescaled(cur, fn):
    # S + eps_hat F == S + (eps_hat ||F||) (F / ||F||): same matrix, same triplet
    return replace(cur, e=cur.e / fn, epsilon=cur.epsilon * fn)


def _extract(pair, a_hat_pair, d, ell, cross_check):
    """Common factor of the perturbed pair, degrading to warnings on failure."""
    diag = {}
    triple = None
    factor_distance = math.nan
    try:
        triple, sdiag = subspace_gcd(a_hat_pair, d, ell)
        diag["subspace"] = sdiag
        _, factor_distance = recover_cofactors(pair, triple.c)
    except MatGcdError as exc:
        warnings.warn(f"factor extraction failed: {exc}", ExtractionWarning, stacklevel=3)
        diag["extraction_error"] = str(exc)
    if cross_check:
        try:
            diag["echelon"] = exact_gcd_echelon(a_hat_pair, tol=1e-7, expected_degree=d)
        except MatGcdError as exc:
            diag["echelon_error"] = str(exc)
    return triple, factor_distance, diag


def agcd_ode(pair, d, params=None, ell=None, trace=None, cross_check=False):
    """Approximate common right factor of degree ``d`` by the two-level ODE method.

    Parameters
    ----------
    pair : PolyPair
        Data in right orientation.
    d : int
        Degree of the sought common factor.
    params : OdeParams, optional
    ell : int, optional
        Resultant window, default ``n (q + 1)``.
    trace : OdeTrace, optional
        Appended to in place when given.
    cross_check : bool
        Also run the echelon extractor on the result (stored in
        ``diagnostics['echelon']``).

    Returns
    -------
    result : GcdResult
    trace : OdeTrace

    Raises
    ------
    ConvergenceError
        After ``params.max_outer`` outer updates; ``err.best`` is the
        unconverged :class:`GcdResult` for the last iterate.
    """
    params = params or OdeParams()
    trace = OdeTrace() if trace is None else trace
    if d < 1:
        raise ValueError("factor degree must be at least 1")
    t0 = time.perf_counter()
    s = build_resultant(pair, ell)
    layout = s.layout
    k = pair.cols * d
    if k > layout.shape[1]:
        raise ValueError(f"factor degree {d} too large for this resultant")

    sig0, _, _, smax0 = target_triplet(s.dense, k, warn=False)
    if sig0 <= params.tol * smax0:
        trace.add("init", 0.0, sig0, 0.0, 0.0, True)
        triple, fdist, diag = _extract(pair, pair, d, ell, cross_check)
        res = GcdResult(pair.a, pair.b, triple, 0.0, 0.0, 0.0, True, fdist, sig0, smax0, 0, diag)
        return res, trace

    state = initial_state(s, k, params)
    trace.add("init", state.epsilon, state.sigma_k, 1.0, state.h, True)
    lower = state if params.eps0 is None else None
    state = _inner(s, state, params, trace)
    if _is_zero(state, params) and lower is None and sig0 < state.epsilon:
        # a user-supplied eps0 may already overshoot; sigma_k(S) bounds the optimum below
        lower = make_state(s, state.e, sig0, k, params)
    outer = 0
    converged = _is_zero(state, params)
    if converged and lower is not None and lower.epsilon < state.epsilon:
        state = _bisect(s, lower, state, params, trace)
    path = [(state.epsilon, state.sigma_k)]
    stalls = 0
    while not converged and outer < params.max_outer:
        outer += 1
        eps = state.epsilon
        if params.delta is not None:
            step = params.delta
        else:
            slope = abs(np.vdot(state.e, state.projected_gradient()))
            step = min(state.sigma_k / slope, eps) if slope > 0 else eps
            step = max(step, 1e-12 * max(eps, 1.0))
        try:
            moved = free_gradient_phase(s, state, eps + step, params, trace)
        except ContinuationStallError as exc:
            log.warning("%s", exc)
            stalls += 1
            if stalls > params.max_stalls:
                state = exc.best
                break
            if stalls == 1:
                # settle the non-stationary stall point first
                nxt = exc.best
            else:
                # the flow is stuck at a kink: take the plain continuation
                # step, same direction E at the larger size
                jump = eps + step * 2.0 ** (stalls - 2)
                nxt = make_state(s, exc.best.e, jump, k, params)
                trace.add("restart", nxt.epsilon, nxt.sigma_k, 1.0, nxt.h, True)
            reached = _inner(s, nxt, params, trace)
            if reached.sigma_k >= state.sigma_k and not _is_zero(reached, params):
                continue
            stalls = 0
            converged = _is_zero(reached, params)
            path.append((reached.epsilon, reached.sigma_k))
            if converged and reached.epsilon > state.epsilon:
                reached = _bisect(s, state, reached, params, trace)
            state = reached
            continue
        stalls = 0
        if _is_zero(moved, params):
            state, converged = moved, True
            path.append((state.epsilon, state.sigma_k))
            break
        reached = _inner(s, moved, params, trace)
        converged = _is_zero(reached, params)
        path.append((reached.epsilon, reached.sigma_k))
        if converged:
            # the free phase stopped short of zero, so eps + step may overshoot
            reached = _bisect(s, state, reached, params, trace)
        state = reached
        log.debug("outer %d: eps=%.8g sigma_k=%.3e", outer, state.epsilon, state.sigma_k)

    s_hat = SylvesterMatrix(layout, s.dense + state.epsilon * state.e)
    hat = read_coefficients(s_hat)
    eps = state.epsilon
    triple, fdist, diag = _extract(pair, hat, d, ell, cross_check)
    diag["runtime_s"] = time.perf_counter() - t0
    # (eps, sigma_k) after each continuation step, before any bisection
    diag["outer_steps"] = path
    diag["outer_path"] = _nondominated(path)
    res = GcdResult(hat.a, hat.b, triple, eps, eps, dist(pair, hat), converged, fdist,
                    state.sigma_k, state.sigma_max, outer, diag)
    if not converged:
        raise ConvergenceError(
            f"sigma_k={state.sigma_k:.3e} still above tolerance after {outer} outer steps",
            best=res, trace=trace)
    log.info("ode: d=%d eps=%.8g distance=%.8g outer=%d", d, eps, res.coeff_distance, outer)
    return res, trace


def _nondominated(path):
    """Drop records beaten by a later one in both ``eps`` and ``sigma_k``.

    The free flow ``F' = -G`` need not grow ``||F||`` near a kink, so the
    last step can reach ``sigma_k = 0`` at a slightly smaller size than the
    previous record; that record was then not a minimizer at its size.
    """
    out = []
    for i, (eps, sig) in enumerate(path):
        if not any(e2 <= eps and s2 <= sig and (e2, s2) != (eps, sig) for e2, s2 in path[i + 1:]):
            out.append((float(eps), float(sig)))
    return out


def _bisect(s, lo, hi, params, trace):
    """Shrink ``[lo.epsilon, hi.epsilon]`` around the smallest size reaching ``sigma_k = 0``.

    ``lo`` has positive ``sigma_k``, ``hi`` is singular. Each trial size is
    reached from ``lo`` by a free phase followed by an inner phase; a
    ``restart`` row in the trace marks every return to ``lo``.
    """
    for _ in range(200):
        if hi.epsilon - lo.epsilon <= params.refine_tol * hi.epsilon:
            break
        mid = 0.5 * (lo.epsilon + hi.epsilon)
        trace.add("restart", lo.epsilon, lo.sigma_k, 1.0, lo.h, True)
        try:
            st = free_gradient_phase(s, lo, mid, params, trace)
        except ContinuationStallError as exc:
            log.debug("%s", exc)
            break
        if not _is_zero(st, params):
            st = _inner(s, st, params, trace)
        if _is_zero(st, params):
            hi = st
        else:
            lo = st
    return hi


def _inner(s, state, params, trace):
    try:
        state, _ = inner_iteration(s, state, params, trace)
    except StalledIntegrationError as exc:
        log.debug("%s", exc)
        state = exc.best
    return state
