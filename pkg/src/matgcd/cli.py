"""Command-line front end: single runs, noise sweeps, ODE traces, controllability.

Exit codes: 0 success, 2 solver did not converge (best iterate still
written), 1 bad input or other error.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .control import IoSystem, distance_to_uncontrollability, is_controllable
from .errors import ConvergenceError, MatGcdError
from .matpoly import (MatPoly, PolyPair, add_noise_pair, random_with_common_factor,
                      transpose, transpose_pair)
from .odegcd import OdeParams, OdeTrace, agcd_ode
from .subspace import subspace_gcd

log = logging.getLogger("matgcd")

SWEEP_HEADER = ["noise_level", "trial", "method", "distance", "runtime_ms", "converged"]
SUMMARY_HEADER = ["noise_level", "method", "mean_distance", "trials", "converged"]
LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class InputError(Exception):
    """Bad command-line input (exit code 1)."""


def _setup_logging():
    name = os.environ.get("AGCD_LOG", "quiet").strip().lower()
    level = LOG_LEVELS.get(name, logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)
    logging.captureWarnings(True)
    if level > logging.WARNING:
        warnings.simplefilter("ignore")


# ---------------------------------------------------------------- file I/O

def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _poly(data, where):
    if not isinstance(data, dict):
        raise InputError(f"{where}: expected a polynomial object")
    try:
        return MatPoly.from_dict(data)
    except (MatGcdError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from None


def load_pair(paths, side="right"):
    """Pair from one ``{"a": ..., "b": ...}`` file or two polynomial files."""
    if len(paths) == 1:
        data = _load_json(paths[0])
        if not isinstance(data, dict):
            raise InputError(f"{paths[0]}: expected an object with fields 'a' and 'b'")
        for key in ("a", "b"):
            if key not in data:
                raise InputError(f"{paths[0]}: missing field '{key}'")
        a, b = _poly(data["a"], f"{paths[0]} field 'a'"), _poly(data["b"], f"{paths[0]} field 'b'")
    elif len(paths) == 2:
        a, b = (_poly(_load_json(p), p) for p in paths)
    else:
        raise InputError("give one pair file or two polynomial files")
    try:
        return transpose_pair(a, b) if side == "left" else PolyPair(a, b)
    except MatGcdError as exc:
        raise InputError(str(exc)) from None


def _write_text(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _orient(p, side):
    return transpose(p) if side == "left" else p


def _triple_dict(triple, side):
    if triple is None:
        return None
    return {"factor": _orient(triple.c, side).to_dict(),
            "abar": _orient(triple.abar, side).to_dict(),
            "bbar": _orient(triple.bbar, side).to_dict()}


# ---------------------------------------------------------------- solvers

def ode_params(args):
    kw = {}
    for name in ("tol", "eps0", "delta", "h0", "gamma"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = val
    try:
        return OdeParams(**kw)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _run_one(method, pair, d, ell, params, trace=None):
    """``(payload, converged)`` for one method in right orientation."""
    if method == "subspace":
        triple, diag = subspace_gcd(pair, d, ell)
        hat = triple.product()
        return {"a_hat": hat.a, "b_hat": hat.b, "triple": triple,
                "distance": diag.distance, "converged": True,
                "diagnostics": {"nullspace_gap": diag.nullspace_gap,
                                "residual": diag.residual,
                                "k_matrix_singulars": diag.k_matrix_singulars.tolist()}}, True
    try:
        res, _ = agcd_ode(pair, d, params, ell, trace)
    except ConvergenceError as exc:
        res = exc.best
    return {"a_hat": res.a_hat, "b_hat": res.b_hat, "triple": res.triple,
            "distance": res.coeff_distance, "converged": res.converged,
            "diagnostics": {"epsilon": res.epsilon, "sigma_k": res.sigma_k,
                            "sigma_max": res.sigma_max, "factor_distance": res.factor_distance,
                            "outer_iterations": res.outer_iterations}}, res.converged


def _payload_json(p, side):
    out = {"a_hat": _orient(p["a_hat"], side).to_dict(),
           "b_hat": _orient(p["b_hat"], side).to_dict(),
           "distance": p["distance"], "converged": p["converged"],
           "diagnostics": _jsonable(p["diagnostics"])}
    out.update(_triple_dict(p["triple"], side) or {"factor": None})
    return out


def _jsonable(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, float) and not np.isfinite(v):
            v = None
        out[k] = v
    return out


def _methods(name):
    return ["subspace", "ode"] if name == "both" else [name]


# ---------------------------------------------------------------- commands

def cmd_run(args):
    pair = load_pair(args.inputs, args.side)
    params = ode_params(args)
    trace = OdeTrace() if args.trace else None
    results, ok = {}, True
    for method in _methods(args.method):
        payload, conv = _run_one(method, pair, args.d, args.ell, params, trace)
        results[method] = _payload_json(payload, args.side)
        ok = ok and conv
    doc = {"side": args.side, "d": args.d, "results": results}
    _write_text(args.out, json.dumps(doc, indent=2) + "\n")
    if trace is not None:
        _write_text(args.trace, trace.to_csv())
    return 0 if ok else 2


def cmd_trace(args):
    pair = load_pair(args.inputs, args.side)
    trace = OdeTrace()
    try:
        res, _ = agcd_ode(pair, args.d, ode_params(args), args.ell, trace)
        ok = res.converged
    except ConvergenceError:
        ok = False
    _write_text(args.out, trace.to_csv())
    return 0 if ok else 2


def cmd_control(args):
    data = _load_json(args.inputs[0])
    if not isinstance(data, dict):
        raise InputError(f"{args.inputs[0]}: expected an object with fields 'p' and 'q'")
    try:
        system = IoSystem.from_dict(data)
    except (MatGcdError, ValueError) as exc:
        raise InputError(f"{args.inputs[0]}: {exc}") from None
    controllable, margin = is_controllable(system, args.rank_tol)
    doc = {"controllable": controllable, "margin": margin}
    code = 0
    if not args.no_distance:
        try:
            r = distance_to_uncontrollability(system, ode_params(args))
        except ConvergenceError as exc:
            r, code = exc.best, 2
        if r is not None:
            doc.update({"distance": r.distance, "witness": r.witness.to_dict(),
                        "monic_distance": r.monic_distance if np.isfinite(r.monic_distance)
                        else None,
                        "monic_witness": r.monic_witness.to_dict() if r.monic_witness else None,
                        "converged": r.gcd.converged})
    _write_text(args.out, json.dumps(doc, indent=2) + "\n")
    return code


def trial_seed(base, trial, level_index):
    return base + trial + 1000 * level_index


def sweep_trial(job):
    """One (level, trial) cell of a sweep; returns a list of record tuples."""
    m, n, d, level, li, trial, seed, methods, params, ell = job
    rng = np.random.default_rng(trial_seed(seed, trial, li))
    exact, _ = random_with_common_factor(m, n, d, rng)
    noisy = add_noise_pair(exact, level, rng)
    records = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for method in methods:
            t0 = time.perf_counter()
            try:
                payload, conv = _run_one(method, noisy, d, ell, params)
                distance = float(payload["distance"])
            except MatGcdError as exc:
                log.info("trial %d level %g %s failed: %s", trial, level, method, exc)
                distance, conv = float("nan"), False
            ms = (time.perf_counter() - t0) * 1e3
            records.append((level, trial, method, distance, ms, conv))
    return records


def run_sweep(m, n, d, noise_levels, trials, seed, methods, params=None, ell=None, jobs=1):
    """All sweep records, sorted by (level, trial, method)."""
    params = params or OdeParams()
    work = [(m, n, d, lev, li, t, seed, tuple(methods), params, ell)
            for li, lev in enumerate(noise_levels) for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(sweep_trial, work))
    else:
        chunks = [sweep_trial(w) for w in work]
    order = {name: i for i, name in enumerate(("subspace", "ode"))}
    recs = [r for c in chunks for r in c]
    recs.sort(key=lambda r: (r[0], r[1], order[r[2]]))
    return recs


def sweep_csv(records, timing=False):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for level, trial, method, distance, ms, conv in records:
        w.writerow([repr(float(level)), trial, method, repr(distance),
                    f"{ms:.3f}" if timing else "", "true" if conv else "false"])
    return buf.getvalue()


def summarize(records):
    """Per (level, method) mean distance over the finite records."""
    groups = {}
    for level, _, method, distance, _, conv in records:
        g = groups.setdefault((level, method), [[], 0, 0])
        if np.isfinite(distance):
            g[0].append(distance)
        g[1] += 1
        g[2] += bool(conv)
    return [(lev, meth, float(np.mean(v[0])) if v[0] else float("nan"), v[1], v[2])
            for (lev, meth), v in groups.items()]


def summary_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for lev, meth, mean, count, conv in rows:
        w.writerow([repr(float(lev)), meth, repr(mean), count, conv])
    return buf.getvalue()


def _companion(path, suffix):
    p = Path(path)
    return p.with_name(p.stem + suffix)


def cmd_sweep(args):
    levels = args.noise_levels
    if any(not 0 <= x <= 1 for x in levels):
        raise InputError("noise levels must lie in [0, 1]")
    if args.trials < 1:
        raise InputError("--trials must be at least 1")
    if not 0 < args.d < args.n:
        raise InputError(f"need 0 < d < n, got d={args.d}, n={args.n}")
    methods = _methods(args.method)
    recs = run_sweep(args.m, args.n, args.d, levels, args.trials, args.seed, methods,
                     ode_params(args), args.ell, args.jobs)
    _write_text(args.out, sweep_csv(recs, args.timing))
    if args.out not in (None, "-"):
        _companion(args.out, "_summary.csv").write_text(summary_csv(summarize(recs)))
        meta = {
            "m": args.m, "n": args.n, "d": args.d, "noise_levels": levels,
            "trials": args.trials, "seed": args.seed, "methods": methods,
            "trial_seed": "seed + trial + 1000 * level_index",
            "instances": "monic right factor and cofactors with standard normal entries; "
                         "noise adds level * N(0, 1) to every coefficient entry",
            "distance": "coefficient distance to the returned pair; subspace uses "
                        "least-squares cofactors for its factor",
            "omitted": "no derivative-free (fminsearch-style) baseline is run",
        }
        _companion(args.out, "_meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------- parser

def _levels(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad noise level list '{text}'") from None


def _solver_flags(p):
    p.add_argument("--ell", type=int, help="resultant window (default n(q+1))")
    p.add_argument("--tol", type=float, help="relative zero tolerance for sigma_k")
    p.add_argument("--eps0", type=float, help="initial perturbation size")
    p.add_argument("--delta", type=float, help="fixed outer eps increment")
    p.add_argument("--h0", type=float, help="initial Euler step")
    p.add_argument("--gamma", type=float, help="step size growth/shrink factor")


class _Parser(argparse.ArgumentParser):
    # usage errors share exit code 1 with bad input; 2 means non-convergence
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="matgcd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="approximate common factor of one pair")
    run.add_argument("inputs", nargs="+", help="pair file, or two polynomial files")
    run.add_argument("--method", choices=["subspace", "ode", "both"], default="both")
    run.add_argument("-d", type=int, required=True, help="factor degree")
    run.add_argument("--side", choices=["right", "left"], default="right")
    run.add_argument("--out", help="result JSON (default stdout)")
    run.add_argument("--trace", help="write the ODE trace CSV here")
    _solver_flags(run)
    run.set_defaults(func=cmd_run)

    tr = sub.add_parser("trace", help="per-step ODE trace as CSV")
    tr.add_argument("inputs", nargs="+")
    tr.add_argument("-d", type=int, required=True)
    tr.add_argument("--side", choices=["right", "left"], default="right")
    tr.add_argument("--out")
    _solver_flags(tr)
    tr.set_defaults(func=cmd_trace)

    sw = sub.add_parser("sweep", help="noise sweep on planted instances")
    sw.add_argument("--m", type=int, default=2)
    sw.add_argument("--n", type=int, default=3)
    sw.add_argument("-d", type=int, default=1)
    sw.add_argument("--noise-levels", type=_levels,
                    default=[round(0.05 * i, 2) for i in range(1, 11)])
    sw.add_argument("--trials", type=int, default=50)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--method", choices=["subspace", "ode", "both"], default="both")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--timing", action="store_true",
                    help="fill runtime_ms (makes the CSV machine dependent)")
    sw.add_argument("--out")
    _solver_flags(sw)
    sw.set_defaults(func=cmd_sweep)

    ct = sub.add_parser("control", help="controllability and distance to uncontrollability")
    ct.add_argument("inputs", nargs=1, help='system file {"p": ..., "q": ...}')
    ct.add_argument("--rank-tol", type=float, default=1e-8)
    ct.add_argument("--no-distance", action="store_true")
    ct.add_argument("--out")
    _solver_flags(ct)
    ct.set_defaults(func=cmd_control)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging()
    try:
        return args.func(args)
    except (InputError, MatGcdError, ValueError) as exc:
        print(f"matgcd: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
