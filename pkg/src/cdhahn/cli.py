"""Command-line front end: ``cdhahn poly | measure | sample | verify``.

Exit codes: 0 success, 1 a verification check failed, 2 bad input.
"""
import argparse
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from importlib import resources
import io
import json
import math
import os
import random
import sys
import time

import numpy as np

from .cdh_polynomials import eval_poly, favard_classify, growth_exponent
from .errors import ArgumentError, CdhError
from .harness_checks import (commutator_residual, jacobi_matrices,
                             linear_interpolation_residual,
                             quadratic_variance_matrix_identity)
from .markov_process import sample_ensemble, standard_form_states, write_trajectory_csv
from .measures import (MIXED, atom_masses_christoffel, density_eval, entrance_law,
                       entrance_limit_bound, entrance_limit_compare, marginal_law,
                       measure_to_json,
                       total_mass, transition_kernel)
from .params import CdhParams, ProcessParams
from .quadrature import (verify_chapman_kolmogorov, verify_marginal_evolution,
                         verify_martingale, verify_orthogonality)
from .weyl_symbolic import commutator_residual_operator, parse_operator

SUITES = ("orthogonality", "martingale", "chapman", "marginal-evolution", "normalization",
          "entrance-limit", "commutator", "qvar-matrix", "weyl", "determinacy")

TOLERANCES = {
    "orthogonality": 1e-9, "martingale": 1e-8, "martingale-rejection": 0.0,
    "chapman": 1e-8, "marginal-evolution": 1e-8, "normalization": 1e-6,
    "christoffel": 1e-8, "entrance-limit": 1e-12, "commutator": 0.0,
    "qvar-matrix": 0.0, "linear-interpolation": 0.0, "weyl": 0.0, "determinacy": 0.1,
}


def _fmt(v):
    return f"{float(v):.17g}"


def _threads():
    try:
        return max(1, int(os.environ.get("CDH_THREADS", "") or os.cpu_count() or 1))
    except ValueError:
        raise ArgumentError("CDH_THREADS must be an integer")


# ------------------------------------------------------------ parameter helpers


def _cdh_from(d):
    if "pair_re" in d:
        return CdhParams.conjugate(d["alpha"], d["pair_re"], d["pair_im"])
    return CdhParams.real(d["alpha"], d["beta"], d["gamma"])


def _process_from(d):
    if "A_re" in d:
        return ProcessParams.conjugate(d["A_re"], d["A_im"], d["C"])
    return ProcessParams.real(d["A"], d["B"], d["C"])


def _time(v, pp):
    return pp.tau if v == "tau" else float(v)


# ------------------------------------------------------------ verification runners


def _run_orthogonality(d):
    p = _cdh_from(d)
    fav = favard_classify(p)
    # InfiniteSupport is only certified up to the scan limit
    params = dict(d, favard_kind=fav.kind, favard_scan_limit=fav.scan_limit)
    return [("orthogonality", params, verify_orthogonality(p, int(d.get("n_max", 8))))]


def _run_martingale(d):
    pp = _process_from(d)
    try:
        res = verify_martingale(pp, _time(d["s"], pp), float(d["t"]), float(d["x"]), int(d.get("n_max", 8)))
    except ArgumentError:
        # documented refusal off the state space
        return [("martingale-rejection", d, 0.0)]
    return [("martingale", d, res)]


def _run_chapman(d):
    return [("chapman", d, verify_chapman_kolmogorov(d["C"], d["s"], d["t"], d["u"], d["x"],
                                                     int(d.get("degree", 8))))]


def _run_marginal_evolution(d):
    pp = _process_from(d)
    return [("marginal-evolution", d,
             verify_marginal_evolution(pp, _time(d["s"], pp), float(d["t"]), int(d.get("degree", 8))))]


def _run_normalization(d):
    pp = _process_from(d)
    t = float(d["t"])
    m = marginal_law(pp, t)
    out = [("normalization", d, abs(total_mass(m) - 1.0))]
    if m.atoms:
        # atom masses of the marginal come from the closed forms
        chris = atom_masses_christoffel(pp.marginal_cdh(t), m.locations)
        rel = max(abs(c - k) / abs(k) for c, k in zip(chris, m.masses))
        out.append(("christoffel", d, rel))
    return out


def _run_entrance_limit(grid):
    out = []
    for A in grid["A"]:
        for C in grid["C"]:
            for t in grid["t"]:
                for x in grid["x"]:
                    d = {"A": A, "C": C, "t": t, "x": x, "B": list(grid["B"])}
                    worst = 0.0
                    prev = None
                    for B in grid["B"]:
                        scaled, ent = entrance_limit_compare(A, C, t, B, x)
                        ratio = scaled / ent
                        worst = max(worst, ratio - 1.0, entrance_limit_bound(B, t, x) - ratio)
                        if prev is not None:
                            worst = max(worst, (prev - scaled) / ent)
                        prev = scaled
                    out.append(("entrance-limit", d, max(worst, 0.0)))
    return out


def _rand_q(rng, lo=-20, hi=20, den=9):
    return Fraction(rng.randint(lo, hi), rng.randint(1, den))


def _q(v):
    return Fraction(str(v))


def _run_commutator(cfg, seed):
    out = []
    for p in cfg.get("points", []):
        jt = jacobi_matrices(_q(p["A"]), _q(p["B"]), _q(p["C"]), int(p["K"]))
        out.append(("commutator", p, float(commutator_residual(jt))))
    rng = random.Random(seed)
    for i in range(int(cfg.get("random", 0))):
        A, B, C = (_rand_q(rng) for _ in range(3))
        K = int(cfg.get("K", 16))
        p = {"A": str(A), "B": str(B), "C": str(C), "K": K, "draw": i}
        out.append(("commutator", p, float(commutator_residual(jacobi_matrices(A, B, C, K)))))
    return out


def _qv_point(A, B, C, s, t, u, K, p):
    res = quadratic_variance_matrix_identity(A, B, C, s, t, u, K)
    lin = linear_interpolation_residual(jacobi_matrices(A, B, C, K), s, t, u)
    return [("qvar-matrix", p, float(res)), ("linear-interpolation", p, float(lin))]


def _run_qvar(cfg, seed):
    out = []
    for p in cfg.get("points", []):
        out += _qv_point(*(_q(p[k]) for k in "ABCstu"), int(p["K"]), p)
    rng = random.Random(seed + 1)
    count = int(cfg.get("random", 0))
    i = 0
    while i < count:
        A, B, C = (_rand_q(rng) for _ in range(3))
        s, t, u = sorted(_rand_q(rng) for _ in range(3))
        if not s < t < u:
            continue
        K = int(cfg.get("K", 14))
        p = {"A": str(A), "B": str(B), "C": str(C), "s": str(s), "t": str(t), "u": str(u),
             "K": K, "draw": i}
        out += _qv_point(A, B, C, s, t, u, K, p)
        i += 1
    return out


def _run_weyl(expr):
    op = commutator_residual_operator() if expr is None else parse_operator(expr)
    params = {"expr": expr if expr is not None else "X Y - Y X - 1/2 X^2 - 2 Y",
              "normal_form": str(op)}
    return [("weyl", params, float(len(op.terms)))]


def _run_determinacy(d):
    p = _cdh_from(d)
    slope = growth_exponent(p)
    return [("determinacy", dict(d, slope=slope), abs(slope - (2 * p.alpha - 1)))]


_POINTWISE = {
    "orthogonality": ("orthogonality", _run_orthogonality),
    "martingale": ("martingale", _run_martingale),
    "chapman": ("chapman", _run_chapman),
    "marginal-evolution": ("marginal_evolution", _run_marginal_evolution),
    "normalization": ("normalization", _run_normalization),
    "determinacy": ("determinacy", _run_determinacy),
}


def _guarded(suite, fn, d):
    try:
        return fn(d)
    except CdhError as exc:
        raise ArgumentError(f"{suite} grid point {json.dumps(d)}: {exc}") from exc
    except (KeyError, TypeError) as exc:
        raise ArgumentError(f"{suite} grid point {json.dumps(d)} is malformed: {exc!r}") from exc


def _tasks(suite, grid, seed, expr):
    """List of zero-argument callables, each returning raw (check, params, residual) rows."""
    if suite in _POINTWISE:
        key, fn = _POINTWISE[suite]
        return [lambda d=d, fn=fn: _guarded(suite, fn, d) for d in grid.get(key, [])]
    if suite == "entrance-limit":
        return [lambda: _run_entrance_limit(grid["entrance_limit"])] if "entrance_limit" in grid else []
    if suite == "commutator":
        return [lambda: _run_commutator(grid["commutator"], seed)] if "commutator" in grid else []
    if suite == "qvar-matrix":
        return [lambda: _run_qvar(grid["qvar_matrix"], seed)] if "qvar_matrix" in grid else []
    if suite == "weyl":
        return [lambda: _run_weyl(expr)]
    raise ArgumentError(f"unknown suite {suite!r}")


def _timed(task, timings):
    t0 = time.perf_counter()
    rows = task()
    ms = int(round((time.perf_counter() - t0) * 1000)) if timings else 0
    return [(c, p, r, ms) for c, p, r in rows]


def run_verification(suites, grid, seed=0, expr=None, timings=True, threads=1):
    """Reports ordered by (suite, grid index) whatever the completion order."""
    tasks = []
    for suite in suites:
        tasks += _tasks(suite, grid, seed, expr)
    if not tasks:
        raise ArgumentError("the grid has no points for the selected suite")
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(lambda f: _timed(f, timings), tasks))
    else:
        results = [_timed(f, timings) for f in tasks]
    reports = []
    for rows in results:
        for check, params, residual, ms in rows:
            tol = TOLERANCES[check]
            residual = float(residual)
            if not math.isfinite(residual):
                # JSON has no inf/nan; flag it and fail the check
                params = dict(params, nonfinite_residual=repr(residual))
                residual = sys.float_info.max
            reports.append({"check": check, "params": params, "residual": residual,
                            "tolerance": tol, "pass": bool(residual <= tol), "runtime_ms": ms})
    return reports


def load_grid(cfg):
    if cfg == "default":
        text = resources.files("cdhahn").joinpath("data/default_grid.json").read_text()
    else:
        try:
            with open(cfg) as fh:
                text = fh.read()
        except OSError as exc:
            raise ArgumentError(f"cannot read grid file: {exc}")
    try:
        grid = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArgumentError(f"grid file does not parse: {exc}")
    if not isinstance(grid, dict) or not grid:
        raise ArgumentError("grid is empty")
    return grid


# ------------------------------------------------------------ commands


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ArgumentError(f"cannot parse number list {text!r}")


def cmd_poly(args, out):
    if args.pair_re is not None or args.pair_im is not None:
        if args.pair_re is None or args.pair_im is None:
            raise ArgumentError("give both --pair-re and --pair-im")
        p = CdhParams.conjugate(args.alpha, args.pair_re, args.pair_im)
    else:
        if args.beta is None or args.gamma is None:
            raise ArgumentError("give --beta and --gamma, or a conjugate pair")
        p = CdhParams.real(args.alpha, args.beta, args.gamma)
    xs = _floats(args.x)
    if not xs:
        raise ArgumentError("empty x grid")
    vals = np.atleast_1d(eval_poly(p, args.n, np.array(xs)))
    out.write("x,value\n")
    for x, v in zip(xs, vals):
        out.write(f"{_fmt(x)},{_fmt(v)}\n")
    return 0


def _process_args(args):
    if args.A_im:
        return ProcessParams.conjugate(args.A, args.A_im, args.C)
    if args.B is None:
        raise ArgumentError("--B is required for real parameters")
    return ProcessParams.real(args.A, args.B, args.C)


def cmd_measure(args, out):
    if args.which == "marginal":
        pp = _process_args(args)
        m = marginal_law(pp, _time(args.t, pp))
    elif args.which == "kernel":
        m = transition_kernel(args.C, args.s, float(args.t), args.x)
    else:
        m = entrance_law(args.A, args.C, float(args.t))
    out.write(json.dumps(measure_to_json(m), indent=2) + "\n")
    if args.density_grid:
        xs = _floats(args.density_grid)
        if m.kind != MIXED:
            raise ArgumentError(f"a {m.kind} measure has no density table")
        buf = out if args.density_out is None else open(args.density_out, "w")
        try:
            if args.density_out is None:
                buf.write("\n")
            buf.write("x,density\n")
            for x in xs:
                buf.write(f"{_fmt(x)},{_fmt(density_eval(m, x) if x > 0 else 0.0)}\n")
        finally:
            if buf is not out:
                buf.close()
    return 0


def cmd_sample(args, out):
    pp = _process_args(args)
    times = [_time(v.strip(), pp) for v in args.times.split(",") if v.strip()]
    if not times:
        raise ArgumentError("empty time grid")
    if args.n < 1:
        raise ArgumentError("--n must be at least 1")
    states = sample_ensemble(pp, times, args.n, args.seed, threads=_threads())
    times = np.array(times)
    if args.standard_form:
        times, states = standard_form_states(pp, times, states)
    buf = out if args.out is None else open(args.out, "w", newline="")
    try:
        write_trajectory_csv(buf, times, states)
    finally:
        if buf is not out:
            buf.close()
    return 0


def cmd_verify(args, out):
    grid = load_grid(args.grid)
    suites = SUITES if args.suite == "all" else (args.suite,)
    if args.expr is not None and args.suite != "weyl":
        raise ArgumentError("--expr applies to the weyl suite")
    threads = args.threads if args.threads is not None else _threads()
    reports = run_verification(suites, grid, seed=args.seed, expr=args.expr,
                               timings=not args.no_timings, threads=threads)
    out.write(json.dumps(reports, indent=2) + "\n")
    return 0 if all(r["pass"] for r in reports) else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="cdhahn", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("poly", help="evaluate a monic polynomial on a grid")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--pair-re", type=float)
    p.add_argument("--pair-im", type=float)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--x", required=True, help="comma-separated points")
    p.set_defaults(func=cmd_poly)

    m = sub.add_parser("measure", help="print a classified measure as JSON")
    m.add_argument("which", choices=("marginal", "kernel", "entrance"))
    m.add_argument("--A", type=float)
    m.add_argument("--A-im", type=float, default=0.0, help="imaginary part of A (B = conj A)")
    m.add_argument("--B", type=float)
    m.add_argument("--C", type=float, required=True)
    m.add_argument("--s", type=float)
    m.add_argument("--t", required=True, help="time, or 'tau' for marginals")
    m.add_argument("--x", type=float)
    m.add_argument("--density-grid", help="comma-separated x values for a density table")
    m.add_argument("--density-out", help="write the density table here instead of stdout")
    m.set_defaults(func=cmd_measure)

    s = sub.add_parser("sample", help="sample trajectories to CSV")
    s.add_argument("--A", type=float, required=True)
    s.add_argument("--A-im", type=float, default=0.0)
    s.add_argument("--B", type=float)
    s.add_argument("--C", type=float, required=True)
    s.add_argument("--times", required=True, help="comma-separated increasing times; 'tau' allowed")
    s.add_argument("--n", type=int, default=1, help="number of replicates")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--standard-form", action="store_true",
                   help="map states to the standard-form harness and relabel the clock")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    v = sub.add_parser("verify", help="run verification suites, print JSON reports")
    v.add_argument("--suite", default="all", choices=SUITES + ("all",))
    v.add_argument("--grid", default="default", help="'default' or a JSON grid file")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--expr", help="operator expression for the weyl suite")
    v.add_argument("--threads", type=int)
    v.add_argument("--no-timings", action="store_true", help="report runtime_ms as 0")
    v.set_defaults(func=cmd_verify)
    return ap


def _check_measure_args(args):
    need = {"marginal": ("A", "C"), "kernel": ("C", "s", "x"), "entrance": ("A", "C")}[args.which]
    missing = [n for n in need if getattr(args, n) is None]
    if missing:
        raise ArgumentError(f"{args.which} needs --{', --'.join(missing)}")
    if args.which != "marginal" and args.t == "tau":
        raise ArgumentError("'tau' is only meaningful for marginals")


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    buf = io.StringIO()
    try:
        if args.command == "measure":
            _check_measure_args(args)
        code = args.func(args, buf)
    except (CdhError, ValueError) as exc:
        sys.stderr.write(f"cdhahn: error: {exc}\n")
        return 2
    out.write(buf.getvalue())
    return code


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
