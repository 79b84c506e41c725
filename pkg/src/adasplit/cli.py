"""Command-line front end: ``adasplit {plan,solve,certify,bench}``.

Exit codes: 0 success, 1 unreadable problem file, 2 infeasible parameters,
3 iteration limit reached, 4 divergence, 5 certification violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from .certify import ProblemConfig
from .core import Regime, SplittingError
from .engine import Status, solve
from .fileio import ProblemFileError, load_problem, write_report, write_trace
from .params import (
    DEFAULT_ETA_FRACTION, InfeasiblePair, delta_range, diagnostic_plan, gamma_threshold,
    plan_for, plan_neutral, plan_strong, regime_of, suggest,
)
from .suites import SUITES, conical_suite

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_MAXITER, EXIT_DIVERGED, EXIT_VIOLATION = range(6)

__all__ = ["main", "build_parser"]


def _err(msg):
    print(msg, file=sys.stderr)


def _print_plan(plan):
    print(f"regime     {plan.regime.value}")
    print(f"gamma      {plan.gamma:.17g}")
    print(f"delta      {plan.delta:.17g}")
    print(f"lambda     {plan.lam:.17g}")
    print(f"eta        {plan.eta:.17g}")
    print(f"eta*       {plan.eta_star:.17g}")


def cmd_plan(args):
    a, b, s = args.alpha, args.beta, args.sigma
    try:
        if regime_of(a, b) is Regime.NEUTRAL:
            plan = (suggest(a, b, s) if args.gamma is None
                    else plan_neutral(a, b, s, args.gamma, DEFAULT_ETA_FRACTION))
            if args.delta is not None and not math.isclose(args.delta, plan.delta, rel_tol=1e-12):
                raise InfeasiblePair(f"neutral regime fixes delta = {plan.delta:.17g}")
        else:
            print(f"gamma_0    {gamma_threshold(a, b, s):.17g}")
            gamma = suggest(a, b, s).gamma if args.gamma is None else args.gamma
            rng = delta_range(a, b, s, gamma)
            print(f"Delta      {rng.discriminant:.17g}")
            print(f"1/delta in ({rng.inv_delta_lo:.17g}, {rng.inv_delta_hi:.17g})")
            delta = 1.0 / rng.midpoint if args.delta is None else args.delta
            plan = plan_strong(a, b, s, gamma, delta, DEFAULT_ETA_FRACTION)
    except SplittingError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_INFEASIBLE
    _print_plan(plan)
    return EXIT_OK


def _plan_from_file(pf, allow_diagnostic=False):
    p = pf.params or {}
    frac = p.get("eta_fraction", DEFAULT_ETA_FRACTION)
    make = diagnostic_plan if allow_diagnostic else plan_for
    return make(pf.problem, p.get("gamma"), p.get("delta"), frac)


def cmd_solve(args):
    try:
        pf = load_problem(args.problem)
    except (OSError, ProblemFileError) as exc:
        _err(f"cannot read problem file: {exc}")
        return EXIT_PARSE
    uncertified = (pf.params or {}).get("eta_fraction", DEFAULT_ETA_FRACTION) >= 1
    try:
        plan = _plan_from_file(pf, allow_diagnostic=uncertified)
    except SplittingError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_INFEASIBLE
    if uncertified:
        _err(f"warning: eta = {plan.eta:.6g} >= eta* = {plan.eta_star:.6g}, "
             "convergence is not guaranteed")
    report = solve(pf.problem, plan, pf.x0, tol_resid=args.tol * 1e-2, tol_kkt=args.tol,
                   max_iter=args.max_iter, allow_uncertified=uncertified)
    if args.out:
        write_report(report, args.out)
    if args.trace:
        write_trace(report, args.trace)
    print(f"status     {report.status.value}")
    print(f"iterations {report.n_iter}")
    print(f"kkt        {report.kkt:.6g}")
    print("shadow     " + " ".join(f"{v:.17g}" for v in report.final_shadow))
    return {Status.CONVERGED: EXIT_OK, Status.MAX_ITERS: EXIT_MAXITER,
            Status.DIVERGED: EXIT_DIVERGED}[report.status]


def cmd_certify(args):
    if args.problem is not None:
        if args.suite != "conical":
            _err("a problem file can only be certified with --suite conical")
            return EXIT_PARSE
        try:
            pf = load_problem(args.problem)
            plan = _plan_from_file(pf, allow_diagnostic=True)
        except (OSError, ProblemFileError) as exc:
            _err(f"cannot read problem file: {exc}")
            return EXIT_PARSE
        except SplittingError as exc:
            _err(f"{type(exc).__name__}: {exc}")
            return EXIT_INFEASIBLE
        res = conical_suite(args.samples or 1000, args.seed, config=ProblemConfig(pf.problem, plan))
    else:
        res = SUITES[args.suite](**({"samples": args.samples} if args.samples else {}),
                                 seed=args.seed)
    print(f"suite      {res.suite}")
    print(f"samples    {res.samples}")
    print(f"worst      {res.worst:.6g}  (tolerance {res.tol:.3g})")
    for k, v in res.details.items():
        print(f"{k:<10} {v}")
    if not res.passed:
        print("VIOLATION " + json.dumps(res.violation, sort_keys=True))
        return EXIT_VIOLATION
    print("ok")
    return EXIT_OK


def cmd_bench(args):
    from .bench import run_bench
    rows = run_bench(repeats=args.samples or 5, max_iter=args.max_iter, seed=args.seed)
    print(f"{'problem':<12} {'dim':>4} {'iters':>7} {'backend':<9} {'seconds':>10} {'speedup':>8}")
    for r in rows:
        print(f"{r['problem']:<12} {r['dim']:>4} {r['iters']:>7} {r['backend']:<9} "
              f"{r['seconds']:>10.5f} {r['speedup']:>8.2f}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="adasplit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="check or suggest step parameters")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True, help="use inf for C = 0")
    p.add_argument("--gamma", type=float)
    p.add_argument("--delta", type=float)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("solve", help="iterate a problem file to convergence")
    p.add_argument("problem")
    p.add_argument("--tol", type=float, default=1e-10, help="KKT tolerance")
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--out", help="report file (JSON)")
    p.add_argument("--trace", help="trace file (CSV)")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("certify", help="run a property suite")
    p.add_argument("problem", nargs="?", help="certify this problem's plan (conical only)")
    p.add_argument("--suite", choices=sorted(SUITES), required=True)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_certify)

    p = sub.add_parser("bench", help="compare compiled and pure-Python kernels")
    p.add_argument("--samples", type=int, help="repeats per case")
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
