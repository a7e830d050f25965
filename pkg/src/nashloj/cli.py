"""Command-line front end.  Every subcommand prints one JSON document.

Exit codes: 0 pass or informational, 1 failed verdict or numerical error,
2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

import numpy as np

from . import bounds as bd
from .elimination import (build_case_I_system, build_case_II_system, coefficient_residual,
                          eliminate_to_curve, lemma58_bound, slope_candidates)
from .empirical import fit_exponent, sample_profile
from .gradflow import check_length_bound, flow
from .nashfn import NashBranch, degree_at
from .polycore import render
from .report import SCHEMA, build_report, frac_text, sanitize, suffdeg_audit


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _emit(doc, out=None):
    text = json.dumps(sanitize(doc), indent=2, sort_keys=False, allow_nan=False)
    stream = out or sys.stdout
    stream.write(text + "\n")


def _assumptions(args):
    return bd.Assumptions(
        partial_y_nonzero=args.partial_y_nonzero,
        isolated_zero=args.isolated_zero,
        polynomial_f=args.polynomial,
        rational_f=args.rational,
    )


def _add_flags(p):
    p.add_argument("--n", type=int, required=True, help="number of variables")
    p.add_argument("--d", type=int, required=True, help="degree of the defining polynomial")
    p.add_argument("--partial-y-nonzero", action="store_true")
    p.add_argument("--polynomial", action="store_true")
    p.add_argument("--isolated-zero", action="store_true")
    p.add_argument("--rational", action="store_true")


def cmd_bounds(args):
    rep = bd.bound_report(args.n, args.d, _assumptions(args), rho=args.rho)
    doc = {"schema": SCHEMA, "command": "bounds"}
    doc.update(rep.as_dict())
    doc["best_rho_bound"] = rep.best_rho
    new, prior, sharper = bd.prior_bound_comparison(args.n, args.d)
    doc["prior_bound_comparison"] = {"new_bound": new, "prior_bound": prior, "sharper": sharper}
    return doc, 0


def cmd_suffdeg(args):
    k, entries = bd.sufficiency_degree(args.n, args.d, _assumptions(args))
    best = next(e for e in entries if e.best)
    doc = {"schema": SCHEMA, "command": "suffdeg", "k": k, "source": best.source,
           "candidates": [e.as_dict() for e in entries]}
    code = 0
    if args.branch:
        b = NashBranch.from_json(args.branch)
        kk = args.k or k
        audit = suffdeg_audit(b, kk, seed=args.seed)
        doc["audit"] = audit.as_dict()
        code = 0 if audit.passed else 1
    return doc, code


def cmd_estimate(args):
    b = NashBranch.from_json(args.branch)
    center = _floats(args.center) if args.center else None
    prof = sample_profile(b, center=center, epsilon=args.epsilon, level_count=args.levels,
                          starts=args.starts, seed=args.seed, threads=args.threads)
    fit = fit_exponent(prof, method=args.method)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["log_abs_y", "log_sqrt_u", "sign"])
            for lv in prof.converged():
                w.writerow([repr(float(np.log(abs(lv.y)))), repr(float(0.5 * np.log(lv.u))),
                            "+" if lv.y > 0 else "-"])
    doc = {"schema": SCHEMA, "command": "estimate", "profile": [lv.as_dict() for lv in prof.levels],
           "epsilon": prof.epsilon}
    doc.update(fit.as_dict())
    return doc, 0


def cmd_eliminate(args):
    b = NashBranch.from_json(args.branch)
    if args.case == "II":
        if args.r is None:
            raise UsageError("--case II requires --r")
        system = build_case_II_system(b.P, args.r, args.route, center=b.seed_x)
    else:
        system = build_case_I_system(b.P, args.route)
    if args.method == "resultant":
        curve = eliminate_to_curve(system, "resultant")
    else:
        curve = eliminate_to_curve(system, "interpolate", branch=b, cap=args.cap, seed=args.seed)
    cands = slope_candidates(curve)
    doc = {
        "schema": SCHEMA,
        "command": "eliminate",
        "case": args.case,
        "route": args.route,
        "method": args.method,
        "generators": system.labels(),
        "Q": render(curve.Q),
        "D": curve.D,
        "lemma58": frac_text(lemma58_bound(curve)),
        "slopes": [frac_text(s) for s in cands.slopes],
        "residual": curve.residual,
        "budget": system.degree_budget,
        "fact_5_7_bound": system.fact_5_7_bound,
    }
    doc.update({k: v for k, v in curve.as_dict().items() if k in ("discarded", "label", "zero_dimensional")})
    return doc, 0


def cmd_flow(args):
    b = NashBranch.from_json(args.branch)
    traj = flow(b, _floats(args.start), stop_tol_f=args.tol)
    doc = {"schema": SCHEMA, "command": "flow"}
    doc.update(traj.summary())
    code = 0
    if args.check:
        rho, C = _floats(args.check)
        from .empirical import zero_set_sample

        chk = check_length_bound(traj, rho, C, zero_set_sample(b, seed=args.seed), b, b.region)
        doc["check"] = chk.as_dict()
        code = 1 if chk.verdict == "fail" else 0
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(b.n)] + ["f"])
            for p, fv in zip(traj.points, traj.f_values):
                w.writerow([repr(float(v)) for v in p] + [repr(float(fv))])
    return doc, code


def cmd_report(args):
    b = NashBranch.from_json(args.branch)
    doc = build_report(b, seed=args.seed, threads=args.threads, r=args.r, levels=args.levels,
                       starts=args.starts, flow_starts=args.flow_starts)
    return doc, 0 if doc["passed"] else 1


class UsageError(Exception):
    pass


def build_parser():
    p = argparse.ArgumentParser(prog="nashloj", description="Gradient-inequality exponents for Nash functions.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bounds", help="closed-form exponent bounds")
    _add_flags(s)
    s.add_argument("--rho", type=Fraction, default=None, help="exponent for the 1/(1 - rho) distance bound")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("suffdeg", help="sufficiency degree of jets, optionally audited on a branch")
    _add_flags(s)
    s.add_argument("--branch", help="branch JSON file to audit")
    s.add_argument("--k", type=int, default=None, help="jet order to audit (default: the computed k)")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_suffdeg)

    s = sub.add_parser("estimate", help="sample the gradient ridge and fit the exponent")
    s.add_argument("--branch", required=True)
    s.add_argument("--center", default=None, help="comma-separated centre of the ball")
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--levels", type=int, default=10)
    s.add_argument("--starts", type=int, default=32)
    s.add_argument("--method", choices=["least-squares", "robust-median-slope"], default="least-squares")
    s.add_argument("--csv", default=None, help="write (log|y|, log sqrt u) pairs here")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=None)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("eliminate", help="plane curve of the ridge system")
    s.add_argument("--branch", required=True)
    s.add_argument("--case", choices=["I", "II"], default="I")
    s.add_argument("--r", type=float, default=None)
    s.add_argument("--method", choices=["resultant", "interpolate"], default="resultant")
    s.add_argument("--route", choices=["k", "tz"], default="k")
    s.add_argument("--cap", type=int, default=12)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_eliminate)

    s = sub.add_parser("flow", help="integrate the unit gradient field from a start point")
    s.add_argument("--branch", required=True)
    s.add_argument("--start", required=True, help='comma-separated start, e.g. "0.6,0.8"')
    s.add_argument("--tol", type=float, default=1e-8, help="stop when |f| falls below this")
    s.add_argument("--check", default=None, help='"rho,C" for the length bounds')
    s.add_argument("--trace", default=None, help="write the polyline to this CSV file")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_flow)

    s = sub.add_parser("report", help="full pipeline with verdicts")
    s.add_argument("--branch", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--r", type=float, default=None, help="also run the boundary case on this sphere")
    s.add_argument("--levels", type=int, default=10)
    s.add_argument("--starts", type=int, default=32)
    s.add_argument("--flow-starts", type=int, default=20)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None, out=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        doc, code = args.func(args)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError, OSError, KeyError) as err:
        doc = {"schema": SCHEMA, "command": args.command,
               "error": {"type": type(err).__name__, "message": str(err)}}
        _emit(doc, out)
        return 1
    _emit(doc, out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
