"""End-to-end certificate for one branch: bounds, curve, fits and flow checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import bounds as bd
from .elimination import (EliminationError, build_case_I_system, build_case_II_system,
                          coefficient_residual, eliminate_to_curve, lemma58_bound, slope_candidates)
from .empirical import (fit_distance_exponent, fit_exponent, sample_profile, zero_set_sample)
from .gradflow import check_kl, sandwich_experiment
from .nashfn import NashBranch, critical_value_scan, degree_at
from .polycore import factor, render

SCHEMA = 1
# float noise allowance when a fitted exponent meets an exact bound (circle: 1/2 = 1/2)
BOUND_RTOL = 1e-6


def frac_text(q):
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _finite(v):
    return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else v


@dataclass
class SuffdegAudit:
    beta_hat: float
    k: int
    margin: float
    passed: bool
    diagnostics: dict

    def as_dict(self):
        return {"beta_hat": self.beta_hat, "k": self.k, "k_minus_1": self.k - 1, "margin": self.margin,
                "verdict": "pass" if self.passed else "fail", "diagnostics": self.diagnostics}


def suffdeg_audit(b: NashBranch, k, seed=0, vsample=None):
    """Fit ``|grad f| ~ dist(x, Z)^beta`` and compare ``beta`` with ``k - 1``."""
    if k < 2:
        raise ValueError("k must be at least 2")
    fit = fit_distance_exponent(b, quantity="grad", seed=seed, vsample=vsample)
    margin = (k - 1) - fit.alpha_hat
    return SuffdegAudit(fit.alpha_hat, int(k), float(margin), bool(margin >= 0), fit.diagnostics)


def is_reducible(P):
    _, facs = factor(P)
    nonconst = [(f, m) for f, m in facs if not f.is_constant()]
    return len(nonconst) > 1 or any(m > 1 for _, m in nonconst)


def infer_assumptions(b: NashBranch, vsample):
    """Hypothesis flags supported by the branch data.

    ``dP/dy != 0`` holds along the branch by construction (folds abort the
    evaluation).  The zero is called isolated when the zero-set sample
    collapses to a single point.
    """
    isolated = False
    if len(vsample):
        spread = float(np.max(np.linalg.norm(vsample - vsample.mean(axis=0), axis=1)))
        isolated = spread <= 1e-6 * b.radius
    return bd.Assumptions(partial_y_nonzero=True, isolated_zero=isolated, polynomial_f=b.is_polynomial)


def curve_section(b, profile, case="I", r=None, method="resultant", route="k", cap=12):
    if case == "I":
        system = build_case_I_system(b.P, route)
    else:
        system = build_case_II_system(b.P, r, route, center=b.seed_x)
    pts = profile.points() if profile is not None else None
    used = method
    try:
        if method == "resultant" and b.n <= 3:
            curve = eliminate_to_curve(system, "resultant", profile=profile)
        else:
            used = "interpolate"
            curve = eliminate_to_curve(system, "interpolate", branch=b, cap=cap, profile=profile)
    except EliminationError as err:
        if method != "resultant":
            raise
        used = "interpolate"
        try:
            curve = eliminate_to_curve(system, "interpolate", branch=b, cap=cap, profile=profile)
        except EliminationError as err2:
            return {"case": case, "error": f"{type(err).__name__}: {err}; {type(err2).__name__}: {err2}"}
    cands = slope_candidates(curve)
    out = {
        "case": case,
        "route": route,
        "method": used,
        "Q": render(curve.Q),
        "D": curve.D,
        "lemma58": frac_text(lemma58_bound(curve)),
        "slopes": [frac_text(s) for s in cands.slopes],
        "budget": system.degree_budget,
        "generator_degree_product": system.actual_degree_product,
        "fact_5_7_bound": system.fact_5_7_bound,
        "residual": coefficient_residual(curve.Q, pts) if pts is not None and len(pts) else None,
        "provenance": curve.provenance,
    }
    if curve.discarded:
        out["discarded_factors"] = [render(f) for f in curve.discarded]
    if curve.label:
        out["label"] = curve.label
    if curve.zero_dimensional:
        out["zero_dimensional"] = True
    return out, curve


def build_report(b: NashBranch, seed=0, threads=None, r=None, levels=10, starts=32, flow_starts=20,
                 kl_samples=2000, epsilon=None):
    """Run the whole pipeline and collect a JSON-ready report with verdicts."""
    n, d = b.n, degree_at(b)
    scan = critical_value_scan(b, seed=seed)
    eps = epsilon if epsilon is not None else scan.epsilon
    vsample = zero_set_sample(b, seed=seed)
    assumptions = infer_assumptions(b, vsample)
    brep = bd.bound_report(n, d, assumptions)
    best_rho = brep.best_rho

    report = {
        "schema": SCHEMA,
        "command": "report",
        "seed": seed,
        "branch": {"P": render(b.P), "n": n, "d": d, "seed_x": list(b.seed_x), "seed_y": b.seed_y,
                   "radius": b.radius, "reducible_P": is_reducible(b.P)},
        "critical_scan": {"critical_values": scan.critical_values, "epsilon": eps},
    }
    verdicts = []

    profile = sample_profile(b, epsilon=eps, level_count=levels, starts=starts, seed=seed, threads=threads)
    fit = fit_exponent(profile)
    report["profile"] = [lv.as_dict() for lv in profile.levels]
    report["fit"] = fit.as_dict()
    rho_hat, C_hat = fit.rho_hat, fit.C_hat

    curves = []
    for case in (["I"] + (["II"] if r is not None else [])):
        res = curve_section(b, profile if case == "I" else None, case=case, r=r)
        if isinstance(res, dict):
            curves.append(res)
        else:
            curves.append(res[0])
    report["curves"] = curves

    dfit = fit_distance_exponent(b, seed=seed, vsample=vsample)
    report["distance_fit"] = dfit.as_dict()

    rho_c = min(max(rho_hat, 0.0), 1 - 1e-9)
    sw = sandwich_experiment(b, rho_c, C_hat, starts=flow_starts, seed=seed, vsample=vsample)
    report["flow"] = sw.as_dict()
    X = b.region.uniform(kl_samples, np.random.default_rng(seed))
    fX = b.values(X, errors="nan")
    X = X[np.isfinite(fX) & (np.abs(fX) > 1e-12)]
    kl = check_kl(b, X, rho_c, C_hat)
    report["kl"] = kl.as_dict()

    report["bounds"] = brep.as_dict()

    rho_ok = rho_hat <= float(best_rho) + BOUND_RTOL if best_rho is not None else True
    S = bd.s_bound(n, d)
    alpha_ok = dfit.alpha_hat <= S
    flow_ok = sw.failed == 0
    verdicts.append({"name": "theorem-consistency", "outcome": "pass" if (rho_ok and alpha_ok and flow_ok) else "fail",
                     "detail": {"rho_hat_le_best_bound": rho_ok, "alpha_hat_le_S": alpha_ok,
                                "flow_sandwich_held": flow_ok}})
    verdicts.append({"name": "distance-vs-gradient-exponent",
                     "outcome": "pass" if dfit.alpha_hat <= 1 / (1 - rho_c) + 0.1 else "informational",
                     "detail": {"alpha_hat": dfit.alpha_hat, "one_over_one_minus_rho": 1 / (1 - rho_c)}})
    verdicts.append({"name": "kl-inequality", "outcome": "pass" if kl.passed else "fail"})
    ci = curves[0]
    if "slopes" in ci:
        near = any(abs(float(Fraction(s)) - rho_hat) <= 0.02 for s in ci["slopes"])
        lem_ok = rho_hat <= float(Fraction(ci["lemma58"])) + 0.02
        verdicts.append({"name": "slope-candidates-contain-rho-hat",
                         "outcome": "pass" if near else "informational"})
        verdicts.append({"name": "rho-hat-within-degree-bound",
                         "outcome": "pass" if lem_ok else "fail"})
    if report["branch"]["reducible_P"]:
        verdicts.append({"name": "irreducible-P", "outcome": "informational",
                         "detail": "P factors; bounds use deg P and are conservative"})
    report["verdicts"] = verdicts
    report["passed"] = all(v["outcome"] != "fail" for v in verdicts)
    return report


def sanitize(obj):
    """Make a report JSON-safe: Fractions to text, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, Fraction):
        return frac_text(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float):
        return _finite(obj)
    return obj
