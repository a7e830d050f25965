"""Gradient-inequality exponents for polynomial and Nash functions.

Exact bound formulas, elimination to a plane curve of (value, squared
gradient) pairs, empirical exponent fits and gradient-flow length checks.
"""

from .bounds import Assumptions, BoundReport, r_bound, s_bound
from .elimination import PlaneCurve, eliminate_to_curve, lemma58_bound, slope_candidates
from .empirical import CriticalProfile, ExponentFit, fit_exponent, sample_profile
from .gradflow import Trajectory, flow
from .nashfn import NashBranch, branch_eval, branch_gradient
from .polycore import Polynomial, parse, render, resultant

__version__ = "0.1.0"

__all__ = [
    "Assumptions", "BoundReport", "r_bound", "s_bound",
    "PlaneCurve", "eliminate_to_curve", "lemma58_bound", "slope_candidates",
    "CriticalProfile", "ExponentFit", "fit_exponent", "sample_profile",
    "Trajectory", "flow",
    "NashBranch", "branch_eval", "branch_gradient",
    "Polynomial", "parse", "render", "resultant",
]
