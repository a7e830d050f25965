"""Walk through every stage of the toolkit on f(x) = x1^2 + x2^2.

The gradient satisfies |grad f| = 2 |f|^(1/2) exactly, so every estimate
below has a closed form to compare against.
"""
import numpy as np

from nashloj.bounds import RHO_BOUND, Assumptions, bound_report
from nashloj.elimination import build_case_I_system, eliminate_to_curve, lemma58_bound, slope_candidates
from nashloj.empirical import fit_distance_exponent, fit_exponent, sample_profile, verify_inequality
from nashloj.gradflow import check_length_bound, flow
from nashloj.nashfn import NashBranch

branch = NashBranch.from_text("y - x1^2 - x2^2", 2)

print("theoretical bounds for a polynomial with n=2, d=2")
assume = Assumptions(partial_y_nonzero=True, isolated_zero=True, polynomial_f=True)
for entry in bound_report(2, 2, assume).of_kind(RHO_BOUND):
    print(f"  {entry.name:22s} {entry.text():10s} {entry.source}{'  (best)' if entry.best else ''}")

profile = sample_profile(branch, epsilon=0.5, level_count=10, starts=16)
fit = fit_exponent(profile)
print(f"\nfitted exponent {fit.rho_hat:.6f} (exact 1/2), constant {fit.C_hat:.6f} (exact 2)")

curve = eliminate_to_curve(build_case_I_system(branch.P))
print(f"eliminated curve Q = {curve.Q}")
print(f"exponent from the curve degree {lemma58_bound(curve)}, from its Newton polygon {[str(s) for s in slope_candidates(curve).slopes]}")

dist = fit_distance_exponent(branch)
print(f"distance exponent {dist.alpha_hat:.4f} (exact 2)")

rep = verify_inequality(branch, rho=0.5, C=2.0, sample_count=2000)
print(f"inequality with rho=1/2, C=2 on 2000 samples: passed={rep.passed}, worst margin {rep.worst_margin:.2e}")

traj = flow(branch, (0.6, 0.8), stop_tol_f=1e-12)
chk = check_length_bound(traj, 0.5, 2.0, np.zeros((1, 2)), branch, branch.region)
print(f"flow from (0.6, 0.8): length {traj.arc_length:.6f}, bound {chk.bound:.6f}")
