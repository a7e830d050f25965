"""Compare theory and experiment on f(x) = x1^2 x2^2, whose zero set is the two axes.

Along the diagonal |grad f| = sqrt(8) |f|^(3/4), and this is the worst direction,
so the optimal exponent is 3/4 while the general bound for degree 4 is much weaker.
"""
import math

from nashloj.bounds import bound_report
from nashloj.elimination import build_case_I_system, eliminate_to_curve, slope_candidates
from nashloj.empirical import fit_exponent, sample_profile
from nashloj.gradflow import sandwich_experiment
from nashloj.nashfn import NashBranch

branch = NashBranch.from_text("y - x1^2*x2^2", 2)

best = bound_report(2, 4).best_rho
print(f"best proven exponent bound for n=2, d=4: {best} = {float(best):.6f}")

profile = sample_profile(branch, epsilon=0.5, level_count=10, starts=16)
print("\nlevel        min |grad f|^2    argmin")
for lv in profile.converged():
    print(f"{lv.y:.3e}    {lv.u:.6e}    ({lv.argmin[0]:+.4f}, {lv.argmin[1]:+.4f})")

fit = fit_exponent(profile)
print(f"\nfitted exponent {fit.rho_hat:.6f} (exact 3/4), constant {fit.C_hat:.6f} (exact {math.sqrt(8):.6f})")

curve = eliminate_to_curve(build_case_I_system(branch.P))
print(f"curve {curve.Q} has slope candidates {[str(s) for s in slope_candidates(curve).slopes]}")

sw = sandwich_experiment(branch, fit.rho_hat, fit.C_hat, starts=40, seed=1)
print(f"gradient flow from {sw.runs} starts in U: {sw.failed} length-bound failures")
