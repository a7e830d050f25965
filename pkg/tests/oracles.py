"""Independent recomputation of the closed-form bounds with sympy integers."""

from fractions import Fraction

import sympy as sp

n_, d_ = sp.symbols("n d", positive=True, integer=True)

R_EXPR = sp.Max(2 * d_ * (2 * d_ - 1), d_ * (3 * d_ - 2) ** n_) + 1
S_EXPR = 2 * (2 * d_ - 1) ** (3 * n_ + 1)
G2_EXPR = (d_ - 1) ** n_ + 1
DK_EXPR = d_ * (3 * d_ - 3) ** (n_ - 1)
THM14_EXPR = d_ * (3 * d_ - 2) ** n_ + 1
PRIOR_EXPR = d_ * (6 * d_ - 3) ** (n_ + n_ * (n_ + 1) / 2 - 1)


def ev(expr, n, d):
    return int(expr.subs({n_: n, d_: d}))


def R(n, d):
    return ev(R_EXPR, n, d)


def S(n, d):
    return ev(S_EXPR, n, d)


def one_minus(N):
    return 1 - Fraction(1, N)


def k_candidates(n, d, partial_y=False, polynomial=False, isolated=False):
    ks = [S(n, d)]
    if partial_y:
        ks.append(ev(THM14_EXPR, n, d))
    if polynomial:
        ks.append(ev(DK_EXPR, n, d))
        if isolated:
            ks.append(ev(G2_EXPR, n, d))
    return ks
