"""Closed-form exponent bounds, sufficiency degrees and distance exponents.

Every quantity is an exact ``int`` or ``Fraction``.  Exponent bounds all
have the shape ``1 - 1/N`` for a positive integer ``N``; entries keep ``N``
so the text form is exact.

Source labels (``"Theorem 2.1"`` and so on) name the published statement
each formula comes from; they are part of the report format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import prod

LINEAR = "linear"

RHO_BOUND = "rho_bound"
DIST_EXPONENT = "dist_exponent"
SUFFICIENCY_DEGREE = "sufficiency_degree"
LOJ_EXPONENT = "loj_exponent"
TOTAL_DEGREE = "total_degree"


@dataclass(frozen=True)
class Assumptions:
    partial_y_nonzero: bool = False
    isolated_zero: bool = False
    polynomial_f: bool = False
    rational_f: bool = False

    def as_dict(self):
        return {
            "partial_y_nonzero": self.partial_y_nonzero,
            "isolated_zero": self.isolated_zero,
            "polynomial_f": self.polynomial_f,
            "rational_f": self.rational_f,
        }


@dataclass(frozen=True)
class BoundEntry:
    name: str
    kind: str
    value: object
    source: str
    note: str = ""
    best: bool = False

    def text(self):
        """Exact text form; exponent bounds print as ``1 - 1/N``."""
        if self.kind == RHO_BOUND:
            v = Fraction(self.value)
            if v == 0:
                return "0"
            return f"1 - 1/{1 / (1 - v)}"
        return str(self.value)

    def as_dict(self):
        out = {"name": self.name, "kind": self.kind, "value": self.text(), "source": self.source}
        if self.note:
            out["note"] = self.note
        if self.best:
            out["best"] = True
        return out


@dataclass
class BoundReport:
    n: int
    d: int
    assumptions: Assumptions
    entries: list = field(default_factory=list)

    def of_kind(self, kind):
        return [e for e in self.entries if e.kind == kind]

    def get(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def best_rho(self):
        rho = self.of_kind(RHO_BOUND)
        return min(Fraction(e.value) for e in rho) if rho else None

    @property
    def best_sufficiency(self):
        ks = self.of_kind(SUFFICIENCY_DEGREE)
        return min(e.value for e in ks) if ks else None

    def as_dict(self):
        summary = {e.name: e.text() for e in self.entries}
        return {
            "n": self.n,
            "d": self.d,
            "assumptions": self.assumptions.as_dict(),
            "entries": [e.as_dict() for e in self.entries],
            "summary": summary,
        }


def _check_nd(n, d, dmin):
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not isinstance(d, int) or d < dmin:
        raise ValueError(f"d must be an integer >= {dmin}, got {d!r}")


def one_minus_inverse(N):
    return 1 - Fraction(1, N)


# -- formulas -----------------------------------------------------------------------

def r_bound(n, d):
    """``max{2d(2d-1), d(3d-2)^n} + 1``; the :data:`LINEAR` marker when ``d == 1``."""
    _check_nd(n, d, 1)
    if d == 1:
        return LINEAR
    return max(2 * d * (2 * d - 1), d * (3 * d - 2) ** n) + 1


def s_bound(n, d):
    """``2(2d-1)^(3n+1)``."""
    _check_nd(n, d, 1)
    return 2 * (2 * d - 1) ** (3 * n + 1)


def g2_denominator(n, d):
    return (d - 1) ** n + 1


def dk_denominator(n, d):
    return d * (3 * d - 3) ** (n - 1)


def prior_distance_bound(n, d):
    """Earlier distance-exponent bound with the codimension term at its worst."""
    _check_nd(n, d, 1)
    return d * (6 * d - 3) ** (n + n * (n + 1) // 2 - 1)


def total_degree_product(degrees):
    degrees = list(degrees)
    if not degrees:
        raise ValueError("empty degree list")
    if any(not isinstance(k, int) or k < 1 for k in degrees):
        raise ValueError("all degrees must be integers >= 1")
    return prod(degrees)


# -- reports ------------------------------------------------------------------------

def _linear_entries():
    return [
        BoundEntry("linear", RHO_BOUND, Fraction(0), "Section 2 (d = 1)", note="f is linear", best=True),
    ]


def rho_bounds(n, d, assumptions=Assumptions()):
    """All applicable exponent bounds; the smallest is flagged ``best``."""
    _check_nd(n, d, 1)
    if d == 1:
        return _linear_entries()
    a = assumptions
    out = [BoundEntry("theorem_2_2", RHO_BOUND, one_minus_inverse(s_bound(n, d)), "Theorem 2.2")]
    if a.partial_y_nonzero:
        out.append(BoundEntry("theorem_2_1", RHO_BOUND, one_minus_inverse(r_bound(n, d)), "Theorem 2.1"))
    if a.polynomial_f or a.rational_f:
        out.append(BoundEntry("dk", RHO_BOUND, one_minus_inverse(dk_denominator(n, d)), "(DK)"))
        if a.isolated_zero and a.polynomial_f:
            out.append(BoundEntry("g2", RHO_BOUND, one_minus_inverse(g2_denominator(n, d)), "(G2)"))
    best = min(e.value for e in out)
    return [BoundEntry(e.name, e.kind, e.value, e.source, e.note, e.value == best) for e in out]


def sufficiency_degrees(n, d, assumptions=Assumptions()):
    _check_nd(n, d, 1)
    if d == 1:
        return [BoundEntry("k_linear", SUFFICIENCY_DEGREE, 1, "Section 2 (d = 1)", best=True)]
    a = assumptions
    out = [BoundEntry("k_theorem_1_3", SUFFICIENCY_DEGREE, s_bound(n, d), "Theorem 1.3")]
    if a.partial_y_nonzero:
        out.append(BoundEntry("k_theorem_1_4", SUFFICIENCY_DEGREE, d * (3 * d - 2) ** n + 1, "Theorem 1.4"))
    if a.polynomial_f or a.rational_f:
        out.append(BoundEntry("k_remark_1_5_dk", SUFFICIENCY_DEGREE, dk_denominator(n, d), "Remark 1.5"))
        if a.isolated_zero and a.polynomial_f:
            out.append(BoundEntry("k_remark_1_5_g2", SUFFICIENCY_DEGREE, g2_denominator(n, d), "Remark 1.5"))
    best = min(e.value for e in out)
    return [BoundEntry(e.name, e.kind, e.value, e.source, e.note, e.value == best) for e in out]


def sufficiency_degree(n, d, assumptions=Assumptions()):
    """Smallest sufficiency degree allowed by the flags, plus every candidate."""
    entries = sufficiency_degrees(n, d, assumptions)
    return min(e.value for e in entries), entries


def dist_exponents(n, d, assumptions=Assumptions(), rho=None):
    """Exponents of ``dist(x, V)`` bounding ``|f|`` and ``|grad f|`` from below.

    ``rho`` optionally supplies an exponent for the ``1/(1 - rho)`` bound on
    the distance exponent.
    """
    _check_nd(n, d, 1)
    S = s_bound(n, d)
    out = [
        BoundEntry("corollary_3_6_f", DIST_EXPONENT, S, "Corollary 3.6"),
        BoundEntry("corollary_3_6_grad", DIST_EXPONENT, S - 1, "Corollary 3.6"),
        BoundEntry("corollary_3_8", LOJ_EXPONENT, S, "Corollary 3.8"),
    ]
    if assumptions.partial_y_nonzero and d >= 2:
        R = r_bound(n, d)
        note = (f"derived as 1/(1 - rho) with rho = 1 - 1/R(n,d); the printed statement reads "
                f"d(3d-2)^(n+1) = {d * (3 * d - 2) ** (n + 1)}")
        out.append(BoundEntry("theorem_2_1_dist_f", DIST_EXPONENT, R, "Theorem 2.1 + Corollary 3.5", note=note))
        out.append(BoundEntry("theorem_2_1_dist_grad", DIST_EXPONENT, R - 1, "Theorem 2.1 + Corollary 3.5",
                              note="gradient exponent taken as rho/(1 - rho)"))
    if rho is not None:
        rho = Fraction(rho)
        if not 0 <= rho < 1:
            raise ValueError("rho must lie in [0, 1)")
        out.append(BoundEntry("corollary_3_7", LOJ_EXPONENT, 1 / (1 - rho), "Corollary 3.7"))
    return out


def prior_bound_comparison(n, d):
    """``(new, prior, new < prior)`` for the distance-exponent bounds."""
    new = s_bound(n, d)
    prior = prior_distance_bound(n, d)
    return new, prior, new < prior


def bound_report(n, d, assumptions=Assumptions(), rho=None):
    report = BoundReport(n, d, assumptions)
    report.entries += rho_bounds(n, d, assumptions)
    report.entries += sufficiency_degrees(n, d, assumptions)
    report.entries += dist_exponents(n, d, assumptions, rho=rho)
    return report
