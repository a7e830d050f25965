from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from nashloj.polycore import (NEG_INF, Polynomial, PolynomialSyntaxError, UnknownVariableError,
                              factor, isolate_real_roots, parse, partial, render, resultant,
                              to_sympy)

XY = ["x1", "x2", "y"]


# -- parse ------------------------------------------------------------------------

def test_parse_simple_branch():
    p = parse("y - x1^2 - x2^2", XY)
    assert len(p.terms) == 3
    assert p.total_degree == 2
    assert p.terms[(0, 0, 1)] == 1 and p.terms[(2, 0, 0)] == -1 and p.terms[(0, 2, 0)] == -1


def test_parse_zero():
    p = parse("0", ["x1"])
    assert p.is_zero()
    assert p.total_degree == NEG_INF


def test_parse_expands_parentheses():
    # hand expansion: (y+1)^2 - 1 = y^2 + 2y
    p = parse("(y+1)^2 - 1 - x1^2 - x2^2", XY)
    assert p == parse("y^2 + 2*y - x1^2 - x2^2", XY)


def test_parse_rationals_and_double_star():
    p = parse("3/4*x1**2 - x1/2", ["x1"])
    assert p.terms[(2,)] == Fraction(3, 4)
    assert p.terms[(1,)] == Fraction(-1, 2)


def test_parse_errors():
    with pytest.raises(PolynomialSyntaxError) as err:
        parse("x1 + * 2", ["x1"])
    assert err.value.position is not None
    with pytest.raises(UnknownVariableError):
        parse("x1 + w", ["x1"])


@pytest.mark.parametrize("text", ["y - x1^2 - x2^2", "3/7*x1*x2^3 - 2*y^2 + 5", "0", "-x1", "x1^2*x2^2*y"])
def test_render_round_trip(text):
    p = parse(text, XY)
    assert parse(render(p), XY) == p


# -- arithmetic -------------------------------------------------------------------

def test_ring_examples():
    p = parse("x1*x2 - 3*y + 1", XY)
    assert (p + (-p)).is_zero()
    x1 = Polynomial.var(0, 3, XY)
    assert x1 * x1 == parse("x1^2", XY)
    assert parse("y+1", XY) ** 2 == parse("y^2 + 2*y + 1", XY)
    assert p.scale(Fraction(1, 2)) == parse("1/2*x1*x2 - 3/2*y + 1/2", XY)


def test_mismatched_nvars():
    with pytest.raises(ValueError):
        parse("x1", ["x1"]) + parse("x1", ["x1", "x2"])


def test_no_zero_coefficients_stored():
    p = parse("x1 + x2", ["x1", "x2"]) - parse("x1", ["x1", "x2"])
    assert all(c != 0 for c in p.terms.values())
    assert list(p.terms) == [(0, 1)]


# -- calculus ------------------------------------------------------------------------

def test_partial_examples():
    assert partial(parse("y - x1^2 - x2^2", XY), 0) == parse("-2*x1", XY)
    assert partial(parse("7", XY), 2).is_zero()
    assert partial(parse("x1^3*x2", XY), 1) == parse("x1^3", XY)
    with pytest.raises(IndexError):
        partial(parse("x1", XY), 3)


# -- evaluation ---------------------------------------------------------------------

def test_eval_examples():
    assert parse("y - x1^2 - x2^2", XY).eval((1, 1, 2)) == 0
    assert parse("0", XY).eval((5, 6, 7)) == 0
    assert parse("x1^2*x2^2", XY).eval((2, 3, 0)) == 36
    assert parse("x1/3", XY).eval((1, 0, 0)) == Fraction(1, 3)
    assert abs(parse("x1/3", XY).eval((1.0, 0.0, 0.0)) - 1 / 3) < 1e-15
    with pytest.raises(ValueError):
        parse("x1", XY).eval((1, 2))


# -- resultants ----------------------------------------------------------------------

def test_resultant_circle_projection():
    names = ["x", "y", "u"]
    r = resultant(parse("y - x^2", names), parse("u - 4*x^2", names), 0)
    # 2x2 Sylvester determinant in x^2 by hand: (u - 4y)^2 up to sign
    assert r.proportional_to(parse("(u - 4*y)^2", names))


def test_resultant_linear_and_shared():
    names = ["x", "a", "b"]
    r = resultant(parse("x - a", names), parse("x - b", names), 0)
    assert r.proportional_to(parse("a - b", names))
    p = parse("x^2 + a*x + b", names)
    assert resultant(p, p, 0).is_zero()
    with pytest.raises(ValueError):
        resultant(parse("a", names), p, 0)


def _sympy_resultant(p, q, v):
    ep, syms = to_sympy(p)
    eq, _ = to_sympy(q)
    return sympy.expand(sympy.resultant(ep, eq, syms[v]))


@pytest.mark.parametrize("pt,qt", [
    ("y - x1^2*x2^2", "4*x1^2*x2^4 + 4*x1^4*x2^2 - u"),
    ("x1^3 - 2*x1*x2 + y", "x1^2*u - x2 + 1"),
    ("3*x1^2 + x1*y - u", "x1^4 - x2*y*x1 + 7"),
])
def test_resultant_matches_sympy(pt, qt):
    names = ["x1", "x2", "y", "u"]
    p, q = parse(pt, names), parse(qt, names)
    ours, _ = to_sympy(resultant(p, q, 0))
    assert sympy.expand(ours - _sympy_resultant(p, q, 0)) == 0


small_coef = st.integers(-4, 4)
monomial = st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))


@st.composite
def small_poly(draw):
    terms = draw(st.dictionaries(monomial, small_coef, max_size=5))
    return Polynomial(3, terms, XY)


@settings(max_examples=60, deadline=None)
@given(small_poly(), small_poly(), st.integers(0, 2))
def test_partial_is_linear_and_leibniz(p, q, i):
    assert partial(p + q, i) == partial(p, i) + partial(q, i)
    assert partial(p * q, i) == partial(p, i) * q + p * partial(q, i)


@settings(max_examples=40, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3), small_poly(), small_poly())
def test_resultant_vanishes_at_common_root(a, b, c, g, h):
    # build p, q with the common root (x1, x2, y) = (a, b, c)
    names = XY
    x1 = Polynomial.var(0, 3, names) - a
    x2 = Polynomial.var(1, 3, names) - b
    y = Polynomial.var(2, 3, names) - c
    p = x1 * (g + 1) + x2 * x2
    q = x1 * x1 * (h + 2) + y + x1 * x2
    if p.degree(0) < 1 or q.degree(0) < 1:
        return
    r = resultant(p, q, 0)
    assert r.eval((a, b, c)) == 0


# -- root isolation -------------------------------------------------------------------

def test_isolate_sqrt2():
    p = parse("x^2 - 2", ["x"])
    (iv,) = isolate_real_roots(p, (0, 2), tol=1e-9)
    lo, hi = iv
    assert hi - lo <= Fraction(1, 10**9)
    # bisection oracle
    a, b = 1.0, 2.0
    for _ in range(60):
        m = (a + b) / 2
        a, b = (m, b) if m * m < 2 else (a, m)
    assert float(lo) <= a <= float(hi)


def test_isolate_no_roots_and_two_roots():
    assert isolate_real_roots(parse("x^2 + 1", ["x"]), (-10, 10)) == []
    ivs = isolate_real_roots(parse("x*(x - 1)", ["x"]), (-1, 2))
    assert len(ivs) == 2
    assert ivs[0][0] <= 0 <= ivs[0][1] and ivs[1][0] <= 1 <= ivs[1][1]
    with pytest.raises(ValueError):
        isolate_real_roots(parse("0", ["x"]), (0, 1))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=7), min_size=1, max_size=5, unique=True))
def test_isolate_finds_known_rational_roots(roots):
    x = Polynomial.var(0, 1, ["x"])
    p = Polynomial.constant(1, 1, ["x"])
    for r in roots:
        p = p * (x - r)
    ivs = isolate_real_roots(p, (-6, 6), tol=1e-6)
    assert len(ivs) == len(roots)
    for (lo, hi), r in zip(ivs, sorted(roots)):
        assert lo <= r <= hi and hi - lo <= Fraction(1, 10**6)
    for (a, b), (c, d) in zip(ivs, ivs[1:]):
        assert b < c


def test_factor_branches():
    names = ["x1", "x2", "y"]
    content, facs = factor(parse("2*x1^2*x2 - 2*x2", names))
    got = sorted(render(f) for f, _ in facs)
    assert content == 2
    assert got == sorted(["x2", "x1 - 1", "x1 + 1"])
