"""Exact sparse multivariate polynomials over the rationals.

A :class:`Polynomial` is an immutable map from exponent vectors to nonzero
rational coefficients.  Coefficients are kept as ``int`` whenever they are
integral and as :class:`fractions.Fraction` otherwise, which keeps the
fraction-free determinant code in :func:`resultant` on the fast integer path.

The text grammar accepted by :func:`parse` is::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom (("^" | "**") INTEGER)?
    atom   := NUMBER | NAME | "(" expr ")"

Division is only allowed by nonzero constants, so ``3/4*x1`` and
``(x1 + 1)/2`` are valid while ``x1/x2`` is not.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Rational
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "NEG_INF",
    "Polynomial",
    "NumericPoly",
    "PolynomialSyntaxError",
    "UnknownVariableError",
    "parse",
    "render",
    "partial",
    "resultant",
    "sylvester_matrix",
    "bareiss_det",
    "isolate_real_roots",
    "sturm_sequence",
    "factor",
    "to_sympy",
    "from_sympy",
]

#: Total degree reported for the zero polynomial.
NEG_INF = float("-inf")

Exponent = tuple


class PolynomialSyntaxError(ValueError):
    """Malformed polynomial text; ``position`` is the 0-based offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownVariableError(ValueError):
    pass


def _norm(c):
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, bool):
        return int(c)
    if isinstance(c, int):
        return c
    if isinstance(c, Rational):
        return _norm(Fraction(c.numerator, c.denominator))
    if isinstance(c, float):
        return _norm(Fraction(c))
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _div(a, b):
    if isinstance(a, int) and isinstance(b, int):
        q, r = divmod(a, b)
        if r == 0:
            return q
    return _norm(Fraction(a) / b)


def default_names(nvars):
    return tuple(f"x{i + 1}" for i in range(nvars))


class Polynomial:
    """Sparse polynomial in ``nvars`` variables with exact rational coefficients.

    Parameters
    ----------
    nvars : int
        Number of variables of the ambient ring.
    terms : mapping, optional
        Exponent tuple -> coefficient.  Zero coefficients are dropped.
    names : sequence of str, optional
        Variable names used for rendering; defaults to ``x1..xn``.
    """

    __slots__ = ("nvars", "_terms", "names", "_hash")

    def __init__(self, nvars: int, terms: Mapping | None = None, names: Sequence[str] | None = None):
        if nvars < 0:
            raise ValueError("nvars must be non-negative")
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars:
                raise ValueError(f"exponent {exp} has length {len(exp)}, expected {nvars}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = _norm(c)
            if c != 0:
                c = clean.get(exp, 0) + c
                if c == 0:
                    clean.pop(exp, None)
                else:
                    clean[exp] = _norm(c)
        self.nvars = nvars
        self._terms = clean
        self.names = tuple(names) if names is not None else default_names(nvars)
        if len(self.names) != nvars:
            raise ValueError("names must have length nvars")
        self._hash = None

    @classmethod
    def _raw(cls, nvars, terms, names):
        obj = object.__new__(cls)
        obj.nvars = nvars
        obj._terms = terms
        obj.names = names
        obj._hash = None
        return obj

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, nvars, names=None):
        return cls(nvars, {}, names)

    @classmethod
    def constant(cls, c, nvars, names=None):
        return cls(nvars, {(0,) * nvars: c}, names)

    @classmethod
    def var(cls, i, nvars, names=None):
        if not 0 <= i < nvars:
            raise IndexError(f"variable index {i} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): 1}, names)

    @classmethod
    def parse(cls, text, var_names):
        return parse(text, var_names)

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> Mapping:
        return MappingProxyType(self._terms)

    def is_zero(self):
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    @property
    def total_degree(self):
        """Maximum exponent sum; :data:`NEG_INF` for the zero polynomial."""
        if not self._terms:
            return NEG_INF
        return max(sum(e) for e in self._terms)

    def degree(self, i):
        if not self._terms:
            return NEG_INF
        return max(e[i] for e in self._terms)

    def is_constant(self):
        return all(not any(e) for e in self._terms)

    def constant_value(self):
        return self._terms.get((0,) * self.nvars, 0)

    def used_variables(self):
        used = set()
        for e in self._terms:
            used.update(i for i, k in enumerate(e) if k)
        return used

    def coefficients_in(self, i):
        """Coefficients with respect to variable ``i``, lowest power first.

        Each coefficient is a polynomial in the same ring not involving ``i``.
        """
        deg = self.degree(i)
        if deg == NEG_INF:
            return []
        buckets = [dict() for _ in range(deg + 1)]
        for e, c in self._terms.items():
            k = e[i]
            buckets[k][e[:i] + (0,) + e[i + 1:]] = c
        return [Polynomial._raw(self.nvars, b, self.names) for b in buckets]

    def with_names(self, names):
        return Polynomial._raw(self.nvars, self._terms, tuple(names))

    def embed(self, new_names: Sequence[str]):
        """Re-express in a ring with variables ``new_names`` (a superset of ours)."""
        index = {n: k for k, n in enumerate(new_names)}
        try:
            where = [index[n] for n in self.names]
        except KeyError as err:
            raise UnknownVariableError(f"variable {err.args[0]!r} missing from target ring") from None
        m = len(new_names)
        out = {}
        for e, c in self._terms.items():
            ne = [0] * m
            for k, p in zip(where, e):
                ne[k] += p
            out[tuple(ne)] = c
        return Polynomial._raw(m, out, tuple(new_names))

    def restrict(self, keep: Sequence[str]):
        """Drop variables that do not occur; ``keep`` lists the surviving names."""
        idx = [self.names.index(n) for n in keep]
        dropped = set(range(self.nvars)) - set(idx)
        if dropped & self.used_variables():
            raise ValueError("cannot drop a variable that occurs in the polynomial")
        out = {tuple(e[k] for k in idx): c for e, c in self._terms.items()}
        return Polynomial._raw(len(idx), out, tuple(keep))

    # -- arithmetic -------------------------------------------------------
    def _check(self, other):
        if self.nvars != other.nvars:
            raise ValueError(f"mismatched nvars: {self.nvars} vs {other.nvars}")

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction, Rational)):
            return Polynomial.constant(other, self.nvars, self.names)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for e, c in other._terms.items():
            s = out.get(e, 0) + c
            if s == 0:
                out.pop(e, None)
            else:
                out[e] = _norm(s) if isinstance(s, Fraction) else s
        return Polynomial._raw(self.nvars, out, self.names)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.nvars, {e: -c for e, c in self._terms.items()}, self.names)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = _norm(c)
        if c == 0:
            return Polynomial.zero(self.nvars, self.names)
        return Polynomial._raw(self.nvars, {e: _norm(v * c) for e, v in self._terms.items()}, self.names)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Rational)) and not isinstance(other, Polynomial):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check(other)
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        out = {}
        for eb, cb in b.items():
            for ea, ca in a.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                s = out.get(e, 0) + ca * cb
                out[e] = s
        out = {e: _norm(c) for e, c in out.items() if c != 0}
        return Polynomial._raw(self.nvars, out, self.names)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Polynomial.constant(1, self.nvars, self.names)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, Polynomial):
            if not other.is_constant() or other.is_zero():
                return NotImplemented
            other = other.constant_value()
        if other == 0:
            raise ZeroDivisionError("polynomial division by zero")
        return self.scale(Fraction(1) / Fraction(other))

    def divexact(self, other: "Polynomial"):
        """Quotient of an exact division; raises ``ArithmeticError`` otherwise."""
        self._check(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if other.is_constant():
            c = other.constant_value()
            return Polynomial._raw(self.nvars, {e: _div(v, c) for e, v in self._terms.items()}, self.names)
        lead = max(other._terms)
        lc = other._terms[lead]
        rem = dict(self._terms)
        quot = {}
        bterms = list(other._terms.items())
        while rem:
            m = max(rem)
            c = rem[m]
            e = tuple(x - y for x, y in zip(m, lead))
            if any(k < 0 for k in e):
                raise ArithmeticError("division is not exact")
            q = _div(c, lc)
            quot[e] = q
            for eb, cb in bterms:
                t = tuple(x + y for x, y in zip(e, eb))
                s = rem.get(t, 0) - q * cb
                if s == 0:
                    rem.pop(t, None)
                else:
                    rem[t] = s
        return Polynomial._raw(self.nvars, {e: _norm(c) for e, c in quot.items()}, self.names)

    # -- comparison -------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return not self._terms
            return self._terms == {(0,) * self.nvars: other}
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def proportional_to(self, other):
        """True if ``self == c * other`` for some nonzero rational ``c``."""
        self._check(other)
        if self.is_zero() or other.is_zero():
            return self.is_zero() and other.is_zero()
        if self._terms.keys() != other._terms.keys():
            return False
        e0 = next(iter(self._terms))
        ratio = Fraction(self._terms[e0]) / other._terms[e0]
        return all(Fraction(c) == ratio * other._terms[e] for e, c in self._terms.items())

    def primitive(self):
        """Scale to coprime integer coefficients with a positive leading term."""
        if self.is_zero():
            return self
        den = 1
        for c in self._terms.values():
            if isinstance(c, Fraction):
                den = den * c.denominator // math.gcd(den, c.denominator)
        ints = [int(c * den) for c in self._terms.values()]
        g = 0
        for c in ints:
            g = math.gcd(g, c)
        lead = self._terms[_render_order(self._terms)[0]]
        sign = -1 if lead < 0 else 1
        return self.scale(Fraction(sign * den, g))

    # -- evaluation -------------------------------------------------------
    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple, np.ndarray)):
            point = point[0]
        return self.eval(point)

    def eval(self, point):
        """Evaluate at ``point``.

        Exact (``int``/``Fraction``) coordinates give an exact result; any
        float coordinate switches to double precision.
        """
        if len(point) != self.nvars:
            raise ValueError(f"point has dimension {len(point)}, expected {self.nvars}")
        exact = all(isinstance(v, (int, Fraction)) for v in point)
        if not exact:
            return float(self.numeric()(np.asarray(point, dtype=float)))
        total = 0
        cache = {}
        for e, c in self._terms.items():
            t = c
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    if key not in cache:
                        cache[key] = point[i] ** k
                    t = t * cache[key]
            total += t
        return _norm(total) if isinstance(total, (int, Fraction)) else total

    def substitute(self, values: Mapping[int, object]):
        """Substitute exact constants for some variables (ring is unchanged)."""
        out = {}
        for e, c in self._terms.items():
            t = c
            ne = list(e)
            for i, v in values.items():
                if e[i]:
                    t = t * Fraction(v) ** e[i]
                    ne[i] = 0
            ne = tuple(ne)
            out[ne] = out.get(ne, 0) + t
        return Polynomial(self.nvars, out, self.names)

    def numeric(self) -> "NumericPoly":
        return NumericPoly(self)

    def partial(self, i):
        return partial(self, i)

    def __repr__(self):
        return f"Polynomial({render(self)!r}, names={list(self.names)})"

    def __str__(self):
        return render(self)


class NumericPoly:
    """Double-precision evaluator for a :class:`Polynomial`.

    Calling with an array of shape ``(..., nvars)`` returns shape ``(...)``.
    """

    def __init__(self, poly: Polynomial):
        self.nvars = poly.nvars
        items = list(poly.terms.items())
        if items:
            self.exps = np.array([e for e, _ in items], dtype=np.int64).reshape(len(items), poly.nvars)
            self.coefs = np.array([float(c) for _, c in items])
        else:
            self.exps = np.zeros((0, poly.nvars), dtype=np.int64)
            self.coefs = np.zeros(0)
        self.maxdeg = int(self.exps.max()) if self.exps.size else 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.nvars:
            raise ValueError(f"point has dimension {x.shape[-1]}, expected {self.nvars}")
        if not len(self.coefs):
            return np.zeros(x.shape[:-1])
        # power table per variable: (maxdeg+1, ..., nvars)
        pw = np.ones((self.maxdeg + 1,) + x.shape)
        for k in range(1, self.maxdeg + 1):
            pw[k] = pw[k - 1] * x
        mono = np.ones(x.shape[:-1] + (len(self.coefs),))
        for v in range(self.nvars):
            col = self.exps[:, v]
            if col.any():
                mono *= np.moveaxis(pw[col, ..., v], 0, -1)
        return mono @ self.coefs


class NumericPolys:
    """Evaluate several polynomials of one ring in a single pass.

    Calling with shape ``(..., nvars)`` returns shape ``(..., len(polys))``.
    """

    def __init__(self, polys: Sequence[Polynomial]):
        if not polys:
            raise ValueError("need at least one polynomial")
        self.nvars = polys[0].nvars
        exps = sorted({e for p in polys for e in p.terms})
        index = {e: k for k, e in enumerate(exps)}
        self.exps = np.array(exps, dtype=np.int64).reshape(len(exps), self.nvars)
        self.coefs = np.zeros((len(exps), len(polys)))
        for j, p in enumerate(polys):
            if p.nvars != self.nvars:
                raise ValueError("all polynomials must share nvars")
            for e, c in p.terms.items():
                self.coefs[index[e], j] = float(c)
        self.maxdeg = int(self.exps.max()) if self.exps.size else 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if not len(self.exps):
            return np.zeros(x.shape[:-1] + (self.coefs.shape[1],))
        pw = np.ones((self.maxdeg + 1,) + x.shape)
        for k in range(1, self.maxdeg + 1):
            pw[k] = pw[k - 1] * x
        mono = np.ones(x.shape[:-1] + (len(self.exps),))
        for v in range(self.nvars):
            col = self.exps[:, v]
            if col.any():
                mono *= np.moveaxis(pw[col, ..., v], 0, -1)
        return mono @ self.coefs


# -- text I/O --------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolynomialSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, names):
        self.toks = _tokenize(text)
        self.i = 0
        self.names = tuple(names)
        self.index = {n: k for k, n in enumerate(self.names)}
        self.n = len(self.names)

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def const(self, c):
        return Polynomial.constant(c, self.n, self.names)

    def parse(self):
        p = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise PolynomialSyntaxError(f"unexpected {val!r}", pos)
        return p

    def expr(self):
        p = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op, pos = self.take()[1:]
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if not q.is_constant() or q.is_zero():
                    raise PolynomialSyntaxError("division only by nonzero constants", pos)
                p = p / q
        return p

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in ("+", "-"):
            self.take()
            p = self.unary()
            return -p if val == "-" else p
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val in ("^", "**"):
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise PolynomialSyntaxError("exponent must be a non-negative integer", pos)
            base = base ** int(val)
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return self.const(Fraction(val))
        if kind == "name":
            if val not in self.index:
                raise UnknownVariableError(f"unknown variable {val!r} at position {pos}")
            return Polynomial.var(self.index[val], self.n, self.names)
        if kind == "op" and val == "(":
            p = self.expr()
            k2, v2, p2 = self.take()
            if v2 != ")":
                raise PolynomialSyntaxError("expected ')'", p2)
            return p
        if kind == "end":
            raise PolynomialSyntaxError("unexpected end of input", pos)
        raise PolynomialSyntaxError(f"unexpected {val!r}", pos)


def parse(text: str, var_names: Sequence[str]) -> Polynomial:
    """Parse ``text`` into a polynomial over the variables ``var_names``."""
    return _Parser(text, var_names).parse()


def _render_order(terms):
    # later variables are more significant: u before y, y before x's
    return sorted(terms, key=lambda e: (sum(e), e[::-1]), reverse=True)


def _fmt_coef(c):
    if isinstance(c, Fraction):
        return f"{c.numerator}/{c.denominator}"
    return str(c)


def render(p: Polynomial) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for e in _render_order(p.terms):
        c = p.terms[e]
        neg = c < 0
        a = -c if neg else c
        mono = "*".join(
            (name if k == 1 else f"{name}^{k}") for name, k in zip(p.names, e) if k
        )
        if not mono:
            body = _fmt_coef(a)
        elif a == 1:
            body = mono
        else:
            body = f"{_fmt_coef(a)}*{mono}"
        if not parts:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append((" - " if neg else " + ") + body)
    return "".join(parts)


# -- calculus ----------------------------------------------------------------

def partial(p: Polynomial, i: int) -> Polynomial:
    """Formal partial derivative with respect to variable ``i``."""
    if not 0 <= i < p.nvars:
        raise IndexError(f"variable index {i} out of range for {p.nvars} variables")
    out = {}
    for e, c in p.terms.items():
        k = e[i]
        if k:
            out[e[:i] + (k - 1,) + e[i + 1:]] = _norm(c * k)
    return Polynomial._raw(p.nvars, out, p.names)


# -- resultants -------------------------------------------------------------

def sylvester_matrix(p: Polynomial, q: Polynomial, v: int):
    """Sylvester matrix of ``p`` and ``q`` in variable ``v`` (entries are polynomials)."""
    a = p.coefficients_in(v)[::-1]  # leading first
    b = q.coefficients_in(v)[::-1]
    m, n = len(a) - 1, len(b) - 1
    zero = Polynomial.zero(p.nvars, p.names)
    size = m + n
    rows = []
    for i in range(n):
        rows.append([zero] * i + a + [zero] * (size - m - 1 - i))
    for i in range(m):
        rows.append([zero] * i + b + [zero] * (size - n - 1 - i))
    return rows


def bareiss_det(rows):
    """Fraction-free determinant of a square matrix of polynomials."""
    mat = [list(r) for r in rows]
    size = len(mat)
    if size == 0:
        raise ValueError("empty matrix")
    one = Polynomial.constant(1, mat[0][0].nvars, mat[0][0].names)
    sign = 1
    prev = one
    for k in range(size - 1):
        if mat[k][k].is_zero():
            # prefer the sparsest nonzero pivot
            cands = [i for i in range(k + 1, size) if not mat[i][k].is_zero()]
            if not cands:
                return Polynomial.zero(one.nvars, one.names)
            piv = min(cands, key=lambda i: len(mat[i][k]))
            mat[k], mat[piv] = mat[piv], mat[k]
            sign = -sign
        akk = mat[k][k]
        for i in range(k + 1, size):
            aik = mat[i][k]
            row_i, row_k = mat[i], mat[k]
            for j in range(k + 1, size):
                if aik.is_zero():
                    t = row_i[j] * akk
                else:
                    t = row_i[j] * akk - aik * row_k[j]
                row_i[j] = t if (prev is one or t.is_zero()) else t.divexact(prev)
            row_i[k] = Polynomial.zero(one.nvars, one.names)
        prev = akk
    det = mat[-1][-1]
    return -det if sign < 0 else det


def resultant(p: Polynomial, q: Polynomial, v: int) -> Polynomial:
    """Resultant of ``p`` and ``q`` with respect to variable ``v``.

    Computed as the Bareiss determinant of the Sylvester matrix; the result
    lives in the same ring with ``v`` absent.

    Raises
    ------
    ValueError
        If either input has degree 0 in ``v``.
    """
    p._check(q)
    dp, dq = p.degree(v), q.degree(v)
    if dp == NEG_INF or dq == NEG_INF or dp < 1 or dq < 1:
        raise ValueError("both polynomials need positive degree in the elimination variable")
    return bareiss_det(sylvester_matrix(p, q, v))


# -- univariate root isolation ------------------------------------------------

def _dense(p: Polynomial, var: int):
    """Coefficient list (lowest degree first) of a polynomial in one variable."""
    if p.used_variables() - {var}:
        raise ValueError("polynomial is not univariate in the requested variable")
    deg = p.degree(var)
    coeffs = [Fraction(0)] * (deg + 1)
    for e, c in p.terms.items():
        coeffs[e[var]] = Fraction(c)
    return coeffs


def _strip(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _rem(a, b):
    a = list(a)
    db = len(b) - 1
    lb = b[-1]
    while len(a) - 1 >= db and a:
        f = a[-1] / lb
        shift = len(a) - 1 - db
        for k in range(db + 1):
            a[shift + k] -= f * b[k]
        a.pop()
        _strip(a)
    return a


def _quo(a, b):
    a = list(a)
    db = len(b) - 1
    if len(a) - 1 < db:
        return [Fraction(0)]
    q = [Fraction(0)] * (len(a) - db)
    lb = b[-1]
    while a and len(a) - 1 >= db:
        f = a[-1] / lb
        shift = len(a) - 1 - db
        q[shift] = f
        for k in range(db + 1):
            a[shift + k] -= f * b[k]
        a.pop()
        _strip(a)
    return q


def _gcd(a, b):
    a, b = _strip(list(a)), _strip(list(b))
    while b:
        a, b = b, _rem(a, b)
    return [c / a[-1] for c in a]


def _deriv(a):
    return [a[k] * k for k in range(1, len(a))]


def _horner(a, x):
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _sign(v):
    return (v > 0) - (v < 0)


def sturm_sequence(p: Polynomial, var: int = 0):
    """Sturm sequence (dense coefficient lists) of the square-free part of ``p``."""
    a = _dense(p, var)
    _strip(a)
    if not a:
        raise ValueError("zero polynomial has no Sturm sequence")
    g = _gcd(a, _deriv(a)) if len(a) > 1 else [Fraction(1)]
    sq = _quo(a, g) if len(g) > 1 else a
    seq = [sq, _deriv(sq)]
    while len(seq[-1]) > 0 and any(seq[-1]):
        r = _rem(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-c for c in r])
    return [s for s in seq if s]


def _variations(seq, x):
    signs = [_sign(_horner(s, x)) for s in seq]
    signs = [s for s in signs if s]
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def isolate_real_roots(p: Polynomial, interval, tol=1e-9, var: int | None = None):
    """Isolate every real root of a univariate polynomial inside ``interval``.

    Uses Sturm sequences with bisection, so no root is missed.

    Returns
    -------
    list of (Fraction, Fraction)
        Sorted, pairwise disjoint intervals.  ``lo == hi`` marks an exact
        rational root; otherwise the root lies in the open interval
        ``(lo, hi)`` and ``hi - lo <= tol``.
    """
    if p.is_zero():
        raise ValueError("zero polynomial")
    if var is None:
        used = p.used_variables()
        var = next(iter(used)) if used else 0
    lo, hi = (Fraction(interval[0]), Fraction(interval[1]))
    if lo > hi:
        raise ValueError("empty interval")
    tol = Fraction(tol)
    if p.is_constant():
        return []
    seq = sturm_sequence(p, var)
    sq = seq[0]
    out = []

    def value(x):
        return _horner(sq, x)

    if value(lo) == 0:
        out.append((lo, lo))
    if lo == hi:
        return out

    def count(a, b):
        return _variations(seq, a) - _variations(seq, b)

    fractions = (Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(2, 5), Fraction(3, 5))

    stack = [(lo, hi, count(lo, hi))]
    while stack:
        a, b, k = stack.pop()
        if k == 0:
            continue
        if k == 1 and (b - a <= tol or value(b) == 0):
            out.append((a, b))
            continue
        for fr in fractions:
            m = a + (b - a) * fr
            if value(m) != 0:
                break
        else:  # pragma: no cover - at most deg roots can block five points
            m = a + (b - a) * Fraction(3, 7)
        k_left = count(a, m)
        stack.append((m, b, k - k_left))
        stack.append((a, m, k_left))
    # roots sitting exactly on a right endpoint get reported as exact
    fixed = []
    for a, b in out:
        if a != b and value(b) == 0:
            fixed.append((b, b))
        else:
            fixed.append((a, b))
    return sorted(set(fixed))


# -- sympy bridge --------------------------------------------------------------

def to_sympy(p: Polynomial):
    import sympy

    syms = sympy.symbols(p.names)
    if not isinstance(syms, tuple):
        syms = (syms,)
    expr = sympy.Integer(0)
    for e, c in p.terms.items():
        t = sympy.Rational(Fraction(c).numerator, Fraction(c).denominator)
        for s, k in zip(syms, e):
            if k:
                t = t * s**k
        expr += t
    return expr, syms


def from_sympy(expr, names: Sequence[str]) -> Polynomial:
    import sympy

    syms = sympy.symbols(tuple(names))
    if not isinstance(syms, tuple):
        syms = (syms,)
    poly = sympy.Poly(sympy.expand(expr), *syms)
    terms = {}
    for monom, coef in poly.terms():
        c = sympy.Rational(coef)
        terms[tuple(monom)] = Fraction(int(c.p), int(c.q))
    return Polynomial(len(names), terms, names)


def factor(p: Polynomial):
    """Irreducible factorisation over the rationals.

    Returns ``(content, [(factor, multiplicity), ...])`` with primitive
    integer factors.  Delegates to sympy.
    """
    import sympy

    if p.is_zero():
        raise ValueError("cannot factor the zero polynomial")
    expr, syms = to_sympy(p)
    content, facs = sympy.factor_list(expr, *syms)
    out = [(from_sympy(f, p.names), int(m)) for f, m in facs]
    c = sympy.Rational(content)
    return Fraction(int(c.p), int(c.q)), out
