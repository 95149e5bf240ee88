"""Field-specification documents.

A document is a list of ``name = value`` statements separated by newlines or
``;``; ``#`` starts a comment.  Recognised left-hand sides::

    n = 3                      dimension (optional, inferred otherwise)
    a = 1/5                    parameter binding (any other identifier)
    f1 = -x2 - x3              component expressions
    option.method = 2b         decomposition options (fixtures)
    expect.G = ...             expected parts (fixtures): G, F[i,j], R[i,j], g[i], r[i]

Expressions use ``+ - * / ^`` and parentheses over rationals (``3/4``,
``0.25`` read exactly), bound parameters, coordinates ``x1 .. xn`` and the
atoms ``exp(..)``, ``sin(..)``, ``cos(..)`` whose argument must be linear in
the coordinates.  Division is only by constants and exponents must be
non-negative integer constants.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional

import numpy as np

from .decomp import VectorField
from .expr import COS, SIN, Atom, ExprSum, make_atom

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<num>\d+(?:\.\d*)?|\.\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)?)
  | (?P<op>[-+*/^()\[\],])
    """,
    re.VERBOSE,
)
_COORD = re.compile(r"x(\d+)$")
_COMPONENT = re.compile(r"f(\d+)$")
_FUNCS = ("exp", "sin", "cos")


class FieldSpecError(Exception):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


class ParseError(FieldSpecError):
    def __init__(self, message: str, line: int = 0, column: int = 0, expected: frozenset[str] = frozenset()):
        self.expected = frozenset(expected)
        if expected:
            message += " (expected one of: " + ", ".join(sorted(self.expected)) + ")"
        super().__init__(message, line, column)


class UnboundParameter(FieldSpecError):
    pass


class NonSeparableExpression(FieldSpecError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str, line: int, col0: int) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), line, col0 + pos))
        pos = m.end()
    tokens.append(Token("end", "", line, col0 + len(text)))
    return tokens


class _ExprParser:
    """Recursive descent over one right-hand side, producing an :class:`ExprSum`."""

    funcs = _FUNCS

    def __init__(self, tokens: list[Token], n: int, params: Mapping[str, Fraction]):
        self.tokens = tokens
        self.i = 0
        self.n = n
        self.params = params

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def fail(self, message: str, expected=()) -> ParseError:
        return ParseError(message, self.tok.line, self.tok.column, frozenset(expected))

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            raise self.fail(f"unexpected {self.tok.text or 'end of input'!r}", {text})
        return self.advance()

    def parse(self) -> ExprSum:
        e = self.sum()
        if self.tok.kind != "end":
            raise self.fail(f"unexpected {self.tok.text!r}", {"+", "-", "*", "/", "^", "end of expression"})
        return e

    def sum(self) -> ExprSum:
        e = self.product()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            rhs = self.product()
            e = e + rhs if op == "+" else e - rhs
        return e

    def product(self) -> ExprSum:
        e = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance()
            rhs = self.unary()
            e = e * rhs if op.text == "*" else self.divide(e, rhs, op)
        return e

    def divide(self, e: ExprSum, rhs: ExprSum, op: Token) -> ExprSum:
        if not rhs.is_constant() or rhs.is_zero():
            raise ParseError("division only by non-zero constants", op.line, op.column)
        return e.scale(1 / _const(rhs))

    def unary(self) -> ExprSum:
        if self.tok.text in ("-", "+"):
            op = self.advance().text
            e = self.unary()
            return -e if op == "-" else e
        return self.power()

    def power(self) -> ExprSum:
        base = self.primary()
        if self.tok.text == "^":
            op = self.advance()
            return self.raise_power(base, self.unary(), op)
        return base

    def raise_power(self, base: ExprSum, exponent: ExprSum, op: Token) -> ExprSum:
        if not exponent.is_constant():
            raise ParseError("exponent must be a constant", op.line, op.column)
        value = _const(exponent)
        if value.denominator != 1 or value < 0:
            raise ParseError(f"exponent must be a non-negative integer, got {value}", op.line, op.column)
        return _power(base, int(value))

    def constant(self, value: Fraction) -> ExprSum:
        return ExprSum.constant(self.n, value)

    def coordinate(self, j: int) -> ExprSum:
        return ExprSum.coordinate(self.n, j)

    def primary(self) -> ExprSum:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return self.constant(Fraction(t.text))
        if t.text == "(":
            self.advance()
            e = self.sum()
            self.expect(")")
            return e
        if t.kind == "name":
            self.advance()
            if t.text in self.funcs:
                self.expect("(")
                arg = self.sum()
                self.expect(")")
                return self.function(t, arg)
            m = _COORD.match(t.text)
            if m:
                j = int(m.group(1))
                if not 1 <= j <= self.n:
                    raise ParseError(f"coordinate {t.text} outside x1..x{self.n}", t.line, t.column)
                return self.coordinate(j - 1)
            if t.text in self.params:
                return self.constant(self.params[t.text])
            raise UnboundParameter(f"unbound parameter {t.text!r}", t.line, t.column)
        raise self.fail(
            f"unexpected {t.text or 'end of input'!r}", {"number", "parameter", "coordinate", "(", *self.funcs}
        )

    def function(self, t: Token, arg: ExprSum) -> ExprSum:
        slopes: dict[int, Fraction] = {}
        for key, c in arg.items():
            live = [(j, a) for j, a in enumerate(key) if not a.is_one]
            if not live:
                raise ParseError(f"{t.text}() argument must not contain a constant offset", t.line, t.column)
            if len(live) > 1:
                raise NonSeparableExpression(
                    f"{t.text}() argument mixes coordinates in one product", t.line, t.column
                )
            j, a = live[0]
            if a != Atom(1):
                raise ParseError(f"{t.text}() argument must be linear in the coordinates", t.line, t.column)
            slopes[j] = c
        if t.text == "exp":
            out = ExprSum.constant(self.n, 1)
            for j, c in slopes.items():
                _, atom = make_atom(0, c, None, 0)
                out = out * ExprSum.from_atoms(self.n, {j: atom})
            return out
        if len(slopes) > 1:
            raise NonSeparableExpression(f"{t.text}() of a sum of coordinates is not separable", t.line, t.column)
        trig = SIN if t.text == "sin" else COS
        if not slopes:
            return ExprSum.constant(self.n, 0 if trig == SIN else 1)
        ((j, w),) = slopes.items()
        sign, atom = make_atom(0, 0, trig, w)
        return ExprSum.from_atoms(self.n, {j: atom}, sign)


def _const(e: ExprSum) -> Fraction:
    return e.coefficient_of((Atom(),) * e.n)


def _power(base: ExprSum, k: int) -> ExprSum:
    out = ExprSum.constant(base.n, 1)
    sq = base
    while k:
        if k & 1:
            out = out * sq
        k >>= 1
        if k:
            sq = sq * sq
    return out


class _Numeric:
    """A compiled real-valued function of ``(N, n)`` point arrays."""

    __slots__ = ("fn", "value")

    def __init__(self, fn, value: Optional[float] = None):
        self.fn = fn
        self.value = value  # set when the expression is a constant

    @classmethod
    def lift(cls, value: float) -> "_Numeric":
        return cls(lambda pts: np.full(len(pts), value), value)

    def _combine(self, other: "_Numeric", op) -> "_Numeric":
        a, b = self.fn, other.fn
        value = op(self.value, other.value) if self.value is not None and other.value is not None else None
        return _Numeric(lambda pts: op(a(pts), b(pts)), value)

    def __add__(self, other):
        return self._combine(other, lambda u, v: u + v)

    def __sub__(self, other):
        return self._combine(other, lambda u, v: u - v)

    def __mul__(self, other):
        return self._combine(other, lambda u, v: u * v)

    def __neg__(self):
        fn = self.fn
        return _Numeric(lambda pts: -fn(pts), None if self.value is None else -self.value)


_NUMERIC_FUNCS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "sqrt": np.sqrt, "log": np.log}


class _NumericParser(_ExprParser):
    """Same grammar, compiled to numpy functions; any argument and real exponents allowed."""

    funcs = tuple(_NUMERIC_FUNCS)

    def divide(self, e, rhs, op):
        return e._combine(rhs, lambda u, v: u / v)

    def raise_power(self, base, exponent, op):
        return base._combine(exponent, lambda u, v: u**v)

    def constant(self, value):
        return _Numeric.lift(float(value))

    def coordinate(self, j):
        return _Numeric(lambda pts: np.asarray(pts, dtype=float)[:, j])

    def function(self, t, arg):
        fn, inner = _NUMERIC_FUNCS[t.text], arg.fn
        value = None if arg.value is None else float(fn(arg.value))
        return _Numeric(lambda pts: fn(inner(pts)), value)


def parse_expr(text: str, n: int, params: Optional[Mapping[str, Fraction]] = None, line: int = 1, column: int = 1) -> ExprSum:
    """Parse one expression over ``x1 .. xn``."""
    return _ExprParser(_tokenize(text, line, column), n, dict(params or {})).parse()


# ---------------------------------------------------------------------------
# documents


Expectation = tuple  # ("G",) | ("F", i, j) | ("R", i, j) | ("g", i) | ("r", i), zero based


@dataclass
class FieldSpecDocument:
    n: int
    params: dict[str, Fraction] = field(default_factory=dict)
    components: tuple[ExprSum, ...] = ()
    options: dict[str, str] = field(default_factory=dict)
    expectations: dict[Expectation, ExprSum] = field(default_factory=dict)

    @property
    def field(self) -> VectorField:
        return VectorField(self.components)


@dataclass(frozen=True)
class _Statement:
    lhs: str
    rhs: str
    line: int
    column: int  # column where the rhs starts
    lhs_column: int


def _statements(text: str) -> list[_Statement]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        offset = 0
        for chunk in body.split(";"):
            start = offset
            offset += len(chunk) + 1
            if not chunk.strip():
                continue
            if "=" not in chunk:
                col = start + len(chunk) - len(chunk.lstrip()) + 1
                raise ParseError("statement without '='", lineno, col, frozenset({"="}))
            lhs, rhs = chunk.split("=", 1)
            lhs_col = start + len(lhs) - len(lhs.lstrip()) + 1
            out.append(_Statement(lhs.strip(), rhs, lineno, start + len(lhs) + 2, lhs_col))
    return out


_EXPECT = re.compile(r"expect\.(?:(G)|([FR])\[\s*(\d+)\s*,\s*(\d+)\s*\]|([gr])\[\s*(\d+)\s*\])$")


def _infer_dimension(stmts: list[_Statement]) -> int:
    n = 0
    for s in stmts:
        m = _COMPONENT.match(s.lhs)
        if m:
            n = max(n, int(m.group(1)))
        for x in re.findall(r"\bx(\d+)\b", s.rhs):
            n = max(n, int(x))
    return max(n, 1)


def parse_document(text: str, params: Optional[Mapping[str, Fraction]] = None) -> FieldSpecDocument:
    """Parse a full document; ``params`` override bindings made in the text."""
    stmts = _statements(text)
    n = None
    for s in stmts:
        if s.lhs == "n":
            try:
                n = int(s.rhs.strip())
            except ValueError:
                raise ParseError("dimension must be a positive integer", s.line, s.column) from None
            if n < 1:
                raise ParseError("dimension must be a positive integer", s.line, s.column)
    if n is None:
        n = _infer_dimension(stmts)

    overrides = {k: Fraction(v) for k, v in (params or {}).items()}
    bound: dict[str, Fraction] = dict(overrides)
    doc = FieldSpecDocument(n)
    comps = [ExprSum.zero(n) for _ in range(n)]
    seen_components: set[int] = set()
    deferred = []
    for s in stmts:
        if s.lhs == "n":
            continue
        if s.lhs.startswith("option."):
            doc.options[s.lhs[len("option."):]] = s.rhs.strip()
        elif _COMPONENT.match(s.lhs) or s.lhs.startswith("expect."):
            deferred.append(s)
        elif re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", s.lhs) and not _COORD.match(s.lhs) and s.lhs not in _FUNCS:
            if s.lhs in overrides:
                continue
            value = parse_expr(s.rhs, n, bound, s.line, s.column)
            if not value.is_constant():
                raise ParseError(f"parameter {s.lhs!r} must be a constant", s.line, s.column)
            bound[s.lhs] = _const(value)
        else:
            raise ParseError(
                f"invalid left-hand side {s.lhs!r}", s.line, s.lhs_column,
                frozenset({"n", "fK", "parameter", "option.NAME", "expect.PART"}),
            )
    doc.params = bound
    for s in deferred:
        expr = parse_expr(s.rhs, n, bound, s.line, s.column)
        m = _COMPONENT.match(s.lhs)
        if m:
            k = int(m.group(1))
            if not 1 <= k <= n:
                raise ParseError(f"component {s.lhs} outside f1..f{n}", s.line, s.lhs_column)
            if k in seen_components:
                raise ParseError(f"component {s.lhs} defined twice", s.line, s.lhs_column)
            seen_components.add(k)
            comps[k - 1] = expr
            continue
        m = _EXPECT.match(s.lhs)
        if m is None:
            raise ParseError(
                f"invalid expectation {s.lhs!r}", s.line, s.lhs_column,
                frozenset({"expect.G", "expect.F[i,j]", "expect.R[i,j]", "expect.g[i]", "expect.r[i]"}),
            )
        if m.group(1):
            key: Expectation = ("G",)
        elif m.group(2):
            key = (m.group(2), int(m.group(3)) - 1, int(m.group(4)) - 1)
        else:
            key = (m.group(5), int(m.group(6)) - 1)
        if any(not 0 <= idx < n for idx in key[1:]):
            raise ParseError(f"index out of range in {s.lhs!r}", s.line, s.lhs_column)
        doc.expectations[key] = expr
    doc.components = tuple(comps)
    return doc


def parse_field(text: str, params: Optional[Mapping[str, Fraction]] = None) -> VectorField:
    """Parse a field document into a canonical :class:`VectorField`."""
    return parse_document(text, params).field


def parse_numeric_field(text: str, params: Optional[Mapping[str, float]] = None) -> tuple[int, list[Callable]]:
    """Compile a field document to vectorized component functions.

    Unlike :func:`parse_field` this accepts any argument inside ``exp``,
    ``sin`` and ``cos``, real exponents, division by expressions and the
    extra functions ``sqrt`` and ``log``; it is meant for fields outside the
    exact atom class, such as decaying fields for numeric decomposition.
    ``option.*`` and ``expect.*`` statements are ignored.
    """
    stmts = [s for s in _statements(text) if not s.lhs.startswith(("option.", "expect."))]
    n = next((int(s.rhs) for s in stmts if s.lhs == "n"), None) or _infer_dimension(stmts)
    bound = {k: float(v) for k, v in (params or {}).items()}

    def compile_rhs(s: _Statement) -> _Numeric:
        return _NumericParser(_tokenize(s.rhs, s.line, s.column), n, bound).parse()

    comps: list[Callable] = [_Numeric.lift(0.0).fn for _ in range(n)]
    for s in stmts:
        if s.lhs == "n":
            continue
        m = _COMPONENT.match(s.lhs)
        if m:
            k = int(m.group(1))
            if not 1 <= k <= n:
                raise ParseError(f"component {s.lhs} outside f1..f{n}", s.line, s.lhs_column)
            comps[k - 1] = compile_rhs(s).fn
        elif re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", s.lhs) and not _COORD.match(s.lhs):
            if s.lhs in (params or {}):
                continue
            value = compile_rhs(s).value
            if value is None:
                raise ParseError(f"parameter {s.lhs!r} must be a constant", s.line, s.column)
            bound[s.lhs] = value
        else:
            raise ParseError(f"invalid left-hand side {s.lhs!r}", s.line, s.lhs_column)
    return n, comps
