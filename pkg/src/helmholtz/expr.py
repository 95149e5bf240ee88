"""Exact algebra over separable polynomial / exponential / trigonometric terms.

Every univariate function handled here is a finite linear combination of atoms

    x**n * exp(p*x) * T(w*x),   T in {1, sin, cos},

with ``n`` a non-negative integer and ``p``, ``w`` exact rationals.  This class
is closed under differentiation, antidifferentiation and multiplication, which
is what makes exact potential matrices possible.

Multivariate expressions (:class:`ExprSum`) are kept fully expanded: a mapping
from a tuple of one atom per coordinate to a rational coefficient.  Two
expressions are equal iff their mappings are equal.

Antiderivative convention
-------------------------
Pure polynomial atoms integrate from zero (``x**n -> x**(n+1)/(n+1)``).  Atoms
carrying an exponential or a trigonometric factor integrate to the unique
antiderivative lying in the span of the same exp/trig family, i.e. without an
additive constant: ``A[cos(w x)] = sin(w x)/w`` and ``A[A[cos(w x)]] =
-cos(w x)/w**2``.  Only ``d/dx A[e] == e`` is needed downstream, and the
in-family choice keeps iterated antiderivatives proportional to the original
function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

import numpy as np

Scalar = Fraction
Number = Union[int, Fraction]

SIN = "sin"
COS = "cos"
_TRIG_ORDER = {None: 0, SIN: 1, COS: 2}


def as_scalar(value: Number | str) -> Fraction:
    """Coerce ints, Fractions and exact decimal strings to :class:`Fraction`."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise TypeError(f"exact rational expected, got {type(value).__name__}")


# ---------------------------------------------------------------------------
# atoms


@dataclass(frozen=True)
class Atom:
    """``x**degree * exp(rate*x) * trig(freq*x)``; ``freq > 0`` iff trig is set."""

    degree: int = 0
    rate: Fraction = Fraction(0)
    trig: Optional[str] = None
    freq: Fraction = Fraction(0)

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("atom degree must be non-negative")
        if self.trig is None:
            if self.freq != 0:
                raise ValueError("frequency given without trig factor")
        elif self.trig not in (SIN, COS) or self.freq <= 0:
            raise ValueError("trig atoms need sin/cos and a positive frequency")

    @property
    def key(self) -> tuple:
        return (self.degree, self.rate, _TRIG_ORDER[self.trig], self.freq)

    @property
    def is_one(self) -> bool:
        return self.degree == 0 and self.rate == 0 and self.trig is None

    @property
    def is_polynomial(self) -> bool:
        return self.rate == 0 and self.trig is None

    def __lt__(self, other: "Atom") -> bool:
        return self.key < other.key


ONE = Atom()


def make_atom(degree: int, rate: Number, trig: Optional[str], freq: Number) -> tuple[Fraction, Optional[Atom]]:
    """Normalize a raw atom description to ``(sign, atom)``.

    Negative frequencies are folded into the sign (``sin(-wx) = -sin(wx)``),
    ``sin(0) = 0`` yields ``(0, None)`` and ``cos(0) = 1`` drops the trig part.
    """
    rate = as_scalar(rate)
    freq = as_scalar(freq)
    if trig is None:
        return Fraction(1), Atom(degree, rate)
    if freq == 0:
        if trig == SIN:
            return Fraction(0), None
        return Fraction(1), Atom(degree, rate)
    sign = Fraction(1)
    if freq < 0:
        freq = -freq
        if trig == SIN:
            sign = -sign
    return sign, Atom(degree, rate, trig, freq)


def _add_into(acc: dict, key, coeff: Fraction) -> None:
    if coeff == 0:
        return
    total = acc.get(key, 0) + coeff
    if total:
        acc[key] = total
    else:
        acc.pop(key, None)


def _atom_derivative(atom: Atom) -> dict[Atom, Fraction]:
    out: dict[Atom, Fraction] = {}
    n, p, trig, w = atom.degree, atom.rate, atom.trig, atom.freq
    if n:
        _add_into(out, Atom(n - 1, p, trig, w), Fraction(n))
    if p:
        _add_into(out, atom, p)
    if trig == SIN:
        _add_into(out, Atom(n, p, COS, w), w)
    elif trig == COS:
        _add_into(out, Atom(n, p, SIN, w), -w)
    return out


def _cmul(a: tuple[Fraction, Fraction], b: tuple[Fraction, Fraction]) -> tuple[Fraction, Fraction]:
    return a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]


def _atom_antiderivative(atom: Atom) -> dict[Atom, Fraction]:
    n, p, trig, w = atom.degree, atom.rate, atom.trig, atom.freq
    if p == 0 and trig is None:
        return {Atom(n + 1): Fraction(1, n + 1)}
    # int x^n e^{zx} dx = e^{zx} sum_j (-1)^j n!/(n-j)! x^(n-j) / z^(j+1),  z = p + i w
    norm = p * p + w * w
    inv_z = (p / norm, -w / norm)
    power = inv_z
    out: dict[Atom, Fraction] = {}
    falling = 1
    for j in range(n + 1):
        re, im = power
        c = Fraction((-1) ** j * falling)
        m = n - j
        if trig is None:
            _add_into(out, Atom(m, p), c * re)
        elif trig == COS:
            # Re[(re + i im) e^{iwx}] = re cos - im sin
            _add_into(out, Atom(m, p, COS, w), c * re)
            _add_into(out, Atom(m, p, SIN, w), -c * im)
        else:
            # Im[(re + i im) e^{iwx}] = re sin + im cos
            _add_into(out, Atom(m, p, SIN, w), c * re)
            _add_into(out, Atom(m, p, COS, w), c * im)
        falling *= n - j
        power = _cmul(power, inv_z)
    return out


def _atom_product(a: Atom, b: Atom) -> dict[Atom, Fraction]:
    n = a.degree + b.degree
    p = a.rate + b.rate
    out: dict[Atom, Fraction] = {}

    def put(trig, freq, coeff):
        sign, atom = make_atom(n, p, trig, freq)
        if atom is not None:
            _add_into(out, atom, sign * coeff)

    if a.trig is None or b.trig is None:
        trig = a.trig or b.trig
        put(trig, a.freq if a.trig else b.freq, Fraction(1))
        return out
    half = Fraction(1, 2)
    u, v = a.freq, b.freq
    if a.trig == SIN and b.trig == SIN:
        put(COS, u - v, half)
        put(COS, u + v, -half)
    elif a.trig == COS and b.trig == COS:
        put(COS, u - v, half)
        put(COS, u + v, half)
    else:
        s, c = (u, v) if a.trig == SIN else (v, u)
        put(SIN, s + c, half)
        put(SIN, s - c, half)
    return out


def _atom_values(atom: Atom, x):
    """Evaluate an atom at a float or a numpy array."""
    mod = np if isinstance(x, np.ndarray) else math
    val = x ** atom.degree if atom.degree else (np.ones_like(x) if mod is np else 1.0)
    if atom.rate:
        val = val * mod.exp(float(atom.rate) * x)
    if atom.trig == SIN:
        val = val * mod.sin(float(atom.freq) * x)
    elif atom.trig == COS:
        val = val * mod.cos(float(atom.freq) * x)
    return val


def _atom_str(atom: Atom, var: str) -> list[str]:
    parts = []
    if atom.degree == 1:
        parts.append(var)
    elif atom.degree > 1:
        parts.append(f"{var}^{atom.degree}")
    if atom.rate:
        parts.append(f"exp({_linear_arg(atom.rate, var)})")
    if atom.trig:
        parts.append(f"{atom.trig}({_linear_arg(atom.freq, var)})")
    return parts


def _linear_arg(c: Fraction, var: str) -> str:
    if c == 1:
        return var
    if c == -1:
        return f"-{var}"
    return f"{c}*{var}"


def coordinate_name(j: int) -> str:
    """Zero-based coordinate index -> ``x1``-style name."""
    return f"x{j + 1}"


# ---------------------------------------------------------------------------
# univariate expressions


class UniExpr:
    """A finite combination of atoms in the single coordinate ``var`` (0-based)."""

    __slots__ = ("var", "_terms", "_hash")

    def __init__(self, var: int, terms: Mapping[Atom, Number] | None = None):
        self.var = var
        clean = {}
        for atom, c in (terms or {}).items():
            c = as_scalar(c)
            if c:
                clean[atom] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def constant(cls, var: int, value: Number = 1) -> "UniExpr":
        return cls(var, {ONE: value})

    @classmethod
    def atom(cls, var: int, atom: Atom, coeff: Number = 1) -> "UniExpr":
        return cls(var, {atom: coeff})

    @classmethod
    def monomial(cls, var: int, degree: int, coeff: Number = 1) -> "UniExpr":
        return cls(var, {Atom(degree): coeff})

    @classmethod
    def exp(cls, var: int, rate: Number, coeff: Number = 1) -> "UniExpr":
        sign, atom = make_atom(0, rate, None, 0)
        return cls(var, {atom: sign * as_scalar(coeff)})

    @classmethod
    def sin(cls, var: int, freq: Number, coeff: Number = 1) -> "UniExpr":
        sign, atom = make_atom(0, 0, SIN, freq)
        return cls(var, {atom: sign * as_scalar(coeff)} if atom else {})

    @classmethod
    def cos(cls, var: int, freq: Number, coeff: Number = 1) -> "UniExpr":
        sign, atom = make_atom(0, 0, COS, freq)
        return cls(var, {atom: sign * as_scalar(coeff)})

    @property
    def terms(self) -> Mapping[Atom, Fraction]:
        return dict(self._terms)

    def items(self) -> list[tuple[Atom, Fraction]]:
        return sorted(self._terms.items(), key=lambda kv: kv[0].key)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(a.is_one for a in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("expression is not constant")
        return self._terms.get(ONE, Fraction(0))

    def is_polynomial(self) -> bool:
        return all(a.is_polynomial for a in self._terms)

    def polynomial_degree(self) -> int:
        """Degree of a polynomial expression, -1 for zero."""
        if not self.is_polynomial():
            raise ValueError("expression is not a polynomial")
        return max((a.degree for a in self._terms), default=-1)

    def is_linear(self) -> bool:
        """True for ``a + b*x`` with ``b != 0``."""
        return self.is_polynomial() and self.polynomial_degree() == 1

    def _map(self, fn) -> "UniExpr":
        out: dict[Atom, Fraction] = {}
        for atom, c in self._terms.items():
            for a2, c2 in fn(atom).items():
                _add_into(out, a2, c * c2)
        return UniExpr(self.var, out)

    def derivative(self, order: int = 1) -> "UniExpr":
        e = self
        for _ in range(order):
            e = e._map(_atom_derivative)
        return e

    def antiderivative(self, order: int = 1) -> "UniExpr":
        e = self
        for _ in range(order):
            e = e._map(_atom_antiderivative)
        return e

    def scale(self, c: Number) -> "UniExpr":
        c = as_scalar(c)
        return UniExpr(self.var, {a: c * v for a, v in self._terms.items()})

    def __add__(self, other: "UniExpr") -> "UniExpr":
        self._check_var(other)
        out = dict(self._terms)
        for a, c in other._terms.items():
            _add_into(out, a, c)
        return UniExpr(self.var, out)

    def __neg__(self) -> "UniExpr":
        return self.scale(-1)

    def __sub__(self, other: "UniExpr") -> "UniExpr":
        return self + (-other)

    def __mul__(self, other) -> "UniExpr":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check_var(other)
        out: dict[Atom, Fraction] = {}
        for (a, ca), (b, cb) in product(self._terms.items(), other._terms.items()):
            for atom, c in _atom_product(a, b).items():
                _add_into(out, atom, ca * cb * c)
        return UniExpr(self.var, out)

    __rmul__ = __mul__

    def _check_var(self, other: "UniExpr") -> None:
        if not isinstance(other, UniExpr) or other.var != self.var:
            raise ValueError("univariate expressions live in different coordinates")

    def evaluate(self, x):
        total = 0.0
        for atom, c in self._terms.items():
            total = total + float(c) * _atom_values(atom, x)
        return total

    def __eq__(self, other) -> bool:
        return isinstance(other, UniExpr) and self.var == other.var and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.var, frozenset(self._terms.items())))
        return self._hash

    def __str__(self) -> str:
        return str(ExprSum.from_term(SeparableTerm.single(self.var + 1, self)))

    def __repr__(self) -> str:
        return f"UniExpr({coordinate_name(self.var)}: {self})"


def derivative(e: UniExpr) -> UniExpr:
    return e.derivative()


def antiderivative(e: UniExpr) -> UniExpr:
    """Canonical antiderivative (see module docstring for the convention)."""
    return e.antiderivative()


def iterate_antiderivative(e: UniExpr, p: int) -> UniExpr:
    if p < 1:
        raise ValueError("antiderivative order must be >= 1")
    return e.antiderivative(p)


# ---------------------------------------------------------------------------
# separable terms and sums


@dataclass(frozen=True)
class SeparableTerm:
    """``coefficient * prod_j factors[j](x_j)``."""

    coefficient: Fraction
    factors: tuple[UniExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficient", as_scalar(self.coefficient))
        object.__setattr__(self, "factors", tuple(self.factors))
        for j, fac in enumerate(self.factors):
            if fac.var != j:
                raise ValueError(f"factor {j} lives in coordinate {fac.var}")

    @classmethod
    def single(cls, n: int, factor: UniExpr, coefficient: Number = 1) -> "SeparableTerm":
        """Term depending on one coordinate only; other factors are 1."""
        facs = [factor if j == factor.var else UniExpr.constant(j) for j in range(n)]
        return cls(as_scalar(coefficient), tuple(facs))

    @classmethod
    def from_atoms(cls, coefficient: Number, atoms: Sequence[Atom]) -> "SeparableTerm":
        return cls(as_scalar(coefficient), tuple(UniExpr.atom(j, a) for j, a in enumerate(atoms)))

    @property
    def n(self) -> int:
        return len(self.factors)

    def own(self, k: int) -> UniExpr:
        return self.factors[k]

    def foreign_coordinates(self, k: int) -> list[int]:
        """Foreign coordinates the term actually depends on."""
        return [j for j, fac in enumerate(self.factors) if j != k and not fac.is_constant()]

    def foreign(self, k: int) -> ExprSum:
        """The product of all factors except the ``k``-th (factor ``k`` set to 1)."""
        facs = list(self.factors)
        facs[k] = UniExpr.constant(k)
        return ExprSum.from_term(SeparableTerm(Fraction(1), tuple(facs)))

    def to_sum(self) -> ExprSum:
        return ExprSum.from_term(self)

    def __str__(self) -> str:
        return str(self.to_sum())


Key = tuple  # tuple[Atom, ...] of length n


class ExprSum:
    """Canonical, fully expanded sum of separable monomials in ``n`` coordinates."""

    __slots__ = ("n", "_terms", "_hash")

    def __init__(self, n: int, terms: Mapping[Key, Number] | None = None):
        self.n = n
        clean = {}
        for key, c in (terms or {}).items():
            c = as_scalar(c)
            if c:
                if len(key) != n:
                    raise ValueError("term arity does not match dimension")
                clean[tuple(key)] = c
        self._terms = clean
        self._hash = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "ExprSum":
        return cls(n)

    @classmethod
    def constant(cls, n: int, value: Number) -> "ExprSum":
        return cls(n, {(ONE,) * n: value})

    @classmethod
    def coordinate(cls, n: int, j: int, degree: int = 1) -> "ExprSum":
        key = [ONE] * n
        key[j] = Atom(degree)
        return cls(n, {tuple(key): 1})

    @classmethod
    def from_atoms(cls, n: int, atoms: Mapping[int, Atom], coeff: Number = 1) -> "ExprSum":
        key = [ONE] * n
        for j, a in atoms.items():
            key[j] = a
        return cls(n, {tuple(key): coeff})

    @classmethod
    def from_term(cls, term: SeparableTerm) -> "ExprSum":
        out: dict[Key, Fraction] = {}
        if term.coefficient == 0:
            return cls(term.n)
        per_coord = [fac.items() for fac in term.factors]
        for combo in product(*per_coord):
            c = term.coefficient
            for _, ci in combo:
                c *= ci
            _add_into(out, tuple(a for a, _ in combo), c)
        return cls(term.n, out)

    @classmethod
    def from_uni(cls, n: int, e: UniExpr) -> "ExprSum":
        return cls.from_term(SeparableTerm.single(n, e))

    # -- inspection -------------------------------------------------------

    def items(self) -> list[tuple[Key, Fraction]]:
        return sorted(self._terms.items(), key=lambda kv: tuple(a.key for a in reversed(kv[0])))

    def terms(self) -> Iterator[SeparableTerm]:
        """Monomials in deterministic order, as single-atom separable terms."""
        for key, c in self.items():
            yield SeparableTerm.from_atoms(c, key)

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient_of(self, key: Key) -> Fraction:
        return self._terms.get(tuple(key), Fraction(0))

    def depends_on(self) -> set[int]:
        return {j for key in self._terms for j, a in enumerate(key) if not a.is_one}

    def is_constant(self) -> bool:
        return not self.depends_on()

    # -- algebra ----------------------------------------------------------

    def _coerce(self, other) -> "ExprSum":
        if isinstance(other, ExprSum):
            if other.n != self.n:
                raise ValueError("dimension mismatch")
            return other
        if isinstance(other, (int, Fraction)):
            return ExprSum.constant(self.n, other)
        return NotImplemented

    def __add__(self, other) -> "ExprSum":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for k, c in other._terms.items():
            _add_into(out, k, c)
        return ExprSum(self.n, out)

    __radd__ = __add__

    def __neg__(self) -> "ExprSum":
        return self.scale(-1)

    def __sub__(self, other) -> "ExprSum":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "ExprSum":
        return (-self) + other

    def scale(self, c: Number) -> "ExprSum":
        c = as_scalar(c)
        if c == 0:
            return ExprSum(self.n)
        return ExprSum(self.n, {k: c * v for k, v in self._terms.items()})

    def __mul__(self, other) -> "ExprSum":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Key, Fraction] = {}
        for (ka, ca), (kb, cb) in product(self._terms.items(), other._terms.items()):
            per_coord = []
            for a, b in zip(ka, kb):
                if a.is_one:
                    per_coord.append(((b, Fraction(1)),))
                elif b.is_one:
                    per_coord.append(((a, Fraction(1)),))
                else:
                    per_coord.append(tuple(_atom_product(a, b).items()))
            for combo in product(*per_coord):
                c = ca * cb
                for _, ci in combo:
                    c *= ci
                _add_into(out, tuple(a for a, _ in combo), c)
        return ExprSum(self.n, out)

    __rmul__ = __mul__

    def _map_coordinate(self, j: int, fn) -> "ExprSum":
        out: dict[Key, Fraction] = {}
        for key, c in self._terms.items():
            for a2, c2 in fn(key[j]).items():
                _add_into(out, key[:j] + (a2,) + key[j + 1:], c * c2)
        return ExprSum(self.n, out)

    def partial(self, j: int, order: int = 1) -> "ExprSum":
        e = self
        for _ in range(order):
            e = e._map_coordinate(j, _atom_derivative)
        return e

    def antiderivative(self, j: int, order: int = 1) -> "ExprSum":
        e = self
        for _ in range(order):
            e = e._map_coordinate(j, _atom_antiderivative)
        return e

    def laplacian(self, coordinates: Iterable[int] | None = None) -> "ExprSum":
        coords = range(self.n) if coordinates is None else coordinates
        total = ExprSum(self.n)
        for j in coords:
            total = total + self.partial(j, 2)
        return total

    def gradient(self) -> list["ExprSum"]:
        return [self.partial(j) for j in range(self.n)]

    def substitute_zero_dimension(self, n: int) -> "ExprSum":
        """Embed into a higher dimension (extra coordinates absent)."""
        if n < self.n:
            raise ValueError("cannot shrink dimension")
        pad = (ONE,) * (n - self.n)
        return ExprSum(n, {k + pad: c for k, c in self._terms.items()})

    # -- evaluation -------------------------------------------------------

    def evaluate(self, x: Sequence[float]) -> float:
        if len(x) != self.n:
            raise ValueError(f"point has {len(x)} coordinates, expected {self.n}")
        xs = [float(v) for v in x]
        total = 0.0
        for key, c in self._terms.items():
            val = float(c)
            for a, xj in zip(key, xs):
                if not a.is_one:
                    val *= _atom_values(a, xj)
            total += val
        return total

    def evaluate_many(self, points) -> np.ndarray:
        """Vectorized evaluation at an ``(N, n)`` array of points."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.n:
            raise ValueError(f"expected an (N, {self.n}) array of points")
        cache: dict[tuple[int, Atom], np.ndarray] = {}
        total = np.zeros(pts.shape[0])
        for key, c in self._terms.items():
            val = np.full(pts.shape[0], float(c))
            for j, a in enumerate(key):
                if a.is_one:
                    continue
                col = cache.get((j, a))
                if col is None:
                    col = cache[(j, a)] = _atom_values(a, pts[:, j])
                val *= col
            total += val
        return total

    # -- identity ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = ExprSum.constant(self.n, other)
        return isinstance(other, ExprSum) and self.n == other.n and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self._terms.items())))
        return self._hash

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        out = []
        for i, (key, c) in enumerate(self.items()):
            factors = []
            for j, a in enumerate(key):
                factors.extend(_atom_str(a, coordinate_name(j)))
            mag = abs(c)
            body = "*".join(([str(mag)] if mag != 1 or not factors else []) + factors)
            if i == 0:
                out.append(("-" if c < 0 else "") + body)
            else:
                out.append((" - " if c < 0 else " + ") + body)
        return "".join(out)

    def __repr__(self) -> str:
        return f"ExprSum({self})"


def laplacian_foreign(t: SeparableTerm, k: int, power: int = 1) -> ExprSum:
    """Apply the Laplacian over all coordinates except ``k`` (``power`` times)."""
    e = t.to_sum()
    foreign = [j for j in range(t.n) if j != k]
    for _ in range(power):
        e = e.laplacian(foreign)
    return e


def proportionality(a: ExprSum, b: ExprSum) -> Optional[Fraction]:
    """Return ``C`` with ``a == C*b`` exactly, or ``None``.

    ``a == b == 0`` gives ``C = 0`` by convention.
    """
    if b.is_zero():
        return Fraction(0) if a.is_zero() else None
    if a.is_zero():
        return Fraction(0)
    if len(a) != len(b):
        return None
    key, cb = next(iter(b._terms.items()))
    ca = a._terms.get(key)
    if ca is None:
        return None
    ratio = ca / cb
    for k, v in b._terms.items():
        if a._terms.get(k) != ratio * v:
            return None
    return ratio


def evaluate(e: ExprSum, x: Sequence[float]) -> float:
    return e.evaluate(x)
