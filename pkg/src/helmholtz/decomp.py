"""Analytical Helmholtz decomposition through potential matrices.

A potential matrix ``F`` determines everything else:

    G      = trace(F)
    R[i,k] = F[i,k] - F[k,i]
    g[i]   = d G / d x_i
    r[i]   = sum_k d R[i,k] / d x_k

``g`` is a gradient and ``r`` is divergence free for *any* ``F``; the work is in
choosing ``F`` so that ``g + r`` reproduces the input field.  Fields are split
into separable monomials, each monomial ``c * u(x_k) * v(x_{!=k})`` in
component ``k`` gets its own potential matrix, and the matrices are summed.

Indices in this API are zero based; rendered output uses ``x1 .. xn``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .expr import ExprSum, Number, SeparableTerm, UniExpr, as_scalar, proportionality

DEFAULT_LAMBDA_MAX = 16


class Method(str, enum.Enum):
    COR5 = "Cor5"
    COR6 = "Cor6"
    COR7 = "Cor7"
    COR8 = "Cor8"
    COND2A = "Cond2a"
    COND2B = "Cond2b"


_FAMILY_2A = {Method.COR5, Method.COR7, Method.COND2A}


class Reason(str, enum.Enum):
    LAMBDA_EXCEEDED = "LambdaExceeded"
    RESONANCE = "ResonanceCEquals1"
    INAPPLICABLE_2B = "MultiForeign2bInapplicable"


class Prefer(str, enum.Enum):
    AUTO = "auto"
    FORCE_2A = "force2a"
    FORCE_2B = "force2b"


class NoDecomposition(Exception):
    def __init__(self, component: int, term: SeparableTerm, reason: Reason, detail: str = ""):
        self.component = component
        self.term = term
        self.reason = Reason(reason)
        msg = f"no decomposition for term {term} in component f{component + 1}: {self.reason.value}"
        if self.reason is Reason.RESONANCE:
            msg += " (C = 1 at every admissible lambda)"
        if detail:
            msg += f"; {detail}"
        super().__init__(msg)


class HarmonicCheckFailed(Exception):
    pass


# ---------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class VectorField:
    components: tuple[ExprSum, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if any(c.n != len(comps) for c in comps):
            raise ValueError("every component must use the field dimension")

    @classmethod
    def zero(cls, n: int) -> "VectorField":
        return cls(tuple(ExprSum.zero(n) for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> ExprSum:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a - b for a, b in zip(self, other)))

    def scale(self, c: Number) -> "VectorField":
        return VectorField(tuple(a.scale(c) for a in self))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self)

    def divergence(self) -> ExprSum:
        total = ExprSum.zero(self.n)
        for i, c in enumerate(self):
            total = total + c.partial(i)
        return total

    def evaluate(self, x) -> list[float]:
        return [c.evaluate(x) for c in self]

    def __str__(self) -> str:
        return "[" + ", ".join(str(c) for c in self) + "]"


@dataclass(frozen=True)
class PotentialMatrix:
    entries: tuple[tuple[ExprSum, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        object.__setattr__(self, "entries", rows)
        n = len(rows)
        if any(len(r) != n or any(e.n != n for e in r) for r in rows):
            raise ValueError("potential matrix must be n x n over n coordinates")

    @classmethod
    def zero(cls, n: int) -> "PotentialMatrix":
        return cls(tuple(tuple(ExprSum.zero(n) for _ in range(n)) for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij: tuple[int, int]) -> ExprSum:
        i, j = ij
        return self.entries[i][j]

    def __add__(self, other: "PotentialMatrix") -> "PotentialMatrix":
        return PotentialMatrix(
            tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(self.entries, other.entries))
        )

    def scale(self, c: Number) -> "PotentialMatrix":
        return PotentialMatrix(tuple(tuple(e.scale(c) for e in row) for row in self.entries))

    def trace(self) -> ExprSum:
        total = ExprSum.zero(self.n)
        for k in range(self.n):
            total = total + self.entries[k][k]
        return total

    def rotation_potential(self) -> tuple[tuple[ExprSum, ...], ...]:
        n = self.n
        return tuple(tuple(self.entries[i][k] - self.entries[k][i] for k in range(n)) for i in range(n))


@dataclass(frozen=True)
class TermReport:
    component: int
    term: SeparableTerm
    method: Method
    lam: int
    c_value: Fraction
    foreign: Optional[int] = None  # the foreign coordinate m integrated by 2b-family paths


@dataclass(frozen=True)
class Decomposition:
    field: VectorField
    F: PotentialMatrix
    G: ExprSum
    R: tuple[tuple[ExprSum, ...], ...]
    g: VectorField
    r: VectorField
    reports: tuple[TermReport, ...] = ()
    gauge: Optional[ExprSum] = None

    @property
    def n(self) -> int:
        return self.field.n


def extract(F: PotentialMatrix) -> tuple[ExprSum, tuple, VectorField, VectorField]:
    """Gradient potential, rotation potential and both fields from ``F``."""
    n = F.n
    G = F.trace()
    R = F.rotation_potential()
    g = VectorField(tuple(G.partial(i) for i in range(n)))
    r_parts = []
    for i in range(n):
        total = ExprSum.zero(n)
        for k in range(n):
            if k != i:
                total = total + R[i][k].partial(k)
        r_parts.append(total)
    return G, R, g, VectorField(tuple(r_parts))


def from_potential(f: VectorField, F: PotentialMatrix, reports: Sequence[TermReport] = ()) -> Decomposition:
    G, R, g, r = extract(F)
    return Decomposition(f, F, G, R, g, r, tuple(reports))


# ---------------------------------------------------------------------------
# condition search


@dataclass(frozen=True)
class _Search:
    lam: Optional[int] = None
    c_value: Optional[Fraction] = None
    foreign: Optional[int] = None
    reason: Optional[Reason] = None


def _outer(u: UniExpr, rest: ExprSum) -> ExprSum:
    return ExprSum.from_uni(rest.n, u) * rest


def _search_2a(t: SeparableTerm, k: int, lambda_max: int) -> _Search:
    u = t.own(k)
    v = t.foreign(k)
    target = _outer(u, v)
    foreign = [j for j in range(t.n) if j != k]
    au, lv = u, v
    resonant = False
    for lam in range(1, lambda_max + 1):
        au = au.antiderivative(2)
        lv = lv.laplacian(foreign)
        lhs = _outer(au, lv).scale((-1) ** lam)
        c = proportionality(lhs, target)
        if c is not None:
            if c != 1:
                return _Search(lam, c)
            resonant = True
    return _Search(reason=Reason.RESONANCE if resonant else Reason.LAMBDA_EXCEEDED)


def _search_2b(t: SeparableTerm, k: int, lambda_max: int) -> _Search:
    foreign = t.foreign_coordinates(k)
    if len(foreign) != 1:
        return _Search(reason=Reason.INAPPLICABLE_2B)
    (m,) = foreign
    n = t.n
    u, v = t.own(k), t.factors[m]
    target = ExprSum.from_uni(n, u) * ExprSum.from_uni(n, v)
    du, av = u, v
    resonant = False
    for lam in range(1, lambda_max + 1):
        du = du.derivative(2)
        av = av.antiderivative(2)
        lhs = (ExprSum.from_uni(n, du) * ExprSum.from_uni(n, av)).scale((-1) ** lam)
        c = proportionality(lhs, target)
        if c is not None:
            if c != 1:
                return _Search(lam, c, m)
            resonant = True
    return _Search(reason=Reason.RESONANCE if resonant else Reason.LAMBDA_EXCEEDED, foreign=m)


def find_condition_2a(t: SeparableTerm, k: int, lambda_max: int = DEFAULT_LAMBDA_MAX) -> Optional[tuple[int, Fraction]]:
    """Least ``lam`` with ``(-1)^lam A^(2 lam) u * Lap^lam v == C u v`` and ``C != 1``."""
    s = _search_2a(t, k, lambda_max)
    return None if s.lam is None else (s.lam, s.c_value)


def find_condition_2b(
    t: SeparableTerm, k: int, lambda_max: int = DEFAULT_LAMBDA_MAX
) -> Optional[tuple[int, Fraction, int]]:
    """Least ``lam`` with ``(-1)^lam u^(2 lam) * A^(2 lam) v == C u v`` and ``C != 1``.

    Only applies when the term depends on exactly one foreign coordinate ``m``.
    """
    s = _search_2b(t, k, lambda_max)
    return None if s.lam is None else (s.lam, s.c_value, s.foreign)


# ---------------------------------------------------------------------------
# potential matrices for one term


def _row_matrix(n: int, k: int, row: dict[int, ExprSum]) -> PotentialMatrix:
    zero = ExprSum.zero(n)
    return PotentialMatrix(
        tuple(tuple(row.get(j, zero) if i == k else zero for j in range(n)) for i in range(n))
    )


def potential_from_2a(t: SeparableTerm, k: int, lam: int, c_value: Number) -> PotentialMatrix:
    """Row ``k``: ``F[k,j] = sum_p (-1)^p/(1-C) d_j[(A^(2p+2) u)(Lap^p v)]``."""
    n = t.n
    c_value = as_scalar(c_value)
    if c_value == 1:
        raise ValueError("C = 1 has no potential matrix")
    scale = t.coefficient / (1 - c_value)
    foreign = [j for j in range(n) if j != k]
    au = t.own(k).antiderivative(2)
    lv = t.foreign(k)
    acc = ExprSum.zero(n)
    for p in range(lam):
        acc = acc + _outer(au, lv).scale((-1) ** p)
        au = au.antiderivative(2)
        lv = lv.laplacian(foreign)
    acc = acc.scale(scale)
    return _row_matrix(n, k, {j: acc.partial(j) for j in range(n)})


def potential_from_2b(t: SeparableTerm, k: int, lam: int, c_value: Number, m: int) -> PotentialMatrix:
    """Entries ``(k,k)`` and ``(k,m)``:
    ``F[k,j] = sum_p (-1)^p/(1-C) d_j[(u^(2p))(A^(2p+2) v)]``."""
    n = t.n
    c_value = as_scalar(c_value)
    if c_value == 1:
        raise ValueError("C = 1 has no potential matrix")
    scale = t.coefficient / (1 - c_value)
    du = t.own(k)
    av = t.factors[m].antiderivative(2)
    acc = ExprSum.zero(n)
    for p in range(lam):
        acc = acc + (ExprSum.from_uni(n, du) * ExprSum.from_uni(n, av)).scale((-1) ** p)
        du = du.derivative(2)
        av = av.antiderivative(2)
    acc = acc.scale(scale)
    return _row_matrix(n, k, {k: acc.partial(k), m: acc.partial(m)})


# ---------------------------------------------------------------------------
# per-term driver


def _fast_path(t: SeparableTerm, k: int, prefer: Prefer) -> Optional[tuple[Method, Optional[int]]]:
    foreign = t.foreign_coordinates(k)
    own = t.own(k)
    allow_a = prefer is not Prefer.FORCE_2B
    allow_b = prefer is not Prefer.FORCE_2A
    if allow_a and not foreign:
        return Method.COR5, None
    if allow_b and own.is_constant() and len(foreign) == 1:
        return Method.COR6, foreign[0]
    if allow_a and t.foreign(k).laplacian([j for j in range(t.n) if j != k]).is_zero():
        return Method.COR7, None
    if allow_b and own.is_linear() and len(foreign) == 1:
        return Method.COR8, foreign[0]
    return None


def decompose_term(
    t: SeparableTerm,
    k: int,
    lambda_max: int = DEFAULT_LAMBDA_MAX,
    prefer: Prefer | str = Prefer.AUTO,
) -> tuple[PotentialMatrix, TermReport]:
    """Potential matrix of the field whose only non-zero component ``k`` is ``t``."""
    prefer = _prefer(prefer)
    fast = _fast_path(t, k, prefer)
    if fast is not None:
        method, m = fast
        if method in _FAMILY_2A:
            F = potential_from_2a(t, k, 1, 0)
        else:
            F = potential_from_2b(t, k, 1, 0, m)
        return F, TermReport(k, t, method, 1, Fraction(0), m)

    a = _search_2a(t, k, lambda_max) if prefer is not Prefer.FORCE_2B else None
    b = None
    if prefer is not Prefer.FORCE_2A:
        # ties go to 2a, so 2b only has to beat a successful 2a search
        b_max = a.lam - 1 if a is not None and a.lam is not None else lambda_max
        b = _search_2b(t, k, b_max) if b_max >= 1 else _Search()
    use_a = a is not None and a.lam is not None
    use_b = b is not None and b.lam is not None
    if use_a and use_b and b.lam < a.lam:
        use_a = False
    if use_a:
        return potential_from_2a(t, k, a.lam, a.c_value), TermReport(k, t, Method.COND2A, a.lam, a.c_value)
    if use_b:
        return (
            potential_from_2b(t, k, b.lam, b.c_value, b.foreign),
            TermReport(k, t, Method.COND2B, b.lam, b.c_value, b.foreign),
        )
    reasons = {s.reason for s in (a, b) if s is not None}
    if Reason.RESONANCE in reasons:
        reason = Reason.RESONANCE
    elif Reason.LAMBDA_EXCEEDED in reasons:
        reason = Reason.LAMBDA_EXCEEDED
    else:
        reason = Reason.INAPPLICABLE_2B
    raise NoDecomposition(k, t, reason, f"lambda_max = {lambda_max}")


def _prefer(prefer: Prefer | str) -> Prefer:
    aliases = {"2a": Prefer.FORCE_2A, "2b": Prefer.FORCE_2B}
    if isinstance(prefer, str) and prefer in aliases:
        return aliases[prefer]
    return Prefer(prefer)


def decompose(
    f: VectorField,
    lambda_max: int = DEFAULT_LAMBDA_MAX,
    prefer: Prefer | str = Prefer.AUTO,
) -> Decomposition:
    """Helmholtz decomposition of a separable field, one monomial at a time.

    Raises :class:`NoDecomposition` naming the first monomial (component
    order, then canonical term order) for which no condition holds.
    """
    prefer = _prefer(prefer)
    n = f.n
    F = PotentialMatrix.zero(n)
    reports = []
    for k, comp in enumerate(f):
        for t in comp.terms():
            Fk, rep = decompose_term(t, k, lambda_max, prefer)
            F = F + Fk
            reports.append(rep)
    return from_potential(f, F, reports)


def linear_field_decompose(M: Sequence[Sequence[Number]]) -> Decomposition:
    """Decomposition of ``f(x) = M x``: ``g`` is the diagonal part, ``r`` the rest.

    ``F[i,i] = M[i,i] x_i^2 / 2`` and ``F[i,j] = M[i,j] x_j^2 / 2`` for ``i != j``.
    """
    n = len(M)
    M = [[as_scalar(v) for v in row] for row in M]
    if any(len(row) != n for row in M):
        raise ValueError("M must be square")
    half = Fraction(1, 2)
    comps = []
    entries = []
    reports = []
    for i in range(n):
        comp = ExprSum.zero(n)
        row = []
        for j in range(n):
            comp = comp + ExprSum.coordinate(n, j).scale(M[i][j])
            row.append(ExprSum.coordinate(n, j, 2).scale(half * M[i][j]))
            if M[i][j]:
                term = SeparableTerm.single(n, UniExpr.monomial(j, 1), M[i][j])
                method = Method.COR5 if i == j else Method.COR6
                reports.append(TermReport(i, term, method, 1, Fraction(0), None if i == j else j))
        comps.append(comp)
        entries.append(tuple(row))
    return from_potential(VectorField(tuple(comps)), PotentialMatrix(tuple(entries)), reports)


def apply_gauge(d: Decomposition, H: ExprSum) -> Decomposition:
    """Shift the gradient potential by a harmonic ``H``: ``G+H``, ``g+grad H``, ``r-grad H``.

    ``F`` and ``R`` are left untouched; the shift is recorded in ``gauge`` so
    that ``G == trace(F) + gauge`` and ``r == div R - grad(gauge)``.
    """
    if H.n != d.n:
        raise ValueError("gauge function has the wrong dimension")
    if not H.laplacian().is_zero():
        raise HarmonicCheckFailed(f"Laplacian of {H} is {H.laplacian()}, not 0")
    grad_h = VectorField(tuple(H.gradient()))
    total = H if d.gauge is None else d.gauge + H
    return Decomposition(
        d.field, d.F, d.G + H, d.R, VectorField(tuple((d.G + H).gradient())), d.r - grad_h, d.reports, total
    )
