"""Verification harness: golden fixtures, symbolic invariants, an FD oracle and random fields."""

from __future__ import annotations

import os
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .decomp import (
    DEFAULT_LAMBDA_MAX,
    Decomposition,
    NoDecomposition,
    PotentialMatrix,
    Reason,
    VectorField,
    decompose,
)
from .expr import COS, SIN, Atom, ExprSum, make_atom
from .grammar import Expectation, FieldSpecDocument, parse_document

DEFAULT_SEED = 42
SEED_ENV = "HELMHOLTZ_SEED"
FIXTURE_SUFFIX = ".field"


def suite_seed() -> int:
    """The property-suite seed: ``HELMHOLTZ_SEED`` if set, else 42."""
    value = os.environ.get(SEED_ENV)
    return int(value) if value else DEFAULT_SEED


# ---------------------------------------------------------------------------
# fixtures


@dataclass
class Fixture:
    name: str
    document: FieldSpecDocument

    @property
    def input(self) -> VectorField:
        return self.document.field

    @property
    def expected(self) -> dict[Expectation, ExprSum]:
        return self.document.expectations

    @property
    def method(self) -> str:
        return self.document.options.get("method", "auto")

    @property
    def lambda_max(self) -> int:
        return int(self.document.options.get("lambda_max", DEFAULT_LAMBDA_MAX))

    @property
    def expect_failure(self) -> Optional[str]:
        """Reason name when the fixture asserts that decomposition fails."""
        return self.document.options.get("expect_failure")

    def decompose(self) -> Decomposition:
        return decompose(self.input, self.lambda_max, self.method)


@dataclass
class FixtureReport:
    name: str
    mismatches: list[str] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def __str__(self) -> str:
        head = f"{'PASS' if self.passed else 'FAIL'} {self.name} ({self.elapsed * 1000:.1f} ms)"
        return "\n".join([head] + ["  " + m for m in self.mismatches])


def load_fixture(path: str | Path) -> Fixture:
    path = Path(path)
    return Fixture(path.stem, parse_document(path.read_text(encoding="utf-8")))


def fixture_from_text(name: str, text: str) -> Fixture:
    return Fixture(name, parse_document(text))


def builtin_fixtures(names: Optional[Iterable[str]] = None) -> list[Fixture]:
    """Fixtures shipped with the package, sorted by name."""
    root = resources.files("helmholtz") / "fixtures"
    found = {
        p.name[: -len(FIXTURE_SUFFIX)]: p for p in root.iterdir() if p.name.endswith(FIXTURE_SUFFIX)
    }
    wanted = sorted(found) if names is None else list(names)
    missing = [n for n in wanted if n not in found]
    if missing:
        raise KeyError(f"unknown fixture(s): {', '.join(missing)}")
    return [Fixture(n, parse_document(found[n].read_text(encoding="utf-8"))) for n in sorted(wanted)]


def _expected_parts(fx: Fixture) -> dict[Expectation, ExprSum]:
    """Expected entries, with unspecified entries of partially given parts set to zero."""
    n = fx.document.n
    zero = ExprSum.zero(n)
    given = fx.expected
    kinds = {key[0] for key in given}
    out = dict(given)
    for kind in kinds:
        if kind in ("F", "R"):
            keys = [(kind, i, j) for i in range(n) for j in range(n)]
        elif kind in ("g", "r"):
            keys = [(kind, i) for i in range(n)]
        else:
            keys = [("G",)]
        for key in keys:
            out.setdefault(key, zero)
    return out


def _actual(d: Decomposition, key: Expectation) -> ExprSum:
    kind = key[0]
    if kind == "G":
        return d.G
    if kind == "F":
        return d.F[key[1], key[2]]
    if kind == "R":
        return d.R[key[1]][key[2]]
    return (d.g if kind == "g" else d.r)[key[1]]


def _label(key: Expectation) -> str:
    if len(key) == 1:
        return key[0]
    return key[0] + "".join(f"[{i + 1}]" for i in key[1:])


def run_fixture(fx: Fixture) -> FixtureReport:
    """Decompose the fixture input and compare every expected part exactly."""
    report = FixtureReport(fx.name)
    start = time.perf_counter()
    try:
        d = fx.decompose()
    except NoDecomposition as exc:
        if exc.reason.value != fx.expect_failure:
            report.mismatches.append(f"decompose failed: {exc}")
        report.elapsed = time.perf_counter() - start
        return report
    if fx.expect_failure is not None:
        report.mismatches.append(f"expected NoDecomposition({fx.expect_failure}), but decompose succeeded")
    for key, want in sorted(_expected_parts(fx).items(), key=lambda kv: kv[0]):
        got = _actual(d, key)
        if got != want:
            report.mismatches.append(
                f"{_label(key)}: expected {want}, got {got} (expected - got = {want - got})"
            )
    report.mismatches.extend(check_invariants(d))
    report.elapsed = time.perf_counter() - start
    return report


def run_fixtures(names: Optional[Iterable[str]] = None) -> list[FixtureReport]:
    return [run_fixture(fx) for fx in builtin_fixtures(names)]


# ---------------------------------------------------------------------------
# invariants


def check_invariants(d: Decomposition) -> list[str]:
    """Symbolic consistency checks of a decomposition; returns the violations."""
    n = d.n
    bad = []
    R, F = d.R, d.F
    gauge = d.gauge if d.gauge is not None else ExprSum.zero(n)
    for i in range(n):
        for j in range(n):
            if R[i][j] != -R[j][i]:
                bad.append(f"R not antisymmetric at [{i + 1}][{j + 1}]")
            if R[i][j] != F[i, j] - F[j, i]:
                bad.append(f"R[{i + 1}][{j + 1}] != F - F^T")
    if d.G != F.trace() + gauge:
        bad.append("G != trace F (+ gauge)")
    for i in range(n):
        if d.g[i] != d.G.partial(i):
            bad.append(f"g[{i + 1}] != dG/dx{i + 1}")
        div_R = sum((R[i][k].partial(k) for k in range(n)), ExprSum.zero(n))
        if d.r[i] != div_R - gauge.partial(i):
            bad.append(f"r[{i + 1}] != sum_k d_k R[{i + 1}][k] (- gauge)")
        if d.g[i] + d.r[i] != d.field[i]:
            bad.append(f"g + r != f in component {i + 1}")
        for j in range(i + 1, n):
            if d.g[j].partial(i) != d.g[i].partial(j):
                bad.append(f"curl g != 0 in pair ({i + 1}, {j + 1})")
    if not d.r.divergence().is_zero():
        bad.append("div r != 0")
    return bad


# ---------------------------------------------------------------------------
# finite-difference oracle

_FD4 = ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12))


def oracle_from_F(F: PotentialMatrix, points: Sequence[Sequence[float]], h: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """``(g, r)`` at ``points`` from numeric derivatives of the sampled entries of ``F``.

    Only pointwise values of ``F`` are used: ``G`` and ``R`` are formed from
    the sampled entries and differentiated with a fourth-order central
    stencil, so no symbolic derivative is involved.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = F.n
    m = len(pts)
    # dF[d][:, i, j] = d F_ij / d x_d
    dF = np.zeros((n, m, n, n))
    for d in range(n):
        for s, w in _FD4:
            shifted = pts.copy()
            shifted[:, d] += s * h
            for i in range(n):
                for j in range(n):
                    e = F[i, j]
                    if not e.is_zero():
                        dF[d][:, i, j] += w * e.evaluate_many(shifted) / h
    g = np.zeros((m, n))
    r = np.zeros((m, n))
    for i in range(n):
        g[:, i] = sum(dF[i][:, k, k] for k in range(n))  # d_i G, G = tr F
        r[:, i] = sum(dF[k][:, i, k] - dF[k][:, k, i] for k in range(n))  # d_k R_ik
    return g, r


def oracle_agreement(d: Decomposition, points: Sequence[Sequence[float]], h: float = 1e-3) -> float:
    """Largest oracle deviation from the symbolic ``g``, ``r``.

    Deviations are scaled by ``max(1, max |g_i|, |r_i|)`` at each point.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g_fd, r_fd = oracle_from_F(d.F, pts, h)
    if d.gauge is not None:
        grad_h = np.stack([c.evaluate_many(pts) for c in d.gauge.gradient()], axis=-1)
        g_fd, r_fd = g_fd + grad_h, r_fd - grad_h
    g_sym = np.stack([c.evaluate_many(pts) for c in d.g], axis=-1)
    r_sym = np.stack([c.evaluate_many(pts) for c in d.r], axis=-1)
    scale = np.maximum(1.0, np.maximum(np.abs(g_sym).max(axis=1), np.abs(r_sym).max(axis=1)))
    err = np.maximum(np.abs(g_fd - g_sym).max(axis=1), np.abs(r_fd - r_sym).max(axis=1))
    return float((err / scale).max())


# ---------------------------------------------------------------------------
# random separable fields

_RATES = [Fraction(k, 2) for k in (-3, -2, -1, 1, 2, 3)]
_FREQS = [Fraction(k, 2) for k in (1, 2, 3, 4)]


def _rational(rng: random.Random, num: int = 5, den: int = 4) -> Fraction:
    while True:
        c = Fraction(rng.randint(-num, num), rng.randint(1, den))
        if c:
            return c


def random_atom(rng: random.Random, max_degree: int = 3) -> Atom:
    """Random element of the atom class with small rational rate and frequency."""
    degree = rng.randint(0, max_degree)
    rate = rng.choice(_RATES) if rng.random() < 0.5 else Fraction(0)
    trig = rng.choice([None, None, SIN, COS])
    freq = rng.choice(_FREQS) if trig else 0
    return make_atom(degree, rate, trig, freq)[1]


def _poly_atom(rng: random.Random, max_degree: int) -> Atom:
    return Atom(rng.randint(0, max_degree))


def _pure_atom(rng: random.Random) -> Atom:
    """``exp(px)``, ``sin(wx)`` or ``cos(wx)``: eigenfunctions of the second derivative."""
    kind = rng.choice(["exp", SIN, COS])
    if kind == "exp":
        return Atom(0, rng.choice(_RATES))
    return Atom(0, Fraction(0), kind, rng.choice(_FREQS))


def random_term(rng: random.Random, n: int, k: int) -> ExprSum:
    """A monomial for component ``k`` of a shape the decomposer can handle.

    Shapes: any own atom times a foreign polynomial (2a terminates), a
    polynomial own factor times one foreign atom (2b terminates), or pure
    exponential/trigonometric factors throughout (eigenfunction case).
    """
    foreign = [j for j in range(n) if j != k]
    atoms: dict[int, Atom] = {}
    shape = rng.randrange(3)
    if shape == 0:
        atoms[k] = random_atom(rng)
        for j in rng.sample(foreign, rng.randint(0, len(foreign))):
            atoms[j] = _poly_atom(rng, 3)
    elif shape == 1:
        atoms[k] = _poly_atom(rng, 4)
        atoms[rng.choice(foreign)] = random_atom(rng)
    else:
        atoms[k] = _pure_atom(rng)
        for j in rng.sample(foreign, rng.randint(1, min(2, len(foreign)))):
            atoms[j] = _pure_atom(rng)
    return ExprSum.from_atoms(n, atoms, _rational(rng))


def random_field(rng: random.Random, n: int, max_terms: int = 5) -> VectorField:
    comps = []
    for k in range(n):
        e = ExprSum.zero(n)
        for _ in range(rng.randint(0, max_terms)):
            e = e + random_term(rng, n, k)
        comps.append(e)
    return VectorField(tuple(comps))


def random_decomposable_fields(count: int, seed: Optional[int] = None, max_terms: int = 5):
    """Yield ``(field, decomposition)`` pairs, skipping resonant draws (C = 1)."""
    rng = random.Random(suite_seed() if seed is None else seed)
    produced = 0
    while produced < count:
        f = random_field(rng, rng.choice((2, 3, 4)), max_terms)
        try:
            d = decompose(f)
        except NoDecomposition as exc:
            if exc.reason is Reason.RESONANCE:
                continue
            raise
        produced += 1
        yield f, d


def random_points(rng: np.random.Generator, n: int, count: int, box: float = 2.0) -> np.ndarray:
    return rng.uniform(-box, box, size=(count, n))


@dataclass
class PropertyReport:
    fields: int = 0
    invariant_failures: list[str] = field(default_factory=list)
    worst_oracle_error: float = 0.0
    elapsed: float = 0.0


def run_property_suite(count: int = 200, seed: Optional[int] = None, points_per_field: int = 10) -> PropertyReport:
    """Decompose random fields; check invariants and oracle agreement."""
    seed = suite_seed() if seed is None else seed
    report = PropertyReport()
    start = time.perf_counter()
    prng = np.random.default_rng(seed)
    for idx, (f, d) in enumerate(random_decomposable_fields(count, seed)):
        report.fields += 1
        report.invariant_failures.extend(f"field {idx}: {msg}" for msg in check_invariants(d))
        pts = random_points(prng, f.n, points_per_field)
        report.worst_oracle_error = max(report.worst_oracle_error, oracle_agreement(d, pts))
    report.elapsed = time.perf_counter() - start
    return report
