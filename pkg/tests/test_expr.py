from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helmholtz.expr import (
    COS,
    SIN,
    Atom,
    ExprSum,
    SeparableTerm,
    UniExpr,
    antiderivative,
    derivative,
    evaluate,
    iterate_antiderivative,
    laplacian_foreign,
    make_atom,
    proportionality,
)
from helmholtz.grammar import parse_expr


def uni(text: str) -> UniExpr:
    """Single-coordinate UniExpr from grammar text in x1."""
    e = parse_expr(text, 1)
    out = UniExpr.constant(0, 0)
    for key, c in e.items():
        out = out + UniExpr.atom(0, key[0], c)
    return out


# -- atoms --------------------------------------------------------------


def test_make_atom_folds_negative_frequency_into_sign():
    assert make_atom(0, 0, SIN, -2) == (-1, Atom(0, Fr(0), SIN, Fr(2)))
    assert make_atom(0, 0, COS, -2) == (1, Atom(0, Fr(0), COS, Fr(2)))
    assert make_atom(1, 0, SIN, 0) == (0, None)
    assert make_atom(1, 3, COS, 0) == (1, Atom(1, Fr(3)))


def test_atom_rejects_bad_trig():
    with pytest.raises(ValueError):
        Atom(0, Fr(0), SIN, Fr(-1))
    with pytest.raises(ValueError):
        Atom(-1)


def test_zero_coefficients_are_dropped():
    assert UniExpr.monomial(0, 2, 0).is_zero()
    assert (UniExpr.monomial(0, 2) - UniExpr.monomial(0, 2)).is_zero()


# -- derivative ---------------------------------------------------------


def test_derivative_power_rule():
    assert derivative(uni("x1^2")) == uni("2*x1")


def test_derivative_cosine():
    w = Fr(3, 2)
    assert derivative(UniExpr.cos(0, w)) == UniExpr.sin(0, w, -w)


def test_derivative_x_exp():
    e = uni("x1*exp(2*x1)")
    d = derivative(e)
    assert d == uni("exp(2*x1) + 2*x1*exp(2*x1)")
    h = 1e-5
    for x in (-1.0, 0.3, 2.0):
        fd = (e.evaluate(x + h) - e.evaluate(x - h)) / (2 * h)
        assert abs(fd - d.evaluate(x)) < 1e-8 * max(1.0, abs(fd))


# -- antiderivative -----------------------------------------------------


def test_antiderivative_power():
    assert antiderivative(uni("x1^3")) == uni("x1^4/4")


def test_antiderivative_exponential():
    p = Fr(-5, 3)
    assert antiderivative(UniExpr.exp(0, p)) == UniExpr.exp(0, p, 1 / p)


def test_second_antiderivative_of_cosine_stays_in_family():
    w = Fr(2)
    assert iterate_antiderivative(UniExpr.cos(0, w), 2) == UniExpr.cos(0, w, -1 / w**2)


def test_antiderivative_x_exp():
    p = Fr(3)
    assert antiderivative(uni("x1*exp(3*x1)")) == uni("(x1/3 - 1/9)*exp(3*x1)")
    assert antiderivative(UniExpr.exp(0, p)) == UniExpr.exp(0, p, Fr(1, 3))


def test_antiderivative_exp_sin():
    # int e^x sin x = e^x (sin x - cos x) / 2
    assert antiderivative(uni("exp(x1)*sin(x1)")) == uni("exp(x1)*(sin(x1) - cos(x1))/2")


def test_antiderivative_trig_product_is_linearized():
    # sin(x) cos(x) = sin(2x)/2, whose antiderivative is -cos(2x)/4
    assert antiderivative(uni("sin(x1)*cos(x1)")) == uni("-cos(2*x1)/4")


def test_antiderivative_of_zero_and_one():
    assert antiderivative(UniExpr.constant(0, 0)).is_zero()
    assert iterate_antiderivative(UniExpr.constant(0, 1), 1) == UniExpr.monomial(0, 1)


def test_iterated_antiderivative_of_power():
    # A^3 x^2 = x^5 2!/5!
    assert iterate_antiderivative(UniExpr.monomial(0, 2), 3) == UniExpr.monomial(0, 5, Fr(2, 120))


def test_iterated_antiderivative_of_exponential():
    p = Fr(7, 2)
    assert iterate_antiderivative(UniExpr.exp(0, p), 2) == UniExpr.exp(0, p, 1 / p**2)


def test_iterate_antiderivative_needs_positive_order():
    with pytest.raises(ValueError):
        iterate_antiderivative(UniExpr.monomial(0, 1), 0)


# -- multivariate ---------------------------------------------------------


def test_laplacian_foreign_of_multipolynomial():
    t = SeparableTerm.from_atoms(1, (Atom(2), Atom(2), Atom(2)))
    assert laplacian_foreign(t, 0) == parse_expr("2*x1^2*x2^2 + 2*x1^2*x3^2", 3)
    assert laplacian_foreign(t, 0, 2) == parse_expr("8*x1^2", 3)
    assert laplacian_foreign(t, 0, 3).is_zero()


def test_laplacian_foreign_of_exponential():
    q = Fr(-3, 4)
    t = SeparableTerm.from_atoms(1, (Atom(), Atom(0, q)))
    assert laplacian_foreign(t, 0) == ExprSum.from_atoms(2, {1: Atom(0, q)}, q**2)


def test_proportionality():
    b = parse_expr("exp(x1)*exp(2*x2)", 2)
    assert proportionality(b.scale(Fr(-4)), b) == -4
    assert proportionality(ExprSum.zero(2), parse_expr("x1^2*x2", 2)) == 0
    assert proportionality(parse_expr("x1^2", 2), parse_expr("x1", 2)) is None
    assert proportionality(ExprSum.zero(2), ExprSum.zero(2)) == 0
    assert proportionality(parse_expr("x1", 2), ExprSum.zero(2)) is None
    assert proportionality(parse_expr("x1 + x2", 2), parse_expr("x1 + 2*x2", 2)) is None


def test_evaluate():
    assert evaluate(parse_expr("exp(x1) + exp(x2)", 2), (0, 0)) == pytest.approx(2)
    assert evaluate(parse_expr("x1^2*x2", 2), (2, 3)) == pytest.approx(12)
    assert evaluate(parse_expr("1/2*exp(x1)*exp(x2)", 2), (0, 0)) == pytest.approx(0.5)


def test_evaluate_many_matches_pointwise():
    e = parse_expr("x1^2*exp(-x2)*sin(3/2*x2) - 2/3*cos(x1)", 2)
    pts = np.array([[0.1, -0.4], [1.5, 2.0], [-2.0, 0.0]])
    many = e.evaluate_many(pts)
    assert many == pytest.approx([e.evaluate(p) for p in pts], rel=1e-14)


def test_str_round_trip():
    e = parse_expr("-1/5*x1^2*exp(2*x1)*sin(x1/2) + 3*x2 - 7", 2)
    assert parse_expr(str(e), 2) == e


def test_gradient_and_partial():
    e = parse_expr("x1^2*x2 + sin(x2)", 2)
    assert e.gradient() == [parse_expr("2*x1*x2", 2), parse_expr("x1^2 + cos(x2)", 2)]
    assert e.partial(1, 2) == parse_expr("-sin(x2)", 2)


def test_antiderivative_in_one_coordinate_of_sum():
    e = parse_expr("x1*x2 + exp(x2)", 2)
    assert e.antiderivative(1).partial(1) == e


# -- properties -------------------------------------------------------------

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)
nonzero = rationals.filter(lambda v: v != 0)


@st.composite
def atoms(draw):
    degree = draw(st.integers(0, 5))
    rate = draw(st.one_of(st.just(Fr(0)), rationals))
    trig = draw(st.sampled_from([None, SIN, COS]))
    freq = draw(nonzero) if trig else 0
    _, atom = make_atom(degree, rate, trig, freq)
    return atom


@st.composite
def uniexprs(draw, max_terms=4):
    e = UniExpr.constant(0, 0)
    for _ in range(draw(st.integers(0, max_terms))):
        e = e + UniExpr.atom(0, draw(atoms()), draw(nonzero))
    return e


def _in_class(e: UniExpr) -> bool:
    return all(
        isinstance(a, Atom) and a.degree >= 0 and (a.trig is None or a.freq > 0) and c != 0
        for a, c in e.items()
    )


@settings(max_examples=500)
@given(uniexprs())
def test_derivative_inverts_antiderivative(e):
    assert derivative(antiderivative(e)) == e


@settings(max_examples=500)
@given(uniexprs())
def test_operations_stay_in_class(e):
    assert _in_class(derivative(e))
    assert _in_class(antiderivative(e))


@settings(max_examples=500)
@given(st.lists(atoms(), min_size=2, max_size=2), nonzero)
def test_laplacian_foreign_stays_in_class(row_a, c):
    t = SeparableTerm.from_atoms(c, (Atom(1), *row_a))
    lap = laplacian_foreign(t, 0)
    for key, coeff in lap.items():
        assert coeff != 0 and len(key) == 3
        assert key[0] == Atom(1)  # own factor untouched
        assert all(a.trig is None or a.freq > 0 for a in key)


@given(uniexprs(), uniexprs())
def test_canonical_form_is_idempotent(a, b):
    s = a + b
    assert UniExpr(0, dict(s.items())) == s
    e = ExprSum.from_uni(1, s)
    assert ExprSum(1, dict(e.items())) == e
    assert parse_expr(str(e), 1) == e


@given(uniexprs(), uniexprs(), st.floats(-2, 2))
def test_product_is_pointwise(a, b, x):
    got = (a * b).evaluate(x)
    want = a.evaluate(x) * b.evaluate(x)
    assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


@settings(max_examples=300)
@given(uniexprs(max_terms=3), st.floats(-2, 2))
def test_derivative_matches_central_difference(e, x):
    h = 1e-5
    samples = [e.evaluate(x + k * h) for k in (-2, -1, 1, 2)]
    fd = (samples[0] - 8 * samples[1] + 8 * samples[2] - samples[3]) / (12 * h)
    exact = derivative(e).evaluate(x)
    # below the rounding floor eps*|f|/h no difference quotient can resolve anything
    floor = 10 * np.finfo(float).eps * max(abs(v) for v in samples) / h
    assert abs(fd - exact) <= max(1e-6 * abs(exact), 1e-9, floor)
