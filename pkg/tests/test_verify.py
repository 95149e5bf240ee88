import math

import numpy as np
import pytest

from helmholtz.decomp import NoDecomposition, PotentialMatrix, decompose
from helmholtz.expr import ExprSum
from helmholtz.grammar import parse_field
from helmholtz.numeric import FieldSampler, fd_curl_pairs, fd_divergence, fd_gradient
from helmholtz.verify import (
    builtin_fixtures,
    check_invariants,
    fixture_from_text,
    oracle_agreement,
    oracle_from_F,
    random_decomposable_fields,
    run_fixture,
    run_property_suite,
    suite_seed,
)

FIXTURES = [fx.name for fx in builtin_fixtures()]


def test_fixture_inventory():
    assert {"zero", "lorenz", "roessler", "resonant", "exp_product_2a", "exp_product_2b"} <= set(FIXTURES)
    with pytest.raises(KeyError):
        builtin_fixtures(["no_such_fixture"])


@pytest.mark.parametrize("name", FIXTURES)
def test_builtin_fixture_passes(name):
    (fx,) = builtin_fixtures([name])
    report = run_fixture(fx)
    assert report.passed, str(report)
    assert str(report).startswith(f"PASS {name}")


def test_mismatch_report_lists_the_difference():
    fx = fixture_from_text("wrong", "f1 = x2; f2 = 0\nexpect.G = 0\nexpect.r[1] = 2*x2\n")
    report = run_fixture(fx)
    assert not report.passed
    text = str(report)
    assert text.startswith("FAIL wrong")
    assert "r[1]: expected 2*x2, got x2" in text


def test_unexpected_failure_is_reported():
    fx = fixture_from_text("res", "n = 3\nf1 = cos(x1)*exp(x3)\n")
    assert "decompose failed" in str(run_fixture(fx))
    fx = fixture_from_text("ok", "f1 = x1\noption.expect_failure = ResonanceCEquals1\n")
    assert "but decompose succeeded" in str(run_fixture(fx))


def test_invariants_catch_tampering():
    d = decompose(parse_field("f1 = x2; f2 = -x1"))
    assert check_invariants(d) == []
    bad = d.__class__(d.field, d.F, d.G + ExprSum.constant(2, 1) * ExprSum.coordinate(2, 0), d.R, d.g, d.r, d.reports, d.gauge)
    assert any("trace" in m for m in check_invariants(bad))


# -- finite-difference oracle ---------------------------------------------------------


def test_oracle_exp_product():
    (fx,) = builtin_fixtures(["exp_product_2a"])
    g, r = oracle_from_F(fx.decompose().F, [(0.3, -0.7)])
    assert (g + r)[0] == pytest.approx([math.exp(0.3 - 1.4), 0.0], abs=1e-9)


def test_oracle_zero_matrix():
    g, r = oracle_from_F(PotentialMatrix.zero(3), [(1, 2, 3), (0, 0, 0)])
    assert not g.any() and not r.any()


def test_oracle_matches_symbolic_on_multipolynomial():
    (fx,) = builtin_fixtures(["multipolynomial_2b"])
    d = fx.decompose()
    assert oracle_agreement(d, [(1.0, 1.0)]) < 1e-6
    g, r = oracle_from_F(d.F, [(1.0, 1.0)])
    assert (g + r)[0] == pytest.approx(d.field.evaluate((1.0, 1.0)), rel=1e-8)


def test_oracle_with_gauge():
    from helmholtz.decomp import apply_gauge

    d = apply_gauge(decompose(parse_field("f1 = x2; f2 = x1")), ExprSum.coordinate(2, 0) * ExprSum.coordinate(2, 1))
    assert oracle_agreement(d, [(0.5, -1.0), (2.0, 1.0)]) < 1e-8


def _rel(err, scale):
    return abs(err) / max(1.0, abs(scale))


@pytest.mark.parametrize("name", [n for n in FIXTURES if n != "resonant"])
def test_fd_checks_agree_with_symbolic(name):
    (fx,) = builtin_fixtures([name])
    d = fx.decompose()
    n = d.n
    rng = np.random.default_rng(suite_seed())
    g, r = FieldSampler.from_field(d.g), FieldSampler.from_field(d.r)
    for x in rng.uniform(-2, 2, size=(20, n)):
        x = tuple(x)
        g_x = d.g.evaluate(x)
        scale = max([1.0] + [abs(v) for v in g_x] + [abs(v) for v in d.r.evaluate(x)])
        # symbolic div r and curl g are identically zero
        assert fd_divergence(r, x) / scale < 1e-6
        for _, _, v in fd_curl_pairs(g, x):
            assert abs(v) / scale < 1e-6
        for got, want in zip(fd_gradient(d.G, x), g_x):
            assert _rel(got - want, scale) < 1e-6


# -- random fields ---------------------------------------------------------------------


def test_suite_seed_from_environment(monkeypatch):
    monkeypatch.delenv("HELMHOLTZ_SEED", raising=False)
    assert suite_seed() == 42
    monkeypatch.setenv("HELMHOLTZ_SEED", "7")
    assert suite_seed() == 7


def test_random_fields_are_reproducible():
    a = [str(f) for f, _ in random_decomposable_fields(10, seed=3)]
    b = [str(f) for f, _ in random_decomposable_fields(10, seed=3)]
    c = [str(f) for f, _ in random_decomposable_fields(10, seed=4)]
    assert a == b and a != c


def test_small_property_suite():
    report = run_property_suite(count=20, seed=11, points_per_field=5)
    assert report.fields == 20
    assert report.invariant_failures == []
    assert report.worst_oracle_error < 1e-6
