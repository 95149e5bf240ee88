"""Exact Helmholtz decomposition of separable vector fields.

A field ``f`` is split into a curl-free part ``g = grad G`` and a
divergence-free part ``r`` through a potential matrix ``F``; for fields whose
components are sums of products of one-variable atoms
``x^n exp(p x) {1, sin(w x), cos(w x)}`` everything is computed exactly over
the rationals.  Decaying fields in two or three dimensions can also be
decomposed numerically by convolution.
"""

from .decomp import (
    DEFAULT_LAMBDA_MAX,
    Decomposition,
    HarmonicCheckFailed,
    Method,
    NoDecomposition,
    PotentialMatrix,
    Prefer,
    Reason,
    TermReport,
    VectorField,
    apply_gauge,
    decompose,
    decompose_term,
    extract,
    find_condition_2a,
    find_condition_2b,
    from_potential,
    linear_field_decompose,
    potential_from_2a,
    potential_from_2b,
)
from .emit import emit, from_structured, to_json, to_latex, to_structured, to_text
from .expr import (
    COS,
    SIN,
    Atom,
    ExprSum,
    SeparableTerm,
    UniExpr,
    antiderivative,
    derivative,
    iterate_antiderivative,
    laplacian_foreign,
    proportionality,
)
from .grammar import (
    FieldSpecDocument,
    FieldSpecError,
    NonSeparableExpression,
    ParseError,
    UnboundParameter,
    parse_document,
    parse_expr,
    parse_field,
)
from .numeric import (
    FieldSampler,
    QuadratureSpec,
    SingularEvalPoint,
    SingularPoint,
    fd_curl_pairs,
    fd_divergence,
    fd_gradient,
    fd_jacobian,
    kernel_K,
    theorem2_decompose,
)
from .verify import Fixture, check_invariants, oracle_from_F, run_fixture

__all__ = [name for name in dir() if not name.startswith("_")]
