"""Numeric services: convolution decomposition of decaying fields and FD operators.

For a field decaying at infinity the potential matrix is the convolution of
the Jacobian with a regularized fundamental solution of Laplace's equation,

    F_ij(x) = int J_ij(xi) K(x, xi) dxi,
    K(x, xi) = (log|x - xi| - log|xi|) / (2 pi)                     n = 2
             = (|x - xi|^(2-n) - |xi|^(2-n)) / (n (2 - n) V_n)       n > 2

The integral is truncated to a box and evaluated with the midpoint rule.  The
two kernel terms are integrated separately, each on a lattice with the pole
at a cell centre; that cell gets the Jacobian at its centre times the exact
cell integral of the singular kernel.  The ``|xi|`` term is independent of
``x`` and only shifts ``F``.  ``g`` and ``r`` follow from fourth-order central
differences of the sampled ``F`` along the lattice through ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .decomp import VectorField
from .expr import ExprSum

DEFAULT_FD_STEP = 1e-4
_SINGULAR_EPS = 1e-12
_CHUNK = 400_000

VectorizedFn = Callable[[np.ndarray], np.ndarray]


class SingularPoint(ValueError):
    pass


class SingularEvalPoint(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    truncation_radius: float
    grid_step: float
    dimension: int = 2

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError("quadrature is implemented for n in {2, 3}")
        if self.truncation_radius <= 0 or self.grid_step <= 0:
            raise ValueError("radius and step must be positive")
        if self.truncation_radius / self.grid_step > 1e4:
            raise ValueError("truncation_radius / grid_step exceeds 1e4 per axis")


class FieldSampler:
    """``n`` component evaluators, each mapping an ``(N, n)`` array to ``(N,)``."""

    def __init__(self, n: int, evaluators: Sequence[VectorizedFn]):
        if len(evaluators) != n:
            raise ValueError("need one evaluator per component")
        self.n = n
        self.evaluators = tuple(evaluators)

    @classmethod
    def from_field(cls, f: VectorField) -> "FieldSampler":
        return cls(f.n, [c.evaluate_many for c in f])

    @classmethod
    def from_pointwise(cls, n: int, funcs: Sequence[Callable[[np.ndarray], float]]) -> "FieldSampler":
        """Wrap plain ``point -> float`` callables."""

        def lift(fn):
            return lambda pts: np.array([fn(p) for p in np.asarray(pts, dtype=float)], dtype=float)

        return cls(n, [lift(fn) for fn in funcs])

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.stack([np.asarray(ev(pts), dtype=float) for ev in self.evaluators], axis=-1)


def _scalar_fn(s) -> VectorizedFn:
    if isinstance(s, ExprSum):
        return s.evaluate_many
    return s


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _kernel(dist: np.ndarray, xi_norm: np.ndarray, n: int) -> np.ndarray:
    if n == 2:
        return (np.log(dist) - np.log(xi_norm)) / (2 * math.pi)
    return (dist ** (2 - n) - xi_norm ** (2 - n)) / (n * (2 - n) * unit_ball_volume(n))


def kernel_K(x: Sequence[float], xi: Sequence[float], n: int | None = None) -> float:
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    n = len(x) if n is None else n
    if n < 2:
        raise ValueError("kernel needs n >= 2")
    dist = float(np.linalg.norm(x - xi))
    xi_norm = float(np.linalg.norm(xi))
    if dist < _SINGULAR_EPS or xi_norm < _SINGULAR_EPS:
        raise SingularPoint(f"kernel is singular at x={x.tolist()}, xi={xi.tolist()}")
    return float(_kernel(np.array(dist), np.array(xi_norm), n))


# ---------------------------------------------------------------------------
# convolution decomposition


@dataclass(frozen=True)
class Theorem2Result:
    points: np.ndarray  # (N, n)
    F: np.ndarray  # (N, n, n)
    g: np.ndarray  # (N, n)
    r: np.ndarray  # (N, n)


def _lattice_axes(x: np.ndarray, radius: float, step: float) -> list[np.ndarray]:
    axes = []
    for xd in x:
        lo = math.ceil((-radius - xd) / step - 1e-9)
        hi = math.floor((radius - xd) / step + 1e-9)
        axes.append(xd + step * np.arange(lo, hi + 1))
    return axes


def _iter_cells(axes: list[np.ndarray]):
    """Yield ``(N, n)`` chunks of lattice cell centres in a fixed order."""
    first, rest = axes[0], axes[1:]
    rest_grid = np.stack(np.meshgrid(*rest, indexing="ij"), axis=-1).reshape(-1, len(rest))
    per_row = len(rest_grid)
    rows = max(1, _CHUNK // per_row)
    for start in range(0, len(first), rows):
        block = first[start:start + rows]
        lead = np.repeat(block, per_row)[:, None]
        yield np.hstack([lead, np.tile(rest_grid, (len(block), 1))])


def _jacobian(f: FieldSampler, cells: np.ndarray, h: float) -> np.ndarray:
    n = f.n
    jac = np.empty((len(cells), n, n))
    for j in range(n):
        shift = np.zeros(n)
        shift[j] = h
        jac[:, :, j] = (f(cells + shift) - f(cells - shift)) / (2 * h)
    return jac


_FD4 = ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12))

# int_{[-1/2, 1/2]^n} of log|s| (n = 2) and of 1/|s| (n = 3)
_UNIT_CELL_LOG = -math.log(2) / 2 - 1.5 + math.pi / 4
_UNIT_CELL_INV = 3 * math.log(2 + math.sqrt(3)) - math.pi / 2


def _fundamental(dist: np.ndarray, n: int) -> np.ndarray:
    if n == 2:
        return np.log(dist) / (2 * math.pi)
    return dist ** (2 - n) / (n * (2 - n) * unit_ball_volume(n))


def _singular_cell(h: float, n: int) -> float:
    """Exact integral of the fundamental solution over the cell centred on its pole."""
    if n == 2:
        return h * h * (math.log(h) + _UNIT_CELL_LOG) / (2 * math.pi)
    return -h * h * _UNIT_CELL_INV / (4 * math.pi)


def _convolve(f: FieldSampler, anchor: np.ndarray, targets: np.ndarray, spec: QuadratureSpec) -> np.ndarray:
    """``sum_cells J(c) Phi(|y - c|) h^n`` for every target ``y`` on the lattice through ``anchor``.

    The cell whose centre coincides with ``y`` contributes ``J(y)`` times the
    exact cell integral of ``Phi`` instead of its (infinite) midpoint value.
    """
    n, h = spec.dimension, spec.grid_step
    singular = _singular_cell(h, n)
    acc = np.zeros((len(targets), n, n))
    for cells in _iter_cells(_lattice_axes(anchor, spec.truncation_radius, h)):
        jac = _jacobian(f, cells, h / 4)
        for t, y in enumerate(targets):
            dist = np.linalg.norm(cells - y, axis=1)
            pole = dist < h * 1e-6
            weights = np.zeros(len(cells))
            weights[~pole] = _fundamental(dist[~pole], n) * h**n
            weights[pole] = singular
            acc[t] += np.einsum("c,cij->ij", weights, jac)
    return acc


def theorem2_decompose(f: FieldSampler, eval_points, spec: QuadratureSpec) -> Theorem2Result:
    """Sample ``F``, ``g`` and ``r`` of a decaying field at ``eval_points``.

    The caller is responsible for ``f`` decaying fast enough that the box
    truncation at ``spec.truncation_radius`` is harmless.
    """
    n = spec.dimension
    if f.n != n:
        raise ValueError("sampler dimension does not match the quadrature spec")
    pts = np.atleast_2d(np.asarray(eval_points, dtype=float))
    h = spec.grid_step
    origin = np.zeros(n)
    # the log|xi| (resp. |xi|^(2-n)) part of the kernel does not depend on x
    offset = _convolve(f, origin, origin[None, :], spec)[0]
    out_F, out_g, out_r = [], [], []
    for x in pts:
        if np.linalg.norm(x) < h:
            raise SingularEvalPoint(f"evaluation point {x.tolist()} lies within one grid step of the origin")
        if np.max(np.abs(x)) > spec.truncation_radius / 2:
            raise ValueError(f"evaluation point {x.tolist()} is outside truncation_radius / 2")
        stencil = [(0, 0, 1.0)] + [(d, s, w) for d in range(n) for s, w in _FD4]
        targets = np.array([x + s * h * np.eye(n)[d] for d, s, _ in stencil])
        acc = _convolve(f, x, targets, spec)
        dF = np.zeros((n, n, n))  # dF[d] = d F / d x_d
        for t, (d, _, w) in enumerate(stencil[1:], start=1):
            dF[d] += w * acc[t] / h
        out_F.append(acc[0] - offset)
        out_g.append([np.trace(dF[i]) for i in range(n)])
        out_r.append([sum(dF[k][i, k] - dF[k][k, i] for k in range(n)) for i in range(n)])
    return Theorem2Result(pts, np.array(out_F), np.array(out_g), np.array(out_r))


# ---------------------------------------------------------------------------
# finite-difference oracles


def _unit(n: int, d: int, h: float) -> np.ndarray:
    e = np.zeros(n)
    e[d] = h
    return e


def fd_gradient(s, x: Sequence[float], h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar sampler (vectorized callable or ExprSum)."""
    if h <= 0:
        raise ValueError("h must be positive")
    fn = _scalar_fn(s)
    x = np.asarray(x, dtype=float)
    n = len(x)
    plus = np.array([x + _unit(n, d, h) for d in range(n)])
    minus = np.array([x - _unit(n, d, h) for d in range(n)])
    return (np.asarray(fn(plus)) - np.asarray(fn(minus))) / (2 * h)


def fd_jacobian(v: FieldSampler, x: Sequence[float], h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """``J[i, j] = d v_i / d x_j`` by central differences."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    n = len(x)
    plus = np.array([x + _unit(n, d, h) for d in range(n)])
    minus = np.array([x - _unit(n, d, h) for d in range(n)])
    return ((v(plus) - v(minus)) / (2 * h)).T


def fd_divergence(v: FieldSampler, x: Sequence[float], h: float = DEFAULT_FD_STEP) -> float:
    return float(np.trace(fd_jacobian(v, x, h)))


def fd_curl_pairs(v: FieldSampler, x: Sequence[float], h: float = DEFAULT_FD_STEP) -> list[tuple[int, int, float]]:
    """``(i, j, d_i v_j - d_j v_i)`` for every ``i < j``."""
    jac = fd_jacobian(v, x, h)
    n = len(jac)
    return [(i, j, float(jac[j, i] - jac[i, j])) for i in range(n) for j in range(i + 1, n)]
