"""Serializers for decompositions: text, LaTeX, structured JSON and CSV grids."""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Optional

import numpy as np

from .decomp import Decomposition, Method, PotentialMatrix, TermReport, VectorField
from .expr import Atom, ExprSum, SeparableTerm
from .grammar import parse_expr

SCHEMA_VERSION = 1
FORMATS = ("text", "latex", "json", "csv")


def _matrix_text(rows) -> str:
    return "[" + ", ".join("[" + ", ".join(str(e) for e in row) + "]" for row in rows) + "]"


def _report_line(rep: TermReport) -> str:
    line = f"# f{rep.component + 1}: {rep.term} -> {rep.method.value} (lambda={rep.lam}, C={rep.c_value}"
    if rep.foreign is not None:
        line += f", m=x{rep.foreign + 1}"
    return line + ")"


def to_text(d: Decomposition) -> str:
    lines = [
        f"f = {d.field}",
        f"F = {_matrix_text(d.F.entries)}",
        f"G = {d.G}",
        f"R = {_matrix_text(d.R)}",
        f"g = {d.g}",
        f"r = {d.r}",
    ]
    if d.gauge is not None:
        lines.append(f"gauge = {d.gauge}")
    lines.extend(_report_line(rep) for rep in d.reports)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# LaTeX


def _latex_number(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return rf"\frac{{{c.numerator}}}{{{c.denominator}}}"


def _latex_linear(c: Fraction, var: str) -> str:
    if c == 1:
        return var
    if c == -1:
        return "-" + var
    return _latex_number(c) + var


def _latex_atom(a: Atom, var: str) -> list[str]:
    parts = []
    if a.degree == 1:
        parts.append(var)
    elif a.degree > 1:
        parts.append(f"{var}^{{{a.degree}}}")
    if a.rate:
        parts.append(f"e^{{{_latex_linear(a.rate, var)}}}")
    if a.trig:
        parts.append(rf"\{a.trig}({_latex_linear(a.freq, var)})")
    return parts


def latex_expr(e: ExprSum) -> str:
    if e.is_zero():
        return "0"
    out = []
    for i, (key, c) in enumerate(e.items()):
        factors = []
        for j, a in enumerate(key):
            factors.extend(_latex_atom(a, f"x_{{{j + 1}}}"))
        mag = abs(c)
        body = (_latex_number(mag) if mag != 1 or not factors else "") + " ".join(factors)
        if i == 0:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append((" - " if c < 0 else " + ") + body)
    return "".join(out)


def _pmatrix(rows) -> str:
    body = r" \\ ".join(" & ".join(latex_expr(e) for e in row) for row in rows)
    return r"\begin{pmatrix} " + body + r" \end{pmatrix}"


def _column(v: VectorField) -> str:
    return _pmatrix([(c,) for c in v])


def to_latex(d: Decomposition) -> str:
    lines = [
        r"\begin{align*}",
        rf"f &= {_column(d.field)} \\",
        rf"F &= {_pmatrix(d.F.entries)} \\",
        rf"G &= {latex_expr(d.G)} \\",
        rf"R &= {_pmatrix(d.R)} \\",
        rf"g &= {_column(d.g)} \\",
        rf"r &= {_column(d.r)}",
        r"\end{align*}",
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# structured


def to_structured(d: Decomposition) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "n": d.n,
        "f": [str(c) for c in d.field],
        "F": [[str(e) for e in row] for row in d.F.entries],
        "G": str(d.G),
        "R": [[str(e) for e in row] for row in d.R],
        "g": [str(c) for c in d.g],
        "r": [str(c) for c in d.r],
        "gauge": None if d.gauge is None else str(d.gauge),
        "reports": [
            {
                "component": rep.component + 1,
                "term": str(rep.term),
                "method": rep.method.value,
                "lambda": rep.lam,
                "C": str(rep.c_value),
                "m": None if rep.foreign is None else rep.foreign + 1,
            }
            for rep in d.reports
        ],
    }


def to_json(d: Decomposition) -> str:
    return json.dumps(to_structured(d), indent=2) + "\n"


def _term(text: str, n: int) -> SeparableTerm:
    e = parse_expr(text, n)
    terms = list(e.terms())
    if len(terms) != 1:
        raise ValueError(f"report term {text!r} is not a single monomial")
    return terms[0]


def from_structured(data: dict | str) -> Decomposition:
    """Inverse of :func:`to_structured` (accepts the dict or its JSON text)."""
    if isinstance(data, str):
        data = json.loads(data)
    if data.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema {data.get('schema')!r}")
    n = data["n"]

    def ex(s: str) -> ExprSum:
        return parse_expr(s, n)

    F = PotentialMatrix(tuple(tuple(ex(e) for e in row) for row in data["F"]))
    reports = tuple(
        TermReport(
            rep["component"] - 1,
            _term(rep["term"], n),
            Method(rep["method"]),
            rep["lambda"],
            Fraction(rep["C"]),
            None if rep["m"] is None else rep["m"] - 1,
        )
        for rep in data["reports"]
    )
    gauge = None if data["gauge"] is None else ex(data["gauge"])
    return Decomposition(
        VectorField(tuple(ex(c) for c in data["f"])),
        F,
        ex(data["G"]),
        tuple(tuple(ex(e) for e in row) for row in data["R"]),
        VectorField(tuple(ex(c) for c in data["g"])),
        VectorField(tuple(ex(c) for c in data["r"])),
        reports,
        gauge,
    )


# ---------------------------------------------------------------------------
# csv grid


def grid_points(n: int, box: float, step: float) -> np.ndarray:
    """Lattice ``{-box, -box + step, ..., box}^n`` in row-major order."""
    if box < 0 or step <= 0:
        raise ValueError("grid needs box >= 0 and step > 0")
    count = int(np.floor(2 * box / step + 1e-9)) + 1
    axis = -box + step * np.arange(count)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, n)


def to_csv_grid(d: Decomposition, box: float, step: float) -> str:
    n = d.n
    pts = grid_points(n, box, step)
    cols = [pts]
    for v in (d.field, d.g, d.r):
        cols.append(np.stack([c.evaluate_many(pts) for c in v], axis=-1))
    cols.append(d.G.evaluate_many(pts)[:, None])
    table = np.hstack(cols)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        [f"x{i}" for i in range(1, n + 1)]
        + [f"{p}{i}" for p in "fgr" for i in range(1, n + 1)]
        + ["G"]
    )
    for row in table:
        w.writerow([repr(float(v) + 0.0) for v in row])
    return buf.getvalue()


def emit(d: Decomposition, fmt: str = "text", grid: Optional[tuple[float, float]] = None) -> str:
    if fmt == "text":
        return to_text(d)
    if fmt == "latex":
        return to_latex(d)
    if fmt == "json":
        return to_json(d)
    if fmt == "csv":
        if grid is None:
            raise ValueError("csv output needs a grid (box, step)")
        return to_csv_grid(d, *grid)
    raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")


__all__ = [
    "FORMATS",
    "SCHEMA_VERSION",
    "emit",
    "from_structured",
    "grid_points",
    "latex_expr",
    "to_csv_grid",
    "to_json",
    "to_latex",
    "to_structured",
    "to_text",
]
