"""Command-line front end.

Exit codes: 0 on success, 1 when the input cannot be decomposed or parsed
(or a fixture fails), 2 on internal errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import traceback
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .decomp import DEFAULT_LAMBDA_MAX, HarmonicCheckFailed, NoDecomposition, apply_gauge, decompose
from .emit import FORMATS, emit
from .grammar import FieldSpecError, parse_document, parse_expr, parse_numeric_field
from .numeric import FieldSampler, QuadratureSpec, theorem2_decompose
from .verify import run_fixtures

EXIT_OK = 0
EXIT_USER = 1
EXIT_INTERNAL = 2


class UserError(Exception):
    """Bad input that is reported without a traceback (exit code 1)."""


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UserError(f"cannot read {path}: {exc.strerror}") from None


def _cmd_decompose(args) -> str:
    doc = parse_document(_read(args.file))
    d = decompose(doc.field, args.lambda_max, args.method)
    if args.gauge:
        d = apply_gauge(d, parse_expr(args.gauge, doc.n, doc.params))
    if args.format == "csv" and args.grid is None:
        raise UserError("--format csv needs --grid BOX STEP")
    return emit(d, args.format, tuple(args.grid) if args.grid else None)


def _read_points(path: str, n: int) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(_read(path).splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values = [float(v) for v in line.replace(",", " ").split()]
        except ValueError:
            raise UserError(f"{path}:{lineno}: expected {n} numbers") from None
        if len(values) != n:
            raise UserError(f"{path}:{lineno}: expected {n} numbers, got {len(values)}")
        rows.append(values)
    if not rows:
        raise UserError(f"{path}: no evaluation points")
    return np.array(rows)


def _cmd_theorem2(args) -> str:
    n, comps = parse_numeric_field(_read(args.file))
    if n not in (2, 3):
        raise UserError("theorem2 supports n = 2 and n = 3")
    try:
        spec = QuadratureSpec(args.radius, args.step, n)
    except ValueError as exc:
        raise UserError(str(exc)) from None
    pts = _read_points(args.points, n)
    sampler = FieldSampler(n, comps)
    try:
        res = theorem2_decompose(sampler, pts, spec)
    except ValueError as exc:
        raise UserError(str(exc)) from None
    f = sampler(pts)
    resid = np.abs(res.g + res.r - f).max(axis=1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{p}{i}" for p in "xfgr" for i in range(1, n + 1)] + ["residual"])
    for row in np.hstack([pts, f, res.g, res.r, resid[:, None]]):
        w.writerow([repr(float(v) + 0.0) for v in row])
    return buf.getvalue()


def _cmd_fixtures(args) -> tuple[str, int]:
    try:
        reports = run_fixtures(args.names or None)
    except KeyError as exc:
        raise UserError(exc.args[0]) from None
    text = "\n".join(str(r) for r in reports)
    failed = sum(not r.passed for r in reports)
    text += f"\n{len(reports) - failed}/{len(reports)} fixtures passed\n"
    return text, EXIT_OK if not failed else EXIT_USER


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="helmholtz", description="Helmholtz decomposition of separable vector fields")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="symbolic decomposition of a field file")
    d.add_argument("file")
    d.add_argument("--lambda-max", type=int, default=DEFAULT_LAMBDA_MAX)
    d.add_argument("--method", choices=("auto", "2a", "2b"), default="auto")
    d.add_argument("--gauge", metavar="EXPR", help="harmonic function added to the gradient potential")
    d.add_argument("--format", choices=FORMATS, default="text")
    d.add_argument("--grid", nargs=2, type=float, metavar=("BOX", "STEP"))

    t = sub.add_parser("theorem2", help="numeric decomposition of a decaying field (n = 2, 3)")
    t.add_argument("file")
    t.add_argument("--radius", type=float, required=True)
    t.add_argument("--step", type=float, required=True)
    t.add_argument("--points", required=True, help="file with one evaluation point per line")

    f = sub.add_parser("fixtures", help="golden fixture suite")
    fsub = f.add_subparsers(dest="action", required=True)
    run = fsub.add_parser("run")
    run.add_argument("names", nargs="*")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; those are user errors here
        return EXIT_USER if exc.code else EXIT_OK
    code = EXIT_OK
    try:
        if args.command == "decompose":
            out = _cmd_decompose(args)
        elif args.command == "theorem2":
            out = _cmd_theorem2(args)
        else:
            out, code = _cmd_fixtures(args)
    except (NoDecomposition, FieldSpecError, HarmonicCheckFailed, UserError) as exc:
        print(f"helmholtz: error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception:  # noqa: BLE001
        print("helmholtz: internal error", file=sys.stderr)
        traceback.print_exc()
        return EXIT_INTERNAL
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
