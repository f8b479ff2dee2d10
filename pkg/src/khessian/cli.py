"""Command-line driver.

Exit codes: 0 success, 2 invalid configuration, 3 solver non-convergence,
4 I/O failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, GridError, InvalidOrder, KHessianError
from .iterations import SOLVERS
from .report import (RunConfig, StudyError, export_slice, field_csv, read_field_csv,
                     render_table, run_convergence_study, solve_one)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--problem", required=True, help="test1..test5 or quadratic-<k>-<n>")
    p.add_argument("--method", default="fixed-point", choices=sorted(SOLVERS))
    p.add_argument("--tol", type=float, default=1e-10, help="successive-iterate tolerance")
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--lin-tol", type=float, default=1e-12)
    p.add_argument("--lin-method", default="direct", choices=("direct", "krylov", "sweep"))
    p.add_argument("--init", default="paper", choices=("paper", "maclaurin"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="khessian", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem on one grid")
    _add_run_flags(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", type=Path, help="write the solution field as CSV")

    p = sub.add_parser("convergence", help="grid-refinement study")
    _add_run_flags(p)
    p.add_argument("--m", type=_int_list, required=True, help="comma-separated grid sizes")
    p.add_argument("--out", type=Path, required=True, help="CSV table path")

    p = sub.add_parser("export-slice", help="cut a plane out of a field CSV")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--axis", choices=("x", "y", "z"), required=True)
    p.add_argument("--value", type=float, required=True)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _run_config(args, ms) -> RunConfig:
    return RunConfig(args.problem, args.method, ms, tol=args.tol, max_iter=args.max_iter,
                     lin_tol=args.lin_tol, lin_method=args.lin_method, init=args.init)


def _cmd_solve(args) -> int:
    config = _run_config(args, [args.m])
    u, report, row = solve_one(config, args.m)
    print(f"{config.problem} {config.method} m={args.m}: {report.termination} after "
          f"{report.iterations} iterations")
    print(f"  residual  {row.residual:.5g}")
    if row.max_error is not None:
        print(f"  max error {row.max_error:.5g}")
    if args.out:
        args.out.write_text(field_csv(u))
    return EXIT_OK if report.converged else EXIT_SOLVER


def _cmd_convergence(args) -> int:
    config = _run_config(args, args.m)
    try:
        rows = run_convergence_study(config)
    except StudyError as exc:
        print(f"study aborted: {exc}", file=sys.stderr)
        if exc.rows:
            text, table = render_table(exc.rows)
            print(text, end="")
            args.out.write_text(table)
        return EXIT_SOLVER
    text, table = render_table(rows)
    print(text, end="")
    args.out.write_text(table)
    return EXIT_OK


def _cmd_slice(args) -> int:
    u = read_field_csv(args.inp.read_text())
    args.out.write_text(export_slice(u, args.axis, args.value))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"solve": _cmd_solve, "convergence": _cmd_convergence,
               "export-slice": _cmd_slice}[args.command]
    try:
        return handler(args)
    except (ConfigError, GridError, InvalidOrder) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except KHessianError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
