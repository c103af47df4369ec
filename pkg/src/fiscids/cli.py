"""Command-line front end.

    fiscids build --expr "log(2 + x)" --vars x --class q --out sys.json
    fiscids transform --in sys.json --to q --out q.json
    fiscids eval --in sys.json --xi 0.5 [--t 1]
    fiscids verify --in sys.json --ref-expr "log(2 + x)" --box -1:1:41
    fiscids snapshot --in sys.json --box -2:2:21,-2:2:21 --times 0,0.5,1 --out snap.csv
    fiscids example --name gaussian|logpoly|tt [--stage r|p|q] [--out sys.json]

Exit status: 0 on success, 1 on pipeline or verification failure, 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from fractions import Fraction

from .errors import FiscidsError
from .examples import EXAMPLES
from .integrate import IntegrationConfig, output_at
from .model import dumps, load
from .parse import parse
from .pipeline import build, transform
from .verify import GridSpec, cross_compare, expr_reference, grid_compare, snapshot

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# flags whose value may legitimately start with '-'
_VALUE_FLAGS = {
    "--expr", "--vars", "--base-point", "--xi", "--t", "--box", "--times",
    "--ref-expr", "--abs-tol", "--rel-tol", "--max-err",
}


class UsageError(Exception):
    pass


def _join_values(argv: list[str]) -> list[str]:
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _fractions(text: str, what: str) -> list[Fraction]:
    try:
        return [Fraction(v.strip()) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _grid(text: str, n: int) -> GridSpec:
    try:
        grid = GridSpec.parse(text)
    except ValueError as exc:
        raise UsageError(f"--box: {exc}") from None
    if grid.n != n:
        raise UsageError(f"--box has {grid.n} dimensions but the system has {n} inputs")
    return grid


def _config(args) -> IntegrationConfig:
    try:
        return IntegrationConfig(
            method=args.method,
            abs_tol=args.abs_tol,
            rel_tol=args.rel_tol,
            fixed_steps=args.fixed_steps,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fmt(v: float) -> str:
    return f"{v:.16e}"


def _write(text: str, path: str | None, stdout):
    if path in (None, "-"):
        stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_build(args, stdout) -> int:
    names = [v.strip() for v in args.vars.split(",") if v.strip()]
    if not names:
        raise UsageError("--vars must name at least one variable")
    base = _fractions(args.base_point, "--base-point") if args.base_point else None
    if base is not None and len(base) != len(names):
        raise UsageError(f"--base-point has {len(base)} entries for {len(names)} variables")
    system = build(args.expr, names, base_point=base, to=args.cls, cap=args.cap)
    _write(dumps(system), args.out, stdout)
    return EXIT_OK


def cmd_transform(args, stdout) -> int:
    system = transform(load(args.inp), args.to)
    _write(dumps(system), args.out, stdout)
    return EXIT_OK


def cmd_eval(args, stdout) -> int:
    system = load(args.inp)
    xi = _floats(args.xi, "--xi")
    if len(xi) != system.n:
        raise UsageError(f"--xi has {len(xi)} entries but the system has {system.n} inputs")
    if not 0.0 <= args.t <= 1.0:
        raise UsageError("--t must lie in [0, 1]")
    y = output_at(system, xi, args.t, _config(args))
    stdout.write(",".join(_fmt(v) for v in y) + "\n")
    return EXIT_OK


def cmd_verify(args, stdout) -> int:
    system = load(args.inp)
    grid = _grid(args.box, system.n)
    cfg = _config(args)
    if args.ref_expr is not None:
        ref = expr_reference(parse(args.ref_expr, system.input_names), system.input_names)
        report = grid_compare(system, ref, grid, cfg)
    else:
        report = cross_compare(system, load(args.against), grid, cfg)
    stdout.write(report.format() + "\n")
    ok = report.max_abs <= args.max_err and not report.failures
    stdout.write(("PASS" if ok else "FAIL") + f" (max-err {args.max_err:g})\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_snapshot(args, stdout) -> int:
    system = load(args.inp)
    grid = _grid(args.box, system.n)
    times = _floats(args.times, "--times")
    if any(not 0.0 <= t <= 1.0 for t in times) or times != sorted(times):
        raise UsageError("--times must be sorted values in [0, 1]")
    table = snapshot(system, grid, times, _config(args))
    _write(table.to_csv(), args.out, stdout)
    return EXIT_OK


def cmd_example(args, stdout) -> int:
    if args.name == "logpoly":
        system = EXAMPLES["logpoly"](args.stage)
    else:
        if args.stage != "q" and args.name == "tt":
            raise UsageError("--stage applies to logpoly only")
        system = EXAMPLES[args.name]()
    _write(dumps(system), args.out, stdout)
    return EXIT_OK


def _add_integration_flags(p):
    p.add_argument("--method", choices=["adaptive_rk45", "fixed_rk4"], default="adaptive_rk45")
    p.add_argument("--abs-tol", type=float, default=1e-12)
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--fixed-steps", type=int, default=1000)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fiscids", description="Fixed-initial-state constant-input system toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="lift a formula and transform it to a class")
    p.add_argument("--expr", required=True)
    p.add_argument("--vars", required=True, help="comma-separated input names")
    p.add_argument("--base-point", default=None)
    p.add_argument("--class", dest="cls", choices=["r", "p", "q"], default="q")
    p.add_argument("--cap", type=int, default=64)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("transform", help="rational -> polynomial -> quadratic")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--to", choices=["p", "q"], required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("eval", help="print y(t; xi)")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--xi", required=True)
    p.add_argument("--t", type=float, default=1.0)
    _add_integration_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="compare against a formula or another system on a grid")
    p.add_argument("--in", dest="inp", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ref-expr")
    src.add_argument("--against")
    p.add_argument("--box", required=True, help="lo:hi:count per input, comma separated")
    p.add_argument("--max-err", type=float, default=1e-6)
    _add_integration_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("snapshot", help="write y(t; xi) over a grid and times as CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--box", required=True)
    p.add_argument("--times", required=True)
    p.add_argument("--out", default=None)
    _add_integration_flags(p)
    p.set_defaults(func=cmd_snapshot)

    p = sub.add_parser("example", help="write a built-in system document")
    p.add_argument("--name", choices=sorted(EXAMPLES), required=True)
    p.add_argument("--stage", choices=["r", "p", "q"], default="q")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_example)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = make_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(_join_values(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args, stdout)
    except UsageError as exc:
        stderr.write(f"fiscids {args.command}: {exc}\n")
        return EXIT_USAGE
    except (FiscidsError, ArithmeticError, OSError) as exc:
        stderr.write(f"fiscids {args.command}: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
