"""Command-line driver: ``qfc compile | normalize | check | eval``.

Exit status is 0 on success, 1 for errors in the user's program or
invocation (reported as ``file:line:col: error[EXXX]: message``) and 2 for
internal failures.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from pathlib import Path
from typing import Optional, Sequence

from . import pipeline
from .backend import write_runtime
from .deep import run_deep
from .errors import PropertyViolation, QfError
from .interp import show_value
from .normalize import Strategy
from .terms import pretty

FUEL_ENV = "QFC_FUEL"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # bad flags are the user's mistake, not an internal failure
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("file", help="source file (.qf)")
    common.add_argument("--main", default="main", help="definition to compile (default: main)")
    common.add_argument("--strategy", choices=[s.value for s in Strategy], default="need",
                        help="normalise for call-by-need (default) or call-by-value")
    common.add_argument("--fuel", type=int, default=None,
                        help=f"step budget for every stage (or set {FUEL_ENV})")

    parser = _Parser(prog="qfc", description="Compile quoted programs to C.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compile", parents=[common], help="emit C for a program")
    p.add_argument("-o", "--output", type=Path, help="output .c file (default: stdout)")
    p.add_argument("--entry", default="prog", help="name of the C routine (default: prog)")

    p = sub.add_parser("normalize", parents=[common], help="print the term after a phase")
    p.add_argument("--dump-phase", type=int, choices=range(4), default=None,
                   help="0 = preprocessed, 1-3 = after that phase (default: last)")

    p = sub.add_parser("check", parents=[common], help="check properties of the normal form")
    p.add_argument("--property", choices=[*pipeline.PROPERTIES, "all"], default="all")
    p.add_argument("--oracle", action="store_true",
                   help="also compare the program before and after normalisation")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=pipeline.ORACLE_SEED)

    p = sub.add_parser("eval", parents=[common], help="run a program on literal arguments")
    p.add_argument("args", nargs="*", help="arguments such as 2.0, True, (1, 2) or [1.0, 2.0]")
    p.add_argument("--unnormalized", action="store_true",
                   help="evaluate the generated term without normalising it")
    return parser


def _fuel(args: argparse.Namespace) -> dict[str, int]:
    fuel = args.fuel
    if fuel is None and os.environ.get(FUEL_ENV):
        try:
            fuel = int(os.environ[FUEL_ENV])
        except ValueError:
            raise UsageError(f"{FUEL_ENV} must be an integer") from None
    if fuel is None:
        return {}
    if fuel <= 0:
        raise UsageError("fuel must be positive")
    return {"fuel": fuel}


def _run(args: argparse.Namespace) -> int:
    fuel = _fuel(args)
    meta = {"meta_fuel": fuel["fuel"]} if fuel else {}
    prog = pipeline.load_file(args.file, args.main, **meta)
    match args.command:
        case "compile":
            text = pipeline.compile_c(prog, args.entry, args.strategy, **fuel)
            if args.output is None:
                sys.stdout.write(text)
            else:
                args.output.write_text(text, encoding="utf-8")
                write_runtime(args.output.parent)
        case "normalize":
            phase = args.dump_phase
            if phase is None:
                phase = 3 if args.strategy == "need" else 2
            if phase == 3 and args.strategy == "value":
                raise UsageError("phase 3 does not run under --strategy value")
            print(pretty(pipeline.dump_phase(prog, phase, args.strategy, **fuel)))
        case "check":
            names = pipeline.PROPERTIES if args.property == "all" else (args.property,)
            reports = pipeline.check(prog, names, args.strategy, **fuel)
            if args.oracle:
                reports.append(pipeline.oracle(prog, args.samples, args.seed, args.strategy, **fuel))
            for r in reports:
                print(r.render())
            failed = [r.name for r in reports if not r.ok]
            if failed:
                raise PropertyViolation(f"property check failed: {', '.join(failed)}")
        case "eval":
            extra = {"eval_fuel": fuel["fuel"]} if fuel else {}
            value = pipeline.evaluate(prog, args.args, not args.unnormalized, args.strategy,
                                      **fuel, **extra)
            print(show_value(value))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    filename = "<qfc>"
    try:
        args = parser.parse_args(argv)
        filename = args.file
        return run_deep(_run, args)
    except UsageError as e:
        print(f"qfc: error: {e}", file=sys.stderr)
        return 1
    except QfError as e:
        print(e.render(filename), file=sys.stderr)
        return 1
    except OSError as e:
        where = f" ({e.filename})" if e.filename else ""
        print(f"qfc: error: {e.strerror or e}{where}", file=sys.stderr)
        return 1
    except RecursionError:
        print(f"{filename}:0:0: error: program nests too deeply", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        print("qfc: internal error", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
