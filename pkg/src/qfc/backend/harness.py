"""Build and run generated C against sampled inputs.

The harness wraps the emitted routine in a ``main`` that reads a sample
count and then one whitespace-separated argument vector per sample from
stdin, printing one result line each. Failed run-time checks print
``error EXXX`` instead of aborting, so the caller can compare them with
the reference interpreter's diagnostics.
"""

from __future__ import annotations

import os
import shutil
import subprocess
import tempfile
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from ..interp import ArrVal
from ..terms import Array, Base, ObjType, Prod
from .cgen import CUnit, ctype, emit, leaf_types
from .runtime import write_runtime

CFLAGS = ("-std=c99", "-Wall", "-Wextra", "-pedantic", "-Werror", "-fwrapv", "-O1")

_PRELUDE = """#include <setjmp.h>
#include <stdio.h>
static jmp_buf qf_harness_env;
static int qf_harness_code;
#define QF_TRAP(code) (qf_harness_code = (code), longjmp(qf_harness_env, 1))
"""


def find_compiler() -> Optional[str]:
    for cc in (os.environ.get("CC"), "gcc", "cc", "clang"):
        if cc and shutil.which(cc):
            return cc
    return None


def _read_leaf(name: str, ty: ObjType) -> list[str]:
    match ty:
        case Base("Int"):
            return [f"  {{ long v; if (scanf(\"%ld\", &v) != 1) return 2; {name} = (int32_t) v; }}"]
        case Base("Float"):
            return [f"  {{ double v; if (scanf(\"%lf\", &v) != 1) return 2; {name} = (float) v; }}"]
        case Base("Bool"):
            return [f"  {{ int v; if (scanf(\"%d\", &v) != 1) return 2; {name} = v != 0; }}"]
        case Array(elem):
            inner = _read_leaf(f"{name}.data[j]", elem)[0].strip()
            return ["  { long n; int32_t j; if (scanf(\"%ld\", &n) != 1) return 2;",
                    f"    {name} = qf_alloc_{elem.kind.lower()}((int32_t) n);",
                    f"    for (j = 0; j < (int32_t) n; j++) {inner} }}"]
    raise ValueError(ty)


def _print_leaf(expr: str, ty: ObjType) -> list[str]:
    match ty:
        case Base("Int"):
            return [f"  printf(\" %ld\", (long) {expr});"]
        case Base("Float"):
            return [f"  printf(\" %.9g\", (double) {expr});"]
        case Base("Bool"):
            return [f"  printf(\" %d\", {expr} ? 1 : 0);"]
        case Array(elem):
            inner = _print_leaf(f"{expr}.data[j]", elem)[0].strip()
            return [f"  {{ uint32_t j; printf(\" %lu\", (unsigned long) {expr}.len);",
                    f"    for (j = 0; j < {expr}.len; j++) {inner} }}"]
    raise ValueError(ty)


def harness_source(unit: CUnit) -> str:
    """The routine plus a ``main`` driving it from stdin."""
    fn = unit.entry
    lines = ["int main(void) {", "  long count;", "  volatile long k;"]
    args: list[str] = []
    reads: list[str] = []
    for i, ty in enumerate(unit.params):
        for suffix, leaf in leaf_types(ty):
            name = f"qa{i}{suffix}"
            lines.append(f"  {ctype(leaf)} {name};")
            args.append(name)
            reads += _read_leaf(name, leaf)
    result_leaves = leaf_types(unit.result)
    if result_leaves:
        lines.append(f"  {fn.ret} res;")
    lines += ["  if (scanf(\"%ld\", &count) != 1) return 2;",
              "  for (k = 0; k < count; k++) {"]
    lines += ["  " + r for r in reads]
    lines += ["    if (setjmp(qf_harness_env)) {",
              "      printf(\"error E%03d\\n\", qf_harness_code);",
              "      continue;",
              "    }"]
    call = f"{fn.name}({', '.join(args)})"
    lines.append(f"    {'res = ' if result_leaves else ''}{call};")
    lines.append("    printf(\"ok\");")
    for suffix, leaf in result_leaves:
        expr = "res" if suffix == "" else f"res.f{suffix[1:]}"
        lines += ["  " + p for p in _print_leaf(expr, leaf)]
    lines += ["    printf(\"\\n\");", "  }", "  return 0;", "}"]
    return _PRELUDE + emit(unit) + "\n" + "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argument encoding and result decoding
# ---------------------------------------------------------------------------


def _encode(value: Any, ty: ObjType, out: list[str]) -> None:
    match ty:
        case Base("Unit"):
            return
        case Base("Int"):
            out.append(str(int(value)))
        case Base("Float"):
            out.append(repr(float(value)))
        case Base("Bool"):
            out.append("1" if value else "0")
        case Prod(a, b):
            _encode(value[0], a, out)
            _encode(value[1], b, out)
        case Array(elem):
            elems = value.elems if isinstance(value, ArrVal) else list(value)
            out.append(str(len(elems)))
            for e in elems:
                _encode(e, elem, out)
        case _:
            raise ValueError(f"cannot pass {ty} to C")


def encode_inputs(unit: CUnit, samples: Sequence[Sequence[Any]]) -> str:
    out = [str(len(samples))]
    for args in samples:
        for value, ty in zip(args, unit.params, strict=True):
            _encode(value, ty, out)
    return " ".join(out) + "\n"


def _decode(tokens: list[str], ty: ObjType) -> Any:
    match ty:
        case Base("Unit"):
            return ()
        case Base("Int"):
            return int(tokens.pop(0))
        case Base("Float"):
            return float(tokens.pop(0))
        case Base("Bool"):
            return tokens.pop(0) == "1"
        case Prod(a, b):
            left = _decode(tokens, a)
            return (left, _decode(tokens, b))
        case Array(elem):
            n = int(tokens.pop(0))
            return ArrVal(tuple(_decode(tokens, elem) for _ in range(n)))
    raise ValueError(ty)


def decode_outputs(unit: CUnit, text: str) -> list[tuple[str, Any]]:
    """``("ok", value)`` or ``("error", code)`` per output line."""
    results = []
    for line in text.splitlines():
        tokens = line.split()
        if tokens[0] == "error":
            results.append(("error", tokens[1]))
        else:
            results.append(("ok", _decode(tokens[1:], unit.result)))
    return results


# ---------------------------------------------------------------------------
# compile and run
# ---------------------------------------------------------------------------


class CompileFailed(RuntimeError):
    pass


def compile_c(source: str, workdir: Path, cc: Optional[str] = None,
              extra_flags: Iterable[str] = ("-DQF_CHECKED",)) -> Path:
    cc = cc or find_compiler()
    if cc is None:
        raise CompileFailed("no C compiler found")
    write_runtime(workdir)
    src = workdir / "harness.c"
    src.write_text(source, encoding="utf-8")
    exe = workdir / "harness"
    proc = subprocess.run([cc, *CFLAGS, *extra_flags, str(src), "-o", str(exe), "-lm"],
                          capture_output=True, text=True)
    if proc.returncode != 0:
        raise CompileFailed(proc.stderr)
    return exe


def run_c(unit: CUnit, samples: Sequence[Sequence[Any]], cc: Optional[str] = None,
          timeout: float = 60.0) -> list[tuple[str, Any]]:
    """Compile ``unit`` with a harness and evaluate it on every sample."""
    with tempfile.TemporaryDirectory(prefix="qfc-") as tmp:
        exe = compile_c(harness_source(unit), Path(tmp), cc)
        proc = subprocess.run([str(exe)], input=encode_inputs(unit, samples),
                              capture_output=True, text=True, timeout=timeout)
        if proc.returncode != 0:
            raise CompileFailed(f"harness exited with {proc.returncode}: {proc.stderr}")
        return decode_outputs(unit, proc.stdout)
