from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

from conftest import corpus_path, requires_cc
from qfc.backend import c_alpha_equal
from qfc.backend.harness import CFLAGS, find_compiler
from qfc.cli import main
from qfc.parser import parse_term
from qfc.terms import alpha_eq

POWER = str(corpus_path("power"))
GOLDEN = Path(__file__).parent / "golden"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compile_writes_c_and_runtime(tmp_path, capsys):
    target = tmp_path / "power.c"
    code, _, err = run(["compile", POWER, "-o", str(target)], capsys)
    assert code == 0, err
    assert c_alpha_equal(target.read_text(), (GOLDEN / "power.c").read_text())
    assert (tmp_path / "qf_runtime.h").exists()


def test_compile_to_stdout(capsys):
    code, out, _ = run(["compile", POWER, "--entry", "pw"], capsys)
    assert code == 0
    assert "float pw (float" in out


@requires_cc
def test_compiled_file_builds(tmp_path, capsys):
    target = tmp_path / "norm.c"
    assert run(["compile", str(corpus_path("norm")), "-o", str(target)], capsys)[0] == 0
    proc = subprocess.run([find_compiler(), *CFLAGS, "-c", str(target), "-o",
                           str(tmp_path / "norm.o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def test_normalize_phase2(capsys):
    code, out, _ = run(["normalize", POWER, "--dump-phase", "2"], capsys)
    assert code == 0
    expect = parse_term(
        "\\u -> if u == 0.0 then 0.0 else let v = u * 1.0 in let w = u * (v * v) in "
        "1.0 / (w * w)")
    assert alpha_eq(parse_term(out), expect)


def test_normalize_value_rejects_phase3(capsys):
    code, _, err = run(["normalize", POWER, "--strategy", "value", "--dump-phase", "3"], capsys)
    assert code == 1
    assert "phase 3" in err


def test_check_first_order(capsys):
    code, out, _ = run(["check", str(corpus_path("norm")), "--property", "first-order"], capsys)
    assert code == 0
    assert "first-order: ok" in out


def test_check_with_oracle(capsys):
    code, out, _ = run(["check", POWER, "--oracle", "--samples", "20"], capsys)
    assert code == 0
    assert "oracle: ok" in out


def test_check_failure_exit_code(capsys):
    code, out, err = run(["check", str(corpus_path("dot")), "--property", "sharpened"], capsys)
    assert code == 1
    assert "sharpened: FAILED" in out
    assert "E401" in err


@pytest.mark.parametrize("name, args, expect", [
    ("fib", ["10"], "55"),
    ("norm", ["[3.0, 4.0]"], "5.0"),
    ("power", ["0.0"], "0.0"),
    ("power", ["2.0"], "0.015625"),
])
def test_eval(name, args, expect, capsys):
    code, out, _ = run(["eval", str(corpus_path(name)), *args], capsys)
    assert code == 0
    assert out.strip() == expect


def test_eval_unnormalized(capsys):
    code, out, _ = run(["eval", str(corpus_path("fib")), "7", "--unnormalized"], capsys)
    assert (code, out.strip()) == (0, "13")


def test_eval_bad_argument(capsys):
    code, _, err = run(["eval", POWER, "abc"], capsys)
    assert code == 1
    assert "error" in err


def test_missing_file(capsys):
    code, _, err = run(["compile", "no/such/file.qf"], capsys)
    assert code == 1
    assert "no/such/file.qf" in err


def test_bad_subcommand(capsys):
    assert run(["frobnicate"], capsys)[0] == 1


def test_parse_error_is_located(tmp_path, capsys):
    src = tmp_path / "bad.qf"
    src.write_text("main = [|| \\x -> ||]\n")
    code, _, err = run(["compile", str(src)], capsys)
    assert code == 1
    assert err.startswith(f"{src}:1:18: error[E001]")


def test_fuel_limit(tmp_path, capsys, monkeypatch):
    src = tmp_path / "count.qf"
    src.write_text("count n = if n == 0 then [|| \\x -> x + 1 ||] else count (n - 1)\n"
                   "main :: Qt (Int -> Int)\nmain = count 500\n")
    assert run(["eval", str(src), "1"], capsys)[0] == 0
    code, _, err = run(["eval", str(src), "1", "--fuel", "100"], capsys)
    assert code == 1 and "E105" in err
    monkeypatch.setenv("QFC_FUEL", "100")
    assert run(["eval", str(src), "1"], capsys)[0] == 1


def test_compile_refuses_higher_order(tmp_path, capsys):
    src = tmp_path / "ho.qf"
    src.write_text("main :: Qt (Float -> Float)\n"
                   "main = [|| \\x -> fix (\\y -> y) + x ||]\n")
    target = tmp_path / "ho.c"
    code, _, err = run(["compile", str(src), "-o", str(target)], capsys)
    assert code == 1
    assert "E502" in err
    assert not target.exists()


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qfc.cli", "eval", str(corpus_path("fib")), "10"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "55"
