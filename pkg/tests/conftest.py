from __future__ import annotations

import sys
from functools import cache
from pathlib import Path

import pytest

from qfc import pipeline
from qfc.backend.harness import find_compiler

CORPUS_DIR = Path(pipeline.__file__).parent / "corpus"
CORPUS = ("power", "power2", "fib", "dot", "norm", "blur", "blur_memorise", "window")


def corpus_path(name: str) -> Path:
    return CORPUS_DIR / f"{name}.qf"


@cache
def _load(name: str) -> pipeline.Program:
    return pipeline.load_file(str(corpus_path(name)))


def load_corpus(name: str) -> pipeline.Program:
    # a fresh program each time so fresh names do not leak between tests
    return pipeline.load_file(str(corpus_path(name)))


requires_cc = pytest.mark.skipif(find_compiler() is None, reason="no C compiler available")


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.line(n))
