from __future__ import annotations

import re
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import CORPUS, load_corpus, requires_cc
from gen import term_of, terms
from qfc import pipeline
from qfc.backend import (
    backend_pipeline, c_alpha_equal, c_tokens, cse, eta_contract, inline_linear, lower,
    optimize,
)
from qfc.backend.harness import run_c
from qfc.errors import ForbiddenConstant, NotFirstOrder
from qfc.interp import interp, values_close
from qfc.parser import parse_term
from qfc.terms import (
    BOOL, FLOAT, INT, Array, ConstApp, Fun, If, Lam, Lit, Var, alpha_eq, children, pretty,
    subterms,
)
from qfc.typecheck import infer
from qfc.verify import sample_args

GOLDEN = Path(__file__).parent / "golden"


def compile_corpus(name: str) -> str:
    return pipeline.compile_c(load_corpus(name))


def allocations(c_text: str) -> int:
    return len(re.findall(r"\bqf_alloc_\w+\s*\(", c_text))


def whiles(c_text: str) -> int:
    return len(re.findall(r"\bwhile\s*\(", c_text))


# CSE -----------------------------------------------------------------------------


def test_cse_shares_repeated_product():
    t = parse_term("1.0 / ((u * (v * v)) * (u * (v * v)))")
    out = inline_linear(cse(t))
    assert alpha_eq(out, parse_term("let w = u * (v * v) in 1.0 / (w * w)"))


def test_cse_without_repeats():
    t = parse_term("x + y")
    assert cse(t) == t


def test_cse_shares_call():
    out = cse(parse_term("f (g a) (g a)"))
    lets = [s for _, s in subterms(out) if type(s).__name__ == "Let"]
    bound = [pretty(s.bound) for s in lets]
    assert bound.count("g a") == 1


# eta contraction -------------------------------------------------------------------


def test_eta_equal_branches():
    assert alpha_eq(eta_contract(parse_term("if c then x + 1 else x + 1")), parse_term("x + 1"))


def test_eta_array_copy():
    assert eta_contract(parse_term("mkArr (lnArr a) (\\i -> ixArr a i)")) == Var("a")


def test_eta_distinct_branches_unchanged():
    t = parse_term("if c then x else y")
    assert eta_contract(t) == t


def test_eta_wrong_length_unchanged():
    t = parse_term("mkArr (lnArr b) (\\i -> ixArr a i)")
    assert eta_contract(t) == t


# linear inlining ---------------------------------------------------------------


def test_inline_single_use():
    out = inline_linear(parse_term("let x = a + b in x * 2"))
    assert alpha_eq(out, parse_term("(a + b) * 2"))


def test_inline_not_under_branch():
    t = parse_term("let x = a + b in if c then x else 0")
    assert inline_linear(t) == t


def test_inline_not_duplicated():
    t = parse_term("let x = m + 1 in (x, x)")
    assert inline_linear(t) == t


def _evaluation_order(t) -> list[str]:
    """Constant applications in left-to-right evaluation order."""
    out = []

    def go(t):
        for c in children(t):
            go(c)
        if isinstance(t, ConstApp):
            out.append(pretty(t))

    go(t)
    return out


@pytest.mark.parametrize("source", [
    "let x = a + b in let y = c + d in x * y",
    "let x = a + b in let y = c + d in y * x",
    "let x = a + b in let y = x + d in y * 2",
])
def test_inline_preserves_evaluation_order(source):
    out = inline_linear(parse_term(source))
    assert _evaluation_order(out)[0] == "a + b"


def test_inline_keeps_later_binding_first():
    out = inline_linear(parse_term("let x = a + b in let y = c + d in y * x"))
    assert alpha_eq(out, parse_term("let x = a + b in (c + d) * x"))


# lowering and emission -----------------------------------------------------------


def test_golden_power():
    text = compile_corpus("power")
    assert c_alpha_equal(text, (GOLDEN / "power.c").read_text())


def test_golden_identity():
    p = pipeline.load("main :: Qt (Float -> Float)\nmain = [|| \\x -> x ||]")
    assert pipeline.compile_c(p) == (GOLDEN / "identity.c").read_text()


def test_backend_pipeline_power():
    p = load_corpus("power")
    nf, _ = pipeline.normal_form(p)
    text = backend_pipeline(nf, "prog", top_type=p.top_type)
    assert c_alpha_equal(text, (GOLDEN / "power.c").read_text())


def test_entry_name():
    text = pipeline.compile_c(load_corpus("power"), entry="power6")
    assert "float power6 (float" in text


def test_optimize_is_idempotent():
    for name in CORPUS:
        p = load_corpus(name)
        nf, _ = pipeline.normal_form(p)
        once = optimize(nf)
        assert alpha_eq(optimize(once), once), name


def test_norm_lowers_to_one_loop():
    text = compile_corpus("norm")
    assert whiles(text) == 1
    assert allocations(text) == 0
    assert "sqrtf" in text
    assert re.search(r"s_2\w* = \(s \+ \(\w+ \* \w+\)\);", text)


@pytest.mark.parametrize("name, count", [
    ("dot", 0), ("norm", 0), ("blur", 0), ("blur_memorise", 1), ("window", 1),
])
def test_allocation_counts(name, count):
    assert allocations(compile_corpus(name)) == count


def test_lower_rejects_higher_order():
    with pytest.raises(NotFirstOrder):
        lower(parse_term("\\f -> f 1.0"), "prog", Fun(Fun(FLOAT, FLOAT), FLOAT))


def test_lower_rejects_fix():
    t = parse_term("\\x -> fix (\\y -> y) + x")
    with pytest.raises(ForbiddenConstant):
        lower(t, "prog", Fun(INT, INT))


def test_c_alpha_equal():
    a = "float f (float x) { return x * 1.0f; }"
    b = "float g(float y){return y*1.0;}"
    assert c_alpha_equal(a, b)
    assert not c_alpha_equal(a, "float g(float y){return y*2.0;}")
    # renaming must be a bijection
    assert not c_alpha_equal("int f(int x, int y)", "int f(int x, int x)")
    assert ("kw", "while") in c_tokens("while (x) { }")


# compiled C against the interpreter --------------------------------------------


@requires_cc
@pytest.mark.parametrize("name", CORPUS)
def test_compiled_agrees_with_interp(name):
    p = load_corpus(name)
    nf, _ = pipeline.normal_form(p)
    unit = pipeline.compile_unit(p)
    samples = sample_args(p.top_type, 100)
    results = run_c(unit, samples)
    assert len(results) == len(samples)
    for args, (kind, value) in zip(samples, results):
        assert kind == "ok"
        expect = interp(nf, args)
        assert values_close(value, expect, rel=1e-5, abs_tol=0.0), (args, value, expect)


@requires_cc
def test_power_zero_in_c():
    unit = pipeline.compile_unit(load_corpus("power"))
    assert run_c(unit, [[0.0]]) == [("ok", 0.0)]


@requires_cc
def test_fib_in_c():
    unit = pipeline.compile_unit(load_corpus("fib"))
    assert run_c(unit, [[10], [0], [1]]) == [("ok", 55), ("ok", 0), ("ok", 1)]


@requires_cc
def test_runtime_traps_match_interp():
    p = pipeline.load("main :: Qt (Arr Int -> Int -> Int)\n"
                      "main = [|| \\a k -> div (ixArr a k) k ||]")
    unit = pipeline.compile_unit(p)
    arr = pipeline.ArrVal((6, 7))
    out = run_c(unit, [[arr, 1], [arr, 0], [arr, 5], [arr, -1]])
    assert out == [("ok", 7), ("error", "E602"), ("error", "E601"), ("error", "E601")]


# eta rules on generated instances ----------------------------------------------

ETA_SETTINGS = settings(max_examples=1000, deadline=None,
                        suppress_health_check=list(HealthCheck))
ENV = {"a": Array(FLOAT), "x": FLOAT, "n": INT}


@st.composite
def array_terms(draw, depth: int = 2):
    """Array-valued terms over the environment :data:`ENV`."""
    choice = draw(st.sampled_from(["var", "mk", "if"] if depth else ["var", "mk"]))
    match choice:
        case "var":
            return Var("a")
        case "mk":
            size = draw(st.integers(0, 6))
            body = term_of(draw, FLOAT, {**ENV, "i": INT}, 2)
            return ConstApp("mkArr", (Lit("Int", size), Lam("i", body)))
        case "if":
            cond = term_of(draw, BOOL, ENV, 2)
            return If(cond, draw(array_terms(depth - 1)), draw(array_terms(depth - 1)))
    raise AssertionError


def _close(body, ty):
    return Lam("a", Lam("x", Lam("n", body))), Fun(Array(FLOAT), Fun(FLOAT, Fun(INT, ty)))


def _agree(before, after, ty, draw_args):
    f, fty = _close(before, ty)
    g, _ = _close(after, ty)
    infer(f, expected=fty)
    for args in draw_args(fty):
        assert values_close(interp(f, args), interp(g, args))


def _args(fty):
    return sample_args(fty, 5, seed=7)


@ETA_SETTINGS
@given(st.data())
def test_eta_conditional_on_generated_terms(data):
    ty = data.draw(st.sampled_from([INT, FLOAT, BOOL]))
    m = data.draw(terms(ty, ENV, 3))
    cond = data.draw(terms(BOOL, ENV, 2))
    t = If(cond, m, m)
    out = eta_contract(t)
    assert alpha_eq(out, eta_contract(m))
    _agree(t, out, ty, _args)


@ETA_SETTINGS
@given(array_terms())
def test_eta_array_on_generated_terms(m):
    t = ConstApp("mkArr", (ConstApp("lnArr", (m,)),
                           Lam("j", ConstApp("ixArr", (m, Var("j"))))))
    out = eta_contract(t)
    assert alpha_eq(out, eta_contract(m))
    _agree(t, out, Array(FLOAT), _args)
