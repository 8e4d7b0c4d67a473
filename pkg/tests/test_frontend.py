from __future__ import annotations

import pytest

from conftest import corpus_path, load_corpus
from qfc import pipeline
from qfc.desugar import desugar, desugar_object
from qfc.errors import (
    AmbiguousOverload, BadEntryType, EntryNotQuoted, MetaFuelExhausted, ParseError,
    SpliceOfNonQuote, SpliceOutsideQuote, TypeClash, TypeMismatch, UnboundName,
    UnrepresentableInstance,
)
from qfc.parser import parse_expr, parse_module, parse_term, parse_type
from qfc.stage0 import run_entry
from qfc.syntax import SQuote, SSplice
from qfc.terms import (
    BOOL, FLOAT, INT, Array, Case, ConstApp, Fun, Inl, Lam, Let, Lit, Prod, Sum, UNIT, Var,
    alpha_eq, pretty, show_type, subterms,
)
from qfc.typecheck import check_permitted, infer


def generate(source: str, fuel: int = 10**6):
    return run_entry(desugar(parse_module(source)), fuel)


# parser ------------------------------------------------------------------------


def test_parse_power_module():
    m = parse_module(corpus_path("power").read_text())
    names = [d.name for d in m.definitions]
    assert names == ["power", "main"]
    assert m.definitions[0].params == ("n",)
    assert m.entry == "main"


def test_parse_identity_quote():
    m = parse_module("main = [|| \\x -> x ||]")
    assert isinstance(m.definitions[0].body, SQuote)


def test_parse_accepts_top_level_splice():
    m = parse_module("main = $$(f)")
    assert isinstance(m.definitions[0].body, SSplice)


def test_parse_error_has_position_and_expectation():
    with pytest.raises(ParseError) as e:
        parse_module("main = [|| \\x -> ||]")
    assert e.value.pos == (1, 18)
    assert "expected" in e.value.message


def test_parse_unicode_forms():
    assert alpha_eq(parse_term("λx → x"), parse_term("\\x -> x"))


def test_parse_types():
    assert parse_type("Int -> Float -> Float") == Fun(INT, Fun(FLOAT, FLOAT))
    assert parse_type("(Int, Float)") == Prod(INT, FLOAT)
    assert parse_type("Arr Float") == Array(FLOAT)
    assert parse_type("Maybe Float") == Sum(UNIT, FLOAT)


# desugaring ----------------------------------------------------------------------


def test_do_block_becomes_case():
    t = desugar_object(parse_expr("\\p -> do { y <- p; return (1/y) }"))
    body = t.body
    assert isinstance(body, Case) and body.scrut == Var("p")
    assert isinstance(body.lbody, Inl) and body.lbody.arg == Var(body.lbinder)
    # the right branch returns Just (1/y) for the bound y
    assert "Inr (1 / y)" in pretty(body.rbody)


def test_nothing_is_left_injection_of_unit():
    tt = infer(parse_term("if b then Nothing else Just 2.0"), env={"b": BOOL})
    assert tt.top_type == Sum(UNIT, FLOAT)
    assert isinstance(tt.term.then, Inl) and tt.term.then.annot == Sum(UNIT, FLOAT)


def test_vec_pattern_projects_pair():
    t = desugar_object(parse_expr("\\(Vec n g) -> mkArr n g"))
    assert isinstance(t, Lam) and isinstance(t.body, Let) and isinstance(t.body.body, Let)
    expect = parse_term("\\p -> let n = fst p in let g = snd p in mkArr n g")
    assert alpha_eq(t, expect)


# generation stage --------------------------------------------------------------


def test_identity_quote_generates_lambda():
    assert alpha_eq(generate("main = [|| \\x -> x ||]"), Lam("x", Var("x")))


def test_quote_with_constant():
    t = generate("main = [|| \\x -> x + 1 ||]")
    assert alpha_eq(t, Lam("x", ConstApp("+", (Var("x"), Lit("Int", 1)))))


def test_power_unnormalized_term():
    # the nested beta redexes left by splicing, unfolded by hand for n = -6
    expect = parse_term(
        "\\x -> if x == 0.0 then 0.0 else 1.0 / (\\x -> let y = (\\x -> x * (\\x -> "
        "let y = (\\x -> x * (\\x -> 1.0) x) x in y * y) x) x in y * y) x")
    assert alpha_eq(load_corpus("power").term, expect)


def test_norm_grafts_both_prelude_bodies():
    t = load_corpus("norm").term
    consts = {s.name for _, s in subterms(t) if isinstance(s, ConstApp)}
    assert {"sqrt", "while", "lnArr", "ixArr"} <= consts


def test_power_and_power2_differ_before_normalisation():
    assert not alpha_eq(load_corpus("power").term, load_corpus("power2").term)


def test_quotes_are_hygienic():
    src = "k = [|| \\x -> \\y -> x ||]\nmain = [|| \\y -> $$k y ||]"
    t = generate(src)
    # the inner y must not capture the outer one
    assert alpha_eq(t, parse_term("\\a -> (\\x -> \\y -> x) a"))


@pytest.mark.parametrize("source, error", [
    ("main = $$(f)", SpliceOutsideQuote),
    ("main = 3", EntryNotQuoted),
    ("main = [|| $$(g) ||]", UnboundName),
    ("main = [|| $$(1) ||]", SpliceOfNonQuote),
    ("main = 3 4", TypeClash),
    ("loop n = loop n\nmain = loop 1", MetaFuelExhausted),
])
def test_generation_errors(source, error):
    with pytest.raises(error):
        generate(source)


def test_generation_fuel_counts_steps():
    src = ("count n = if n == 0 then [|| 1 ||] else count (n - 1)\n"
           "main = count 200")
    assert generate(src) == Lit("Int", 1)
    with pytest.raises(MetaFuelExhausted):
        generate(src, fuel=50)


# typechecking --------------------------------------------------------------------


def test_ascription_fixes_literal_type():
    tt = infer(parse_term("\\x -> x + 1"), expected=Fun(FLOAT, FLOAT))
    assert tt.term.body.args[1] == Lit("Float", 1.0)


def test_unconstrained_literal_defaults_to_int():
    assert infer(parse_term("\\x -> x + x")).top_type == Fun(INT, INT)
    with pytest.raises(AmbiguousOverload):
        infer(parse_term("\\x -> x + x"), default_numeric=False)


def test_literal_resolved_by_context():
    assert infer(parse_term("1 + 2.5")).top_type == FLOAT


def test_norm_while_state_type():
    p = load_corpus("norm")
    nf, _ = pipeline.normal_form(p)
    tt = infer(nf)
    whiles = [path for path, s in subterms(tt.term) if isinstance(s, ConstApp) and s.name == "while"]
    assert len(whiles) == 1
    assert tt.types[whiles[0]] == Prod(INT, FLOAT)


def test_while_at_sum_type_is_rejected():
    with pytest.raises(UnrepresentableInstance):
        infer(parse_term("while (\\s -> True) (\\s -> s) (Just 1.0)"))


def test_type_mismatch():
    with pytest.raises(TypeMismatch):
        infer(parse_term("\\x -> x + True"))


def test_entry_type_must_be_representable():
    with pytest.raises(BadEntryType):
        pipeline.load("main :: Qt ((Float -> Float) -> Float)\nmain = [|| \\f -> f 1.0 ||]")


def test_permitted_constants():
    p = load_corpus("power")
    nf, _ = pipeline.normal_form(p)
    assert check_permitted(infer(nf)) == []
    bad = check_permitted(infer(parse_term("fix (\\f -> f)")))
    assert [v.name for v in bad] == ["fix"]
    ok = parse_term("\\n -> while (\\i -> i < n) (\\i -> i + 1) 0")
    assert check_permitted(infer(ok)) == []


def test_show_type():
    assert show_type(Fun(Fun(INT, INT), INT)) == "(Int -> Int) -> Int"
