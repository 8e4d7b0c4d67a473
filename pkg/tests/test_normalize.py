from __future__ import annotations

import pytest
from hypothesis import HealthCheck, given, settings

from conftest import CORPUS, load_corpus
from gen import programs
from qfc import pipeline
from qfc.errors import NormFuelExhausted
from qfc.interp import interp, values_close
from qfc.normalize import (
    Strategy, normalize, normalize_to, phase1, phases, phase2, phase3, preprocess, redexes,
)
from qfc.parser import parse_term
from qfc.terms import (
    FLOAT, INT, App, ConstApp, Fun, Lam, Lit, Prod, Var, alpha_eq, is_representable,
    subterms,
)
from qfc.typecheck import infer
from qfc.verify import (
    check_first_order, check_sharpened, check_subformula, oracle_compare, sample_args,
)

PROPERTY_SETTINGS = settings(max_examples=300, deadline=None,
                             suppress_health_check=list(HealthCheck))


# preprocessing -------------------------------------------------------------------


def test_bare_operator_is_eta_expanded():
    out = preprocess(parse_term("\\f -> f (*)"))
    assert alpha_eq(out, parse_term("\\f -> f (\\a b -> a * b)"))


def test_saturated_constant_unchanged():
    t = parse_term("x + 1")
    assert preprocess(t) == t


def test_save_with_extra_argument():
    out = preprocess(parse_term("save l m"))
    assert out == App(ConstApp("save", (Var("l"),)), Var("m"))


# phase 1 ---------------------------------------------------------------------------


def test_phase1_names_non_value_operand():
    out = phase1(parse_term("f (a + b)"))
    assert alpha_eq(out, parse_term("let x = a + b in f x"))


def test_phase1_leaves_value_operand():
    t = parse_term("f x")
    assert phase1(t) == t


def test_phase1_let_associativity():
    out = phase1(parse_term("let y = (let x = l in m) in n"))
    assert alpha_eq(out, parse_term("let x = l in let y = m in n"))


# phase 2 ---------------------------------------------------------------------------


def test_projection_of_pair():
    assert phase2(phase1(parse_term("fst (v, w)"))) == Var("v")


def test_projection_commutes_into_conditional():
    t = parse_term("fst (if c then (a, b) else (a2, b2))")
    nf, _ = normalize(t)
    assert alpha_eq(nf, parse_term("if c then a else a2"))
    # both branches agree with the original under the interpreter
    wrap = lambda body: Lam("c", Lam("a", Lam("b", Lam("a2", Lam("b2", body)))))
    for c in (True, False):
        args = [c, 1, 2, 3, 4]
        assert interp(wrap(t), args) == interp(wrap(nf), args)


@pytest.mark.parametrize("source, expect", [
    ("let x = a + b in x * 2", "(a + b) * 2"),
    ("let x = a + b in let y = x < c in if y then 1 else 2", "if a + b < c then 1 else 2"),
    ("let x = a + b in let y = c + d in y * x", "let x = a + b in (c + d) * x"),
    ("let x = a + b in f x", "let x = a + b in f x"),
    ("let x = a + b in (x, 1)", "let x = a + b in (x, 1)"),
    ("let x = a + b in x * x", "let x = a + b in x * x"),
    ("let x = a + b in if c then x else 0", "let x = a + b in if c then x else 0"),
    ("let x = while p q z in x + 1", "let x = while p q z in x + 1"),
])
def test_single_use_expression_written_in_place(source, expect):
    assert alpha_eq(phase2(phase1(parse_term(source))), parse_term(expect))


def test_power_phase2_normal_form():
    p = load_corpus("power")
    out = pipeline.dump_phase(p, 2)
    # shared products stay named, single-use ones are written in place
    expect = parse_term(
        "\\u -> if u == 0.0 then 0.0 else let v = u * 1.0 in let w = u * (v * v) in "
        "1.0 / (w * w)")
    assert alpha_eq(out, expect)
    assert redexes(out) == []


def test_phase2_output_has_no_redexes_on_corpus():
    for name in CORPUS:
        assert redexes(pipeline.dump_phase(load_corpus(name), 2)) == [], name


# phase 3 ---------------------------------------------------------------------------


def test_phase3_removes_dead_let():
    assert phase3(parse_term("let x = a + b in 1")) == Lit("Int", 1)


def test_phase3_keeps_used_let():
    t = parse_term("let x = a + b in x")
    assert phase3(t) == t


def test_power2_matches_power():
    a, _ = pipeline.normal_form(load_corpus("power"))
    b, _ = pipeline.normal_form(load_corpus("power2"))
    assert alpha_eq(a, b)


# strategies ------------------------------------------------------------------------


def test_value_keeps_dead_let_need_removes_it():
    t = parse_term("\\a -> let x = a + 1 in 1")
    need, _ = normalize(t, Strategy.NEED)
    value, _ = normalize(t, Strategy.VALUE)
    assert alpha_eq(need, parse_term("\\a -> 1"))
    assert alpha_eq(value, t)


def test_value_skips_phase3():
    assert [p for p, _, _ in phases(parse_term("x"), "value")] == [0, 1, 2]


def test_identity_already_normal():
    t = Lam("x", Var("x"))
    assert normalize(t)[0] == t


# fuel ------------------------------------------------------------------------------


def test_fuel_exhaustion_is_reported():
    omega = parse_term("(\\x -> x x) (\\x -> x x)")
    with pytest.raises(NormFuelExhausted):
        normalize(omega, fuel=100)


def test_corpus_within_budget():
    for name in CORPUS:
        _, stats = pipeline.normal_form(load_corpus(name), fuel=10**6)
        assert stats.total <= 10**6


@pytest.mark.parametrize("strategy", list(Strategy))
@pytest.mark.parametrize("name", CORPUS)
def test_corpus_normal_form_is_idempotent(name, strategy):
    nf, _ = pipeline.normal_form(load_corpus(name), strategy)
    assert alpha_eq(normalize(nf, strategy)[0], nf)


def test_collection_exposes_operand_for_inlining():
    # dropping the dead s leaves i as the lone operand of the comparison
    t = parse_term("\\p -> \\n -> let i = fst p in let s = snd p in i < n")
    nf, _ = normalize(t, Strategy.NEED)
    assert alpha_eq(nf, parse_term("\\p -> \\n -> fst p < n"))


# the fused norm pipeline -----------------------------------------------------------


# the loop the pipeline should fuse into, written out by hand
NORM_LOOP = ("\\a -> sqrt (snd (while (\\s -> fst s < lnArr a) "
             "(\\s -> let i = fst s in (i + 1, snd s + ixArr a i * ixArr a i)) (0, 0.0)))")


def test_norm_fuses_to_single_loop():
    p = load_corpus("norm")
    nf, _ = pipeline.normal_form(p)
    tt = infer(nf)
    whiles = [path for path, s in subterms(tt.term)
              if isinstance(s, ConstApp) and s.name == "while"]
    assert len(whiles) == 1
    assert tt.types[whiles[0]] == Prod(INT, FLOAT)
    # no vectors survive: every subterm is representable or a lambda over the state
    for path, ty in tt.types.items():
        if not is_representable(ty):
            assert isinstance(ty, Fun) and is_representable(ty.dom), (path, ty)


def test_norm_agrees_with_hand_fused_loop():
    p = load_corpus("norm")
    nf, _ = pipeline.normal_form(p)
    ref = parse_term(NORM_LOOP)
    for args in sample_args(p.top_type, 50):
        assert values_close(interp(nf, args), interp(ref, args))


# properties over generated programs -----------------------------------------------


@PROPERTY_SETTINGS
@given(programs())
def test_normalize_is_idempotent(prog):
    t, _ = prog
    nf, _ = normalize(t)
    assert alpha_eq(normalize(nf)[0], nf)


@PROPERTY_SETTINGS
@given(programs())
def test_normalize_preserves_type(prog):
    t, ty = prog
    nf, _ = normalize(t)
    assert infer(nf, expected=ty).top_type == ty
    value, _ = normalize(t, Strategy.VALUE)
    assert infer(value, expected=ty).top_type == ty


@PROPERTY_SETTINGS
@given(programs())
def test_phase2_leaves_no_redex(prog):
    t, _ = prog
    assert redexes(normalize_to(t, 2)) == []


@PROPERTY_SETTINGS
@given(programs())
def test_normal_forms_have_subformula_property(prog):
    t, ty = prog
    nf, _ = normalize(t)
    assert check_subformula(infer(nf, expected=ty)).ok


@PROPERTY_SETTINGS
@given(programs())
def test_rank_one_entries_normalise_first_order(prog):
    t, ty = prog
    nf, _ = normalize(t)
    assert check_first_order(infer(nf, expected=ty)).ok


@PROPERTY_SETTINGS
@given(programs())
def test_normalize_preserves_meaning(prog):
    t, ty = prog
    for strategy in ("need", "value"):
        nf, _ = normalize(t, strategy)
        assert oracle_compare(t, nf, 10, top_type=ty, strategy=strategy).ok


def test_let_bound_conditional_breaks_sharpened_property():
    # a conditional whose continuation does not eliminate it stays let-bound;
    # Int is not a proper subformula of Float -> Float
    t = parse_term("\\a -> let m = if a < 1.0 then 1 else 2 in if m < 3 then a else 2.0")
    nf, _ = normalize(t)
    assert alpha_eq(nf, t)
    report = check_sharpened(infer(nf, expected=Fun(FLOAT, FLOAT)))
    assert not report.ok
    assert [w.path for w in report.witnesses] == [(0, 0)]
