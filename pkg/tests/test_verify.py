from __future__ import annotations

import pytest

from conftest import load_corpus
from qfc import pipeline
from qfc.errors import DivByZeroInt, EvalFuelExhausted, IxOutOfBounds
from qfc.interp import ArrVal, interp, values_close, wrap32
from qfc.parser import parse_term
from qfc.terms import FLOAT, INT, ConstApp, Fun, Lam, Lit, Var, subterms
from qfc.typecheck import infer
from qfc.verify import (
    ORACLE_SEED, check_first_order, check_sharpened, check_subformula, oracle_compare,
    sample_args,
)


def nf_of(name: str):
    p = load_corpus(name)
    nf, _ = pipeline.normal_form(p)
    return p, nf


# subformula ----------------------------------------------------------------------


def test_power_normal_form_subformula():
    _, nf = nf_of("power")
    tt = infer(nf)
    assert check_subformula(tt).ok
    assert set(tt.types.values()) <= {FLOAT, Fun(FLOAT, FLOAT), pipeline.Base("Bool")}


def test_unnormalised_power_verdict_is_recorded():
    # no claim either way before normalisation; the checker must simply run
    p = load_corpus("power")
    assert check_subformula(infer(p.term)).name == "subformula"


def test_free_variable_in_environment():
    assert check_subformula(infer(Var("x"), env={"x": INT})).ok


def test_subformula_violation_is_witnessed():
    # an unreduced beta redex: Int -> Int is not a subformula of Int
    t = parse_term("(\\x -> x + 1) 2")
    report = check_subformula(infer(t))
    assert not report.ok
    assert report.witnesses[0].type == Fun(INT, INT)


# sharpened -------------------------------------------------------------------------


def test_power_sharpened():
    _, nf = nf_of("power")
    tt = infer(nf)
    assert check_sharpened(tt).ok
    inside = set()
    for path, s in subterms(tt.term):
        if isinstance(s, ConstApp):
            inside |= {q for q, _ in subterms(s, path)}
    proper = {path: ty for path, ty in tt.types.items() if path and path not in inside}
    assert set(proper.values()) == {FLOAT}


def test_identity_sharpened():
    tt = infer(Lam("x", Var("x")), expected=Fun(FLOAT, FLOAT))
    assert check_sharpened(tt).ok


def test_fib_sharpened():
    _, nf = nf_of("fib")
    assert check_sharpened(infer(nf)).ok


def test_norm_while_arguments_have_signature_types():
    _, nf = nf_of("norm")
    tt = infer(nf)
    s = pipeline.Prod(INT, FLOAT)
    for path, t in subterms(tt.term):
        if isinstance(t, ConstApp) and t.name == "while":
            assert tt.types[path + (0,)] == Fun(s, pipeline.Base("Bool"))
            assert tt.types[path + (1,)] == Fun(s, s)
            assert tt.types[path + (2,)] == s


# first-order -------------------------------------------------------------------------


def test_norm_first_order():
    _, nf = nf_of("norm")
    assert check_first_order(infer(nf)).ok


def test_higher_order_entry_not_first_order():
    t = parse_term("\\f -> f 1.0")
    report = check_first_order(infer(t, expected=Fun(Fun(FLOAT, FLOAT), FLOAT)))
    assert not report.ok
    assert any(w.type == Fun(FLOAT, FLOAT) for w in report.witnesses)


def test_literal_first_order():
    assert check_first_order(infer(Lit("Int", 3))).ok


# interpreter ---------------------------------------------------------------------


def test_power_at_two():
    _, nf = nf_of("power")
    # the normal form by hand: v = 2*1, w = 2*(v*v), result 1/(w*w)
    v = 2.0 * 1.0
    w = 2.0 * (v * v)
    assert interp(nf, [2.0]) == 1.0 / (w * w)
    assert interp(nf, [2.0]) == 2.0 ** -6


def test_power_at_zero():
    _, nf = nf_of("power")
    assert interp(nf, [0.0]) == 0.0


def _fib(n: int) -> int:
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


@pytest.mark.parametrize("n", [0, 1, 2, 10, 20])
def test_fib(n):
    p, nf = nf_of("fib")
    assert interp(nf, [n]) == _fib(n)
    assert interp(p.term, [n]) == _fib(n)


def test_int_arithmetic_wraps():
    t = parse_term("\\x -> x * 65536")
    assert interp(t, [65536]) == 0
    assert wrap32(2**31) == -(2**31)


def test_division_semantics():
    t = parse_term("\\a b -> (div a b, mod a b)")
    assert interp(t, [-7, 2]) == (-3, -1)
    with pytest.raises(DivByZeroInt):
        interp(t, [1, 0])


def test_index_out_of_bounds():
    t = parse_term("\\a -> ixArr a 3")
    with pytest.raises(IxOutOfBounds):
        interp(t, [ArrVal((1.0, 2.0))])


def test_interp_fuel():
    t = parse_term("\\n -> while (\\i -> True) (\\i -> i + 1) n")
    with pytest.raises(EvalFuelExhausted):
        interp(t, [0], fuel=1000)


def test_call_by_need_skips_unused_error():
    t = parse_term("\\a -> let x = div a 0 in 1")
    assert interp(t, [1], strategy="need") == 1
    with pytest.raises(DivByZeroInt):
        interp(t, [1], strategy="value")


def test_values_close():
    assert values_close(1.0, 1.0 + 1e-9)
    assert not values_close(1.0, 1.1)
    assert values_close((1, True), (1, True))
    assert not values_close(1, 2)


# oracle --------------------------------------------------------------------------


def test_oracle_power():
    p, nf = nf_of("power")
    assert oracle_compare(p.term, nf, 100, top_type=p.top_type).ok


def test_oracle_power_against_power2():
    p, a = nf_of("power")
    q, _ = nf_of("power2")
    assert oracle_compare(a, q.term, 100, top_type=p.top_type).ok


def test_oracle_reflexive():
    p, _ = nf_of("dot")
    assert oracle_compare(p.term, p.term, 20, top_type=p.top_type).ok


def test_oracle_detects_difference():
    a = parse_term("\\x -> x + 1")
    b = parse_term("\\x -> x + 2")
    assert not oracle_compare(a, b, 5, top_type=Fun(INT, INT)).ok


def test_samples_are_seeded():
    ty = Fun(pipeline.Array(FLOAT), FLOAT)
    assert sample_args(ty, 5, ORACLE_SEED) == sample_args(ty, 5, ORACLE_SEED)
    assert sample_args(ty, 5, 1) != sample_args(ty, 5, 2)
