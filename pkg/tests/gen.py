"""Hypothesis strategies for closed, well-typed object terms."""

from __future__ import annotations

from hypothesis import strategies as st

from qfc.terms import (
    BOOL, FLOAT, INT, App, Base, Case, ConstApp, Fst, Fun, If, Inl, Inr, Lam, Let, Lit,
    ObjTerm, ObjType, Pair, Prod, Snd, Sum, UnitTerm, Var,
)

NAMES = ("x", "y", "z", "w")
SCALARS = (INT, FLOAT)


def small_types(depth: int = 2) -> st.SearchStrategy[ObjType]:
    base = st.sampled_from((INT, FLOAT, BOOL))
    if depth == 0:
        return base
    sub = small_types(depth - 1)
    return st.one_of(
        base,
        st.builds(Prod, sub, sub),
        st.builds(Fun, sub, sub),
        st.builds(Sum, sub, sub),
    )


def literal(draw, ty: Base) -> ObjTerm:
    match ty.kind:
        case "Int":
            return Lit("Int", draw(st.integers(-20, 20)))
        case "Float":
            return Lit("Float", draw(st.sampled_from((0.0, 0.5, 1.0, 1.5, 2.0, -1.0, 3.25))))
        case "Bool":
            return Lit("Bool", draw(st.booleans()))
    return UnitTerm()


def _minimal(draw, ty: ObjType, env: dict[str, ObjType]) -> ObjTerm:
    candidates = [x for x, t in env.items() if t == ty]
    if candidates and draw(st.booleans()):
        return Var(draw(st.sampled_from(candidates)))
    match ty:
        case Base():
            return literal(draw, ty)
        case Prod(a, b):
            return Pair(_minimal(draw, a, env), _minimal(draw, b, env))
        case Fun(a, b):
            x = draw(st.sampled_from(NAMES))
            return Lam(x, _minimal(draw, b, {**env, x: a}))
        case Sum(a, b):
            if draw(st.booleans()):
                return Inl(_minimal(draw, a, env), ty)
            return Inr(_minimal(draw, b, env), ty)
    raise ValueError(ty)


def term_of(draw, ty: ObjType, env: dict[str, ObjType], depth: int) -> ObjTerm:
    """A term of type ``ty`` under ``env``."""
    if depth <= 0:
        return _minimal(draw, ty, env)
    d = depth - 1
    options = ["minimal", "let", "if", "app", "fst", "snd", "case"]
    match ty:
        case Base("Int") | Base("Float"):
            options += ["arith"] * 3
        case Base("Bool"):
            options += ["compare"] * 2
        case Prod():
            options += ["pair"] * 2
        case Fun():
            options += ["lam"] * 2
        case Sum():
            options += ["inj"] * 2
    match draw(st.sampled_from(options)):
        case "minimal":
            return _minimal(draw, ty, env)
        case "arith":
            op = draw(st.sampled_from(("+", "-", "*")))
            return ConstApp(op, (term_of(draw, ty, env, d), term_of(draw, ty, env, d)))
        case "compare":
            op = draw(st.sampled_from(("<", "==")))
            s = draw(st.sampled_from(SCALARS))
            return ConstApp(op, (term_of(draw, s, env, d), term_of(draw, s, env, d)))
        case "pair":
            return Pair(term_of(draw, ty.left, env, d), term_of(draw, ty.right, env, d))
        case "lam":
            x = draw(st.sampled_from(NAMES))
            return Lam(x, term_of(draw, ty.cod, {**env, x: ty.dom}, d))
        case "inj":
            if draw(st.booleans()):
                return Inl(term_of(draw, ty.left, env, d), ty)
            return Inr(term_of(draw, ty.right, env, d), ty)
        case "let":
            a = draw(small_types(1))
            x = draw(st.sampled_from(NAMES))
            return Let(x, term_of(draw, a, env, d), term_of(draw, ty, {**env, x: a}, d))
        case "if":
            return If(term_of(draw, BOOL, env, d), term_of(draw, ty, env, d),
                      term_of(draw, ty, env, d))
        case "app":
            a = draw(small_types(1))
            return App(term_of(draw, Fun(a, ty), env, d), term_of(draw, a, env, d))
        case "fst":
            b = draw(small_types(1))
            return Fst(term_of(draw, Prod(ty, b), env, d))
        case "snd":
            a = draw(small_types(1))
            return Snd(term_of(draw, Prod(a, ty), env, d))
        case "case":
            a, b = draw(small_types(1)), draw(small_types(1))
            x, y = draw(st.sampled_from(NAMES)), draw(st.sampled_from(NAMES))
            return Case(term_of(draw, Sum(a, b), env, d),
                        x, term_of(draw, ty, {**env, x: a}, d),
                        y, term_of(draw, ty, {**env, y: b}, d))
    raise AssertionError


ENTRY_TYPES = (
    Fun(FLOAT, FLOAT),
    Fun(INT, INT),
    Fun(INT, Fun(FLOAT, FLOAT)),
    Fun(FLOAT, Prod(FLOAT, BOOL)),
    Fun(Prod(INT, INT), INT),
)


@st.composite
def programs(draw, depth: int = 4) -> tuple[ObjTerm, ObjType]:
    """A closed entry ``\\x1 .. xn -> M`` whose type is one of
    :data:`ENTRY_TYPES`; the body ``M`` has representable type."""
    ty = draw(st.sampled_from(ENTRY_TYPES))
    env: dict[str, ObjType] = {}
    params = []
    res = ty
    while isinstance(res, Fun):
        x = f"a{len(params)}"
        params.append(x)
        env[x] = res.dom
        res = res.cod
    body = term_of(draw, res, env, depth)
    for x in reversed(params):
        body = Lam(x, body)
    return body, ty


@st.composite
def terms(draw, ty: ObjType, env: dict[str, ObjType], depth: int = 3) -> ObjTerm:
    return term_of(draw, ty, env, depth)
