"""Type reconstruction for closed object terms.

First-order unification over the object types, with two twists: type
variables introduced for numeric literals and arithmetic constants range
only over Int and Float, and constants such as ``while`` check that their
instance is representable. Unconstrained numeric variables default to Int;
any other leftover variable defaults to Unit (it types dead code only).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import (
    AmbiguousOverload, BadEntryType, TypeMismatch, UnrepresentableInstance,
)
from .terms import (
    App, Array, BOOL, Base, CONSTANTS, Case, Const, ConstApp, FLOAT, Fst, Fun, INT,
    If, Inl, Inr, Lam, Let, Lit, ObjTerm, ObjType, Pair, Prod, Snd, Splice, Sum,
    TVar, UNIT, UnitTerm, Var, children, is_representable, pretty, rebuild,
    show_type, type_parts,
)

Path = tuple[int, ...]


@dataclass(frozen=True)
class TypedTerm:
    """A term together with the type of every subterm occurrence.

    ``types`` is keyed by child-index paths (see :func:`qfc.terms.subterms`).
    """

    term: ObjTerm
    types: Mapping[Path, ObjType]
    top_type: ObjType
    env: tuple[tuple[str, ObjType], ...] = ()

    def type_at(self, path: Path) -> ObjType:
        return self.types[path]


@dataclass(frozen=True)
class Violation:
    name: str
    path: Path
    message: str


def _short(t: ObjTerm, limit: int = 60) -> str:
    s = pretty(t)
    return s if len(s) <= limit else s[:limit - 3] + "..."


class _Inference:
    def __init__(self, default_numeric: bool) -> None:
        self.subst: dict[str, ObjType] = {}
        self.numeric: set[str] = set()
        self.rep_checks: list[tuple[str, Path, ObjType]] = []
        self.types: dict[Path, ObjType] = {}
        self.default_numeric = default_numeric
        self._ids = itertools.count(1)

    def fresh(self, numeric: bool = False) -> TVar:
        v = TVar(f"%{next(self._ids)}")
        if numeric:
            self.numeric.add(v.name)
        return v

    # substitution -------------------------------------------------------------

    def resolve(self, ty: ObjType) -> ObjType:
        while isinstance(ty, TVar) and ty.name in self.subst:
            ty = self.subst[ty.name]
        return ty

    def zonk(self, ty: ObjType) -> ObjType:
        ty = self.resolve(ty)
        match ty:
            case Fun(a, b):
                return Fun(self.zonk(a), self.zonk(b))
            case Prod(a, b):
                return Prod(self.zonk(a), self.zonk(b))
            case Sum(a, b):
                return Sum(self.zonk(a), self.zonk(b))
            case Array(a):
                return Array(self.zonk(a))
        return ty

    def occurs(self, name: str, ty: ObjType) -> bool:
        ty = self.resolve(ty)
        if isinstance(ty, TVar):
            return ty.name == name
        return any(self.occurs(name, p) for p in type_parts(ty))

    def unify(self, expected: ObjType, found: ObjType, where: ObjTerm) -> None:
        a, b = self.resolve(expected), self.resolve(found)
        if a == b:
            return
        if isinstance(a, TVar):
            self.bind(a, b, where, expected, found)
            return
        if isinstance(b, TVar):
            self.bind(b, a, where, expected, found)
            return
        if type(a) is type(b) and not isinstance(a, Base):
            for pa, pb in zip(type_parts(a), type_parts(b)):
                self.unify(pa, pb, where)
            return
        self.mismatch(expected, found, where)

    def bind(self, v: TVar, ty: ObjType, where: ObjTerm, expected: ObjType,
             found: ObjType) -> None:
        if self.occurs(v.name, ty):
            self.mismatch(expected, found, where, "infinite type")
        if v.name in self.numeric:
            if isinstance(ty, TVar):
                self.numeric.add(ty.name)
            elif ty not in (INT, FLOAT):
                raise TypeMismatch(
                    f"arithmetic is only defined at Int and Float, not {show_type(self.zonk(ty))}"
                    f" (in {_short(where)})")
        self.subst[v.name] = ty

    def mismatch(self, expected: ObjType, found: ObjType, where: ObjTerm,
                 why: str = "") -> None:
        extra = f" ({why})" if why else ""
        raise TypeMismatch(
            f"expected {show_type(self.zonk(expected))}, found {show_type(self.zonk(found))}"
            f"{extra} in {_short(where)}")

    # constants ----------------------------------------------------------------

    def instantiate(self, name: str, path: Path) -> tuple[list[ObjType], ObjType]:
        sig = CONSTANTS[name]
        mapping: dict[str, TVar] = {}

        def inst(ty: ObjType) -> ObjType:
            match ty:
                case TVar(v):
                    if v not in mapping:
                        mapping[v] = self.fresh(numeric=v in sig.num_vars)
                        if v in sig.rep_vars:
                            self.rep_checks.append((name, path, mapping[v]))
                    return mapping[v]
                case Fun(a, b):
                    return Fun(inst(a), inst(b))
                case Prod(a, b):
                    return Prod(inst(a), inst(b))
                case Sum(a, b):
                    return Sum(inst(a), inst(b))
                case Array(a):
                    return Array(inst(a))
            return ty

        return [inst(a) for a in sig.arg_types], inst(sig.result_type)

    # terms --------------------------------------------------------------------

    def infer(self, t: ObjTerm, env: dict[str, ObjType], path: Path) -> ObjType:
        ty = self._infer(t, env, path)
        self.types[path] = ty
        return ty

    def _infer(self, t: ObjTerm, env: dict[str, ObjType], path: Path) -> ObjType:
        match t:
            case Var(x):
                if x not in env:
                    raise TypeMismatch(f"unbound object variable {x!r}")
                return env[x]
            case Lit("Int", _):
                return self.fresh(numeric=True)
            case Lit("Float", _):
                return FLOAT
            case Lit("Bool", _):
                return BOOL
            case UnitTerm():
                return UNIT
            case Const(name):
                params, result = self.instantiate(name, path)
                out = result
                for p in reversed(params):
                    out = Fun(p, out)
                return out
            case ConstApp(name, args):
                params, result = self.instantiate(name, path)
                for i, (p, a) in enumerate(zip(params, args)):
                    self.unify(p, self.infer(a, env, path + (i,)), a)
                return result
            case Lam(x, body):
                a = self.fresh()
                return Fun(a, self.infer(body, {**env, x: a}, path + (0,)))
            case App(f, a):
                tf = self.infer(f, env, path + (0,))
                ta = self.infer(a, env, path + (1,))
                r = self.fresh()
                self.unify(tf, Fun(ta, r), t)
                return r
            case Let(x, m, n):
                tm = self.infer(m, env, path + (0,))
                return self.infer(n, {**env, x: tm}, path + (1,))
            case Pair(a, b):
                return Prod(self.infer(a, env, path + (0,)), self.infer(b, env, path + (1,)))
            case Fst(a) | Snd(a):
                l, r = self.fresh(), self.fresh()
                self.unify(Prod(l, r), self.infer(a, env, path + (0,)), t)
                return l if isinstance(t, Fst) else r
            case Inl(a, annot) | Inr(a, annot):
                ta = self.infer(a, env, path + (0,))
                other = self.fresh()
                ty = Sum(ta, other) if isinstance(t, Inl) else Sum(other, ta)
                if annot is not None:
                    self.unify(annot, ty, t)
                return ty
            case Case(s, x, l, y, r):
                lt, rt = self.fresh(), self.fresh()
                self.unify(Sum(lt, rt), self.infer(s, env, path + (0,)), t)
                out = self.infer(l, {**env, x: lt}, path + (1,))
                self.unify(out, self.infer(r, {**env, y: rt}, path + (2,)), t)
                return out
            case If(c, a, b):
                self.unify(BOOL, self.infer(c, env, path + (0,)), c)
                out = self.infer(a, env, path + (1,))
                self.unify(out, self.infer(b, env, path + (2,)), t)
                return out
            case Splice():
                raise TypeMismatch("unexpanded splice in object term")
        raise TypeMismatch(f"not an object term: {t!r}")

    # finishing ----------------------------------------------------------------

    def default(self) -> None:
        for name in sorted(self.numeric):
            ty = self.resolve(TVar(name))
            if isinstance(ty, TVar):
                if not self.default_numeric:
                    raise AmbiguousOverload(
                        "cannot decide between Int and Float for a numeric literal or operator")
                self.subst[ty.name] = INT

    def final(self, ty: ObjType) -> ObjType:
        ty = self.zonk(ty)
        match ty:
            case TVar():
                return UNIT
            case Fun(a, b):
                return Fun(self.final(a), self.final(b))
            case Prod(a, b):
                return Prod(self.final(a), self.final(b))
            case Sum(a, b):
                return Sum(self.final(a), self.final(b))
            case Array(a):
                return Array(self.final(a))
        return ty


def infer(t: ObjTerm, env: Optional[Mapping[str, ObjType]] = None,
          expected: Optional[ObjType] = None, default_numeric: bool = True) -> TypedTerm:
    """Annotate every subterm of ``t``; literals are elaborated to their resolved kind."""
    st = _Inference(default_numeric)
    env = dict(env or {})
    top = st.infer(t, env, ())
    if expected is not None:
        st.unify(expected, top, t)
    st.default()
    for name, path, ty in st.rep_checks:
        final = st.final(ty)
        if not is_representable(final):
            raise UnrepresentableInstance(
                f"{name} used at non-representable type {show_type(final)}"
                f" (in {_short(at(t, path))})")
    types = {p: st.final(ty) for p, ty in st.types.items()}
    term = _elaborate(t, types, ())
    return TypedTerm(term, types, types[()], tuple((k, st.final(v)) for k, v in env.items()))


def at(t: ObjTerm, path: Path) -> ObjTerm:
    for i in path:
        t = children(t)[i]
    return t


def _elaborate(t: ObjTerm, types: Mapping[Path, ObjType], path: Path) -> ObjTerm:
    match t:
        case Lit("Int", n) if types[path] == FLOAT:
            return Lit("Float", float(n))
        case Inl(a):
            return Inl(_elaborate(a, types, path + (0,)), types[path])
        case Inr(a):
            return Inr(_elaborate(a, types, path + (0,)), types[path])
    kids = children(t)
    if not kids:
        return t
    new = tuple(_elaborate(c, types, path + (i,)) for i, c in enumerate(kids))
    return rebuild(t, new)


def check_entry_type(ty: ObjType) -> None:
    """Entry points must have shape ``A1 -> ... -> An -> B`` with representable parts."""
    parts = []
    while isinstance(ty, Fun):
        parts.append(ty.dom)
        ty = ty.cod
    parts.append(ty)
    bad = [p for p in parts if not is_representable(p)]
    if bad:
        raise BadEntryType(
            f"entry type must take and return representable types; "
            f"{show_type(bad[0])} is not representable")


def entry_arity(ty: ObjType) -> int:
    n = 0
    while isinstance(ty, Fun):
        n += 1
        ty = ty.cod
    return n


def check_permitted(tt: TypedTerm | ObjTerm) -> list[Violation]:
    """Constants that may not appear in generated C."""
    term = tt.term if isinstance(tt, TypedTerm) else tt
    out: list[Violation] = []

    def go(t: ObjTerm, path: Path) -> None:
        match t:
            case ConstApp(name, _) | Const(name) if not CONSTANTS[name].c_permitted:
                out.append(Violation(name, path, f"constant {name} is not permitted in C output"))
        for i, c in enumerate(children(t)):
            go(c, path + (i,))

    go(term, ())
    return out
