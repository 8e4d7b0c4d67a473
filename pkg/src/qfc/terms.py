"""Object-language types and terms.

Terms are immutable frozen dataclasses compared structurally; use
:func:`alpha_eq` to compare up to renaming of bound variables.
"""

from __future__ import annotations

import contextlib
import contextvars
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Optional, Union


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Base:
    kind: str  # "Bool" | "Int" | "Float" | "Unit"

    def __post_init__(self) -> None:
        if self.kind not in ("Bool", "Int", "Float", "Unit"):
            raise ValueError(f"unknown base type {self.kind!r}")

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class Fun:
    dom: "ObjType"
    cod: "ObjType"

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class Prod:
    left: "ObjType"
    right: "ObjType"

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class Sum:
    left: "ObjType"
    right: "ObjType"

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class Array:
    elem: "ObjType"

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class TVar:
    """Unification variable; only appears during type inference."""

    name: str

    def __str__(self) -> str:
        return show_type(self)


ObjType = Union[Base, Fun, Prod, Sum, Array, TVar]

BOOL = Base("Bool")
INT = Base("Int")
FLOAT = Base("Float")
UNIT = Base("Unit")


def maybe_type(a: ObjType) -> Sum:
    return Sum(UNIT, a)


def vec_type(a: ObjType) -> Prod:
    return Prod(INT, Fun(INT, a))


def fun_type(*tys: ObjType) -> ObjType:
    """Right-nested function type ``t1 -> t2 -> ... -> tn``."""
    result = tys[-1]
    for t in reversed(tys[:-1]):
        result = Fun(t, result)
    return result


def show_type(ty: ObjType, prec: int = 0) -> str:
    match ty:
        case Base(kind):
            return "()" if kind == "Unit" else kind
        case TVar(name):
            return f"?{name}"
        case Fun(dom, cod):
            s = f"{show_type(dom, 1)} -> {show_type(cod, 0)}"
            return f"({s})" if prec > 0 else s
        case Prod(left, right):
            return f"({show_type(left)}, {show_type(right)})"
        case Sum(left, right):
            if left == UNIT:
                s = f"Maybe {show_type(right, 2)}"
            else:
                s = f"Either {show_type(left, 2)} {show_type(right, 2)}"
            return f"({s})" if prec > 1 else s
        case Array(elem):
            s = f"Arr {show_type(elem, 2)}"
            return f"({s})" if prec > 1 else s
    raise TypeError(f"not a type: {ty!r}")


def is_representable(ty: ObjType) -> bool:
    match ty:
        case Base():
            return True
        case Prod(left, right):
            return is_representable(left) and is_representable(right)
        case Array(elem):
            return is_representable(elem)
    return False


def type_parts(ty: ObjType) -> tuple[ObjType, ...]:
    match ty:
        case Fun(a, b) | Prod(a, b) | Sum(a, b):
            return (a, b)
        case Array(elem):
            return (elem,)
    return ()


def subformulas(ty: ObjType) -> frozenset[ObjType]:
    out = {ty}
    for part in type_parts(ty):
        out |= subformulas(part)
    return frozenset(out)


def proper_subformulas(ty: ObjType) -> frozenset[ObjType]:
    return subformulas(ty) - {ty}


def rank(ty: ObjType) -> int:
    # max(m+1, n): the min() reading gives while rank 0, contradicting rank 2
    if is_representable(ty):
        return 0
    match ty:
        case Fun(dom, cod):
            return max(rank(dom) + 1, rank(cod))
        case Prod(a, b) | Sum(a, b):
            return max(rank(a), rank(b))
        case Array(elem):
            return rank(elem)
    return 0


def type_vars(ty: ObjType) -> set[str]:
    if isinstance(ty, TVar):
        return {ty.name}
    out: set[str] = set()
    for part in type_parts(ty):
        out |= type_vars(part)
    return out


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstSig:
    """Signature ``c : A1 -> ... -> Ak -> B``.

    Type variables named in ``num_vars`` range over Int and Float (fixed-menu
    overloading); those in ``rep_vars`` must be instantiated at representable
    types.
    """

    name: str
    arity: int
    arg_types: tuple[ObjType, ...]
    result_type: ObjType
    rep_vars: frozenset[str] = frozenset()
    num_vars: frozenset[str] = frozenset()
    c_permitted: bool = True

    @property
    def type(self) -> ObjType:
        return fun_type(*self.arg_types, self.result_type)

    def instance_subformulas(self, arg_types: tuple[ObjType, ...],
                             result_type: ObjType) -> frozenset[ObjType]:
        # itself, each A_i and B (with their parts), never the partial spines
        out = {fun_type(*arg_types, result_type)} if arg_types else set()
        for t in (*arg_types, result_type):
            out |= subformulas(t)
        return frozenset(out)


_a, _s, _n = TVar("a"), TVar("s"), TVar("n")


def _arith(name: str) -> ConstSig:
    return ConstSig(name, 2, (_n, _n), _n, num_vars=frozenset({"n"}))


def _compare(name: str) -> ConstSig:
    return ConstSig(name, 2, (_n, _n), BOOL, num_vars=frozenset({"n"}))


CONSTANTS: dict[str, ConstSig] = {
    sig.name: sig
    for sig in [
        _arith("+"),
        _arith("-"),
        _arith("*"),
        _arith("/"),
        _compare("=="),
        _compare("<"),
        ConstSig("sqrt", 1, (FLOAT,), FLOAT),
        ConstSig("div", 2, (INT, INT), INT),
        ConstSig("mod", 2, (INT, INT), INT),
        ConstSig("while", 3, (Fun(_s, BOOL), Fun(_s, _s), _s), _s,
                 rep_vars=frozenset({"s"})),
        ConstSig("mkArr", 2, (INT, Fun(INT, _a)), Array(_a),
                 rep_vars=frozenset({"a"})),
        ConstSig("lnArr", 1, (Array(_a),), INT, rep_vars=frozenset({"a"})),
        ConstSig("ixArr", 2, (Array(_a), INT), _a, rep_vars=frozenset({"a"})),
        ConstSig("save", 1, (_a,), _a, rep_vars=frozenset({"a"})),
        ConstSig("fix", 1, (Fun(_a, _a),), _a, c_permitted=False),
    ]
}

INFIX_OPS = ("==", "<", "+", "-", "*", "/")


def const_sig(name: str) -> ConstSig:
    return CONSTANTS[name]


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lit:
    kind: str  # "Int" | "Float" | "Bool"
    value: Any


@dataclass(frozen=True)
class UnitTerm:
    pass


@dataclass(frozen=True)
class ConstApp:
    name: str
    args: tuple["ObjTerm", ...]

    def __post_init__(self) -> None:
        sig = CONSTANTS.get(self.name)
        if sig is None:
            raise ValueError(f"unknown constant {self.name!r}")
        if len(self.args) != sig.arity:
            raise ValueError(
                f"constant {self.name} has arity {sig.arity}, got {len(self.args)} args")

    @property
    def sig(self) -> ConstSig:
        return CONSTANTS[self.name]


@dataclass(frozen=True)
class Const:
    """Bare (possibly under-applied) constant; removed by preprocessing."""

    name: str


@dataclass(frozen=True)
class Lam:
    binder: str
    body: "ObjTerm"


@dataclass(frozen=True)
class App:
    fun: "ObjTerm"
    arg: "ObjTerm"


@dataclass(frozen=True)
class Let:
    binder: str
    bound: "ObjTerm"
    body: "ObjTerm"


@dataclass(frozen=True)
class Pair:
    fst: "ObjTerm"
    snd: "ObjTerm"


@dataclass(frozen=True)
class Fst:
    arg: "ObjTerm"


@dataclass(frozen=True)
class Snd:
    arg: "ObjTerm"


@dataclass(frozen=True)
class Inl:
    arg: "ObjTerm"
    annot: Optional[ObjType] = field(default=None, compare=False)


@dataclass(frozen=True)
class Inr:
    arg: "ObjTerm"
    annot: Optional[ObjType] = field(default=None, compare=False)


@dataclass(frozen=True)
class Case:
    scrut: "ObjTerm"
    lbinder: str
    lbody: "ObjTerm"
    rbinder: str
    rbody: "ObjTerm"


@dataclass(frozen=True)
class If:
    cond: "ObjTerm"
    then: "ObjTerm"
    orelse: "ObjTerm"


@dataclass(frozen=True)
class Splice:
    """Generation-stage escape inside a quotation; removed by stage 0."""

    expr: Any


ObjTerm = Union[Var, Lit, UnitTerm, ConstApp, Const, Lam, App, Let, Pair, Fst,
                Snd, Inl, Inr, Case, If, Splice]

TRUE = Lit("Bool", True)
FALSE = Lit("Bool", False)


def int_lit(n: int) -> Lit:
    return Lit("Int", n)


def float_lit(x: float) -> Lit:
    return Lit("Float", float(x))


def lams(binders: list[str], body: ObjTerm) -> ObjTerm:
    for b in reversed(binders):
        body = Lam(b, body)
    return body


def apps(fun: ObjTerm, *args: ObjTerm) -> ObjTerm:
    for a in args:
        fun = App(fun, a)
    return fun


def children(t: ObjTerm) -> tuple[ObjTerm, ...]:
    match t:
        case Lam(_, body):
            return (body,)
        case App(f, a):
            return (f, a)
        case Let(_, m, n):
            return (m, n)
        case Pair(a, b):
            return (a, b)
        case Fst(a) | Snd(a) | Inl(a) | Inr(a):
            return (a,)
        case Case(s, _, l, _, r):
            return (s, l, r)
        case If(c, a, b):
            return (c, a, b)
        case ConstApp(_, args):
            return args
    return ()


def child_binders(t: ObjTerm, index: int) -> tuple[str, ...]:
    """Variables bound by ``t`` in its ``index``-th child."""
    match t:
        case Lam(x, _):
            return (x,)
        case Let(x, _, _) if index == 1:
            return (x,)
        case Case(_, x, _, y, _):
            return {1: (x,), 2: (y,)}.get(index, ())
    return ()


def rebuild(t: ObjTerm, kids: tuple[ObjTerm, ...]) -> ObjTerm:
    match t:
        case Lam(x, _):
            return Lam(x, kids[0])
        case App():
            return App(kids[0], kids[1])
        case Let(x, _, _):
            return Let(x, kids[0], kids[1])
        case Pair():
            return Pair(kids[0], kids[1])
        case Fst():
            return Fst(kids[0])
        case Snd():
            return Snd(kids[0])
        case Inl(_, annot):
            return Inl(kids[0], annot)
        case Inr(_, annot):
            return Inr(kids[0], annot)
        case Case(_, x, _, y, _):
            return Case(kids[0], x, kids[1], y, kids[2])
        case If():
            return If(kids[0], kids[1], kids[2])
        case ConstApp(name, _):
            return ConstApp(name, tuple(kids))
    return t


def subterms(t: ObjTerm, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], ObjTerm]]:
    """Pre-order traversal yielding ``(path, subterm)`` pairs."""
    yield path, t
    for i, c in enumerate(children(t)):
        yield from subterms(c, path + (i,))


def at_path(t: ObjTerm, path: tuple[int, ...]) -> ObjTerm:
    for i in path:
        t = children(t)[i]
    return t


def size(t: ObjTerm) -> int:
    return 1 + sum(size(c) for c in children(t))


# ---------------------------------------------------------------------------
# Fresh names
# ---------------------------------------------------------------------------


class NameSupply:
    """Monotone counter producing names ``base'N``."""

    def __init__(self, start: int = 1) -> None:
        self._next = start

    def fresh(self, base: str = "x") -> str:
        n, self._next = self._next, self._next + 1
        return f"{base_name(base)}'{n}"

    def avoid(self, names: Iterable[str]) -> None:
        """Never hand out a suffix already carried by one of ``names``."""
        for name in names:
            m = _SUFFIX.search(name)
            if m:
                self._next = max(self._next, int(m.group()[1:]) + 1)


_supply: contextvars.ContextVar[NameSupply] = contextvars.ContextVar(
    "qfc_name_supply", default=NameSupply())


def fresh(base: str = "x") -> str:
    return _supply.get().fresh(base)


def avoid_names(t: ObjTerm) -> None:
    """Keep the current supply clear of every name occurring in ``t``."""
    names = []
    for _, s in subterms(t):
        match s:
            case Var(x) | Lam(x, _) | Let(x, _, _):
                names.append(x)
            case Case(_, x, _, y, _):
                names += [x, y]
    _supply.get().avoid(names)


@contextlib.contextmanager
def name_supply(start: int = 1) -> Iterator[NameSupply]:
    """Scope a private fresh-name counter (one per pipeline run)."""
    supply = NameSupply(start)
    token = _supply.set(supply)
    try:
        yield supply
    finally:
        _supply.reset(token)


@contextlib.contextmanager
def using_supply(supply: NameSupply) -> Iterator[NameSupply]:
    """Make ``supply`` current, e.g. to continue a pipeline run."""
    token = _supply.set(supply)
    try:
        yield supply
    finally:
        _supply.reset(token)


_SUFFIX = re.compile(r"'\d+$")


def base_name(name: str) -> str:
    return _SUFFIX.sub("", name) or "x"


# ---------------------------------------------------------------------------
# Variables, substitution, alpha-equivalence
# ---------------------------------------------------------------------------


def free_vars(t: ObjTerm) -> frozenset[str]:
    cached = t.__dict__.get("_fv")
    if cached is not None:
        return cached
    match t:
        case Var(name):
            out = frozenset({name})
        case Lam(x, body):
            out = free_vars(body) - {x}
        case Let(x, m, n):
            out = free_vars(m) | (free_vars(n) - {x})
        case Case(s, x, l, y, r):
            out = free_vars(s) | (free_vars(l) - {x}) | (free_vars(r) - {y})
        case _:
            out = frozenset()
            for c in children(t):
                out |= free_vars(c)
    object.__setattr__(t, "_fv", out)
    return out


def occurrences(t: ObjTerm, x: str) -> int:
    """Number of free occurrences of ``x`` in ``t``."""
    if x not in free_vars(t):
        return 0
    match t:
        case Var(name):
            return 1 if name == x else 0
    total = 0
    for i, c in enumerate(children(t)):
        if x not in child_binders(t, i):
            total += occurrences(c, x)
    return total


def rename(t: ObjTerm, old: str, new: str) -> ObjTerm:
    return subst(t, old, Var(new))


def subst(t: ObjTerm, x: str, v: ObjTerm) -> ObjTerm:
    """Capture-avoiding substitution ``t[x := v]``."""
    fv_v = free_vars(v)

    def go(t: ObjTerm) -> ObjTerm:
        if x not in free_vars(t):
            return t
        match t:
            case Var(name):
                return v if name == x else t
            case Lam(b, body):
                b, body = _avoid(b, body, fv_v)
                return Lam(b, go(body))
            case Let(b, m, n):
                m = go(m)
                if b == x:
                    return Let(b, m, n)
                b, n = _avoid(b, n, fv_v)
                return Let(b, m, go(n))
            case Case(s, b1, l, b2, r):
                s = go(s)
                if b1 != x:
                    b1, l = _avoid(b1, l, fv_v)
                    l = go(l)
                if b2 != x:
                    b2, r = _avoid(b2, r, fv_v)
                    r = go(r)
                return Case(s, b1, l, b2, r)
        return rebuild(t, tuple(go(c) for c in children(t)))

    return go(t)


def _avoid(b: str, body: ObjTerm, avoid: frozenset[str]) -> tuple[str, ObjTerm]:
    if b not in avoid:
        return b, body
    b2 = fresh(b)
    return b2, rename(body, b, b2)


def alpha_eq(a: ObjTerm, b: ObjTerm) -> bool:
    def go(a: ObjTerm, b: ObjTerm, ea: dict[str, int], eb: dict[str, int], depth: int) -> bool:
        if type(a) is not type(b):
            return False
        match a:
            case Var(n):
                return ea.get(n, n) == eb.get(b.name, b.name)
            case Lit() | UnitTerm() | Const():
                return a == b
            case Splice():
                return a == b
        if isinstance(a, ConstApp) and a.name != b.name:
            return False
        ka, kb = children(a), children(b)
        if len(ka) != len(kb):
            return False
        for i, (ca, cb) in enumerate(zip(ka, kb)):
            ba, bb = child_binders(a, i), child_binders(b, i)
            na, nb = ea, eb
            if ba:
                na, nb = dict(ea), dict(eb)
                for j, (xa, xb) in enumerate(zip(ba, bb)):
                    na[xa] = depth + j  # type: ignore[assignment]
                    nb[xb] = depth + j  # type: ignore[assignment]
            if not go(ca, cb, na, nb, depth + len(ba)):
                return False
        return True

    return go(a, b, {}, {}, 0)


def is_value(t: ObjTerm) -> bool:
    match t:
        case Var() | Lit() | Lam() | UnitTerm() | Const():
            return True
        case Pair(a, b):
            return is_value(a) and is_value(b)
        case Inl(a) | Inr(a):
            return is_value(a)
    return False


def map_terms(t: ObjTerm, fn: Callable[[ObjTerm], Optional[ObjTerm]]) -> ObjTerm:
    """Bottom-up rebuild; ``fn`` returns a replacement or None to keep."""
    kids = children(t)
    if kids:
        new = tuple(map_terms(c, fn) for c in kids)
        if any(n is not o for n, o in zip(new, kids)):
            t = rebuild(t, new)
    out = fn(t)
    return t if out is None else out


# ---------------------------------------------------------------------------
# Canonical printing
# ---------------------------------------------------------------------------

_OP_PREC = {"==": (4, 5, 5), "<": (4, 5, 5), "+": (6, 6, 7), "-": (6, 6, 7),
            "*": (7, 7, 8), "/": (7, 7, 8)}


def show_lit(t: Lit) -> str:
    if t.kind == "Bool":
        return "True" if t.value else "False"
    if t.kind == "Float":
        s = repr(float(t.value))
        if "e" in s and "." not in s.split("e")[0]:
            mant, exp = s.split("e")
            s = f"{mant}.0e{exp}"
        return s
    return str(t.value)


def pretty(t: ObjTerm, prec: int = 0) -> str:
    """Canonical concrete syntax, re-readable by :func:`qfc.parser.parse_term`."""

    def paren(s: str, needed: bool) -> str:
        return f"({s})" if needed else s

    match t:
        case Var(name):
            return name
        case Lit() as lit:
            s = show_lit(lit)
            return paren(s, s.startswith("-"))
        case UnitTerm():
            return "()"
        case Const(name):
            return f"({name})" if name in INFIX_OPS else name
        case Splice(expr):
            return f"$$({expr!r})"
        case Lam():
            binders = []
            while isinstance(t, Lam):
                binders.append(t.binder)
                t = t.body
            return paren(f"\\{' '.join(binders)} -> {pretty(t)}", prec > 0)
        case Let(x, m, n):
            return paren(f"let {x} = {pretty(m)} in {pretty(n)}", prec > 0)
        case If(c, a, b):
            return paren(f"if {pretty(c)} then {pretty(a)} else {pretty(b)}", prec > 0)
        case Case(s, x, l, y, r):
            return paren(f"case {pretty(s)} of {{ Inl {x} -> {pretty(l)}; "
                         f"Inr {y} -> {pretty(r)} }}", prec > 0)
        case Pair(a, b):
            return f"({pretty(a)}, {pretty(b)})"
        case ConstApp(name, args) if name in _OP_PREC:
            p, lp, rp = _OP_PREC[name]
            return paren(f"{pretty(args[0], lp)} {name} {pretty(args[1], rp)}", prec > p)
        case ConstApp(name, args):
            return paren(" ".join([name] + [pretty(a, 11) for a in args]), prec > 10)
        case App(f, a):
            return paren(f"{pretty(f, 10)} {pretty(a, 11)}", prec > 10)
        case Fst(a):
            return paren(f"fst {pretty(a, 11)}", prec > 10)
        case Snd(a):
            return paren(f"snd {pretty(a, 11)}", prec > 10)
        case Inl(a):
            return paren(f"Inl {pretty(a, 11)}", prec > 10)
        case Inr(a):
            return paren(f"Inr {pretty(a, 11)}", prec > 10)
    raise TypeError(f"not a term: {t!r}")
