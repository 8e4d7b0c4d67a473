"""Lowering of first-order normal forms to a small C AST, and printing.

Every local is declared at the top of the routine, a single result
variable ``r`` carries the answer, and pairs are flattened into one C
variable per leaf (``x_1``, ``x_2_1``, ...).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from ..errors import ForbiddenConstant, NotFirstOrder, UnsupportedLowering
from ..terms import (
    Array, BOOL, Base, Const, ConstApp, FLOAT, Fst, Fun, INT, If, Lam, Let, Lit,
    ObjTerm, ObjType, Pair, Prod, Snd, UNIT, UnitTerm, Var, base_name, show_type,
)
from ..typecheck import check_permitted, infer
from ..verify import check_first_order

RUNTIME_HEADER_NAME = "qf_runtime.h"

# ---------------------------------------------------------------------------
# C AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CVar:
    name: str


@dataclass(frozen=True)
class CLit:
    text: str


@dataclass(frozen=True)
class CBin:
    op: str
    left: "CExpr"
    right: "CExpr"


@dataclass(frozen=True)
class CNot:
    arg: "CExpr"


@dataclass(frozen=True)
class CCall:
    fn: str
    args: tuple["CExpr", ...]


@dataclass(frozen=True)
class CField:
    base: "CExpr"
    name: str


@dataclass(frozen=True)
class CCast:
    ctype: str
    arg: "CExpr"


CExpr = Union[CVar, CLit, CBin, CNot, CCall, CField, CCast]


@dataclass(frozen=True)
class CAssign:
    target: CExpr
    value: CExpr


@dataclass(frozen=True)
class CStore:
    """``array.data[index] = value``"""
    array: CExpr
    index: CExpr
    value: CExpr


@dataclass(frozen=True)
class CIf:
    cond: CExpr
    then: tuple["CStmt", ...]
    els: tuple["CStmt", ...] = ()


@dataclass(frozen=True)
class CWhile:
    cond: CExpr
    body: tuple["CStmt", ...]


@dataclass(frozen=True)
class CFor:
    """``for (var = 0; var < bound; var++)``"""
    var: str
    bound: CExpr
    body: tuple["CStmt", ...]


@dataclass(frozen=True)
class CBreak:
    pass


@dataclass(frozen=True)
class CVoid:
    """``(void) name;`` marks a local that is computed but never read."""
    name: str


CStmt = Union[CAssign, CStore, CIf, CWhile, CFor, CBreak, CVoid]


@dataclass(frozen=True)
class CFunction:
    ret: str
    name: str
    params: tuple[tuple[str, str], ...]
    decls: tuple[tuple[str, str], ...]
    body: tuple[CStmt, ...]
    result: Optional[str]


@dataclass(frozen=True)
class CStruct:
    name: str
    fields: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class CUnit:
    functions: tuple[CFunction, ...]
    structs: tuple[CStruct, ...] = ()
    includes: tuple[str, ...] = (RUNTIME_HEADER_NAME,)
    # representable signature of the entry, for harnesses
    params: tuple[ObjType, ...] = ()
    result: ObjType = UNIT

    @property
    def entry(self) -> CFunction:
        return self.functions[-1]


# ---------------------------------------------------------------------------
# shapes: a C expression per leaf of a representable type
# ---------------------------------------------------------------------------

Shape = Union[CExpr, tuple]  # () for Unit, (left, right) for pairs


def ctype(ty: ObjType) -> str:
    match ty:
        case Base("Int"):
            return "int32_t"
        case Base("Float"):
            return "float"
        case Base("Bool"):
            return "bool"
        case Array(Base("Int")):
            return "qf_arr_int"
        case Array(Base("Float")):
            return "qf_arr_float"
        case Array(Base("Bool")):
            return "qf_arr_bool"
    raise UnsupportedLowering(f"no C representation for {show_type(ty)}")


def leaves(shape: Shape) -> list[CExpr]:
    if isinstance(shape, tuple):
        return [leaf for part in shape for leaf in leaves(part)]
    return [shape]


def leaf_types(ty: ObjType) -> list[tuple[str, ObjType]]:
    """``(suffix, type)`` for each leaf of ``ty``; Unit has none."""
    match ty:
        case Base("Unit"):
            return []
        case Prod(a, b):
            return ([("_1" + s, t) for s, t in leaf_types(a)]
                    + [("_2" + s, t) for s, t in leaf_types(b)])
    return [("", ty)]


def _build(ty: ObjType, make, suffix: str = "") -> Shape:
    match ty:
        case Base("Unit"):
            return ()
        case Prod(a, b):
            return (_build(a, make, suffix + "_1"), _build(b, make, suffix + "_2"))
    return make(suffix, ty)


_C_RESERVED = frozenset("""
    auto break case char const continue default do double else enum extern float for goto
    if inline int long register restrict return short signed sizeof static struct switch
    typedef union unsigned void volatile while bool true false main prog r sqrtf
    int32_t uint32_t abort malloc free NAN INFINITY
""".split())


def _float_text(x: float) -> str:
    if math.isnan(x):
        return "NAN"
    if math.isinf(x):
        return "INFINITY" if x > 0 else "(-INFINITY)"
    text = repr(float(x))
    if "e" in text or "E" in text:
        mant, exp = text.split("e") if "e" in text else text.split("E")
        if "." not in mant:
            mant += ".0"
        text = f"{mant}e{exp}"
    return text + "f"


def _int_text(n: int) -> str:
    if n == -(2**31):
        return "(-2147483647 - 1)"
    return str(n)


# ---------------------------------------------------------------------------
# lowering
# ---------------------------------------------------------------------------


@dataclass
class _Scope:
    """Shapes and types of the object variables in scope."""
    shapes: dict[str, Shape] = field(default_factory=dict)
    types: dict[str, ObjType] = field(default_factory=dict)

    def bind(self, x: str, shape: Shape, ty: ObjType) -> "_Scope":
        return _Scope({**self.shapes, x: shape}, {**self.types, x: ty})


class _Lowerer:
    def __init__(self, entry: str) -> None:
        self.entry = entry
        self.used: set[str] = set(_C_RESERVED) | {entry}
        self.decls: list[tuple[str, str]] = []
        self.block: list[CStmt] = []

    # names -----------------------------------------------------------------

    def cname(self, base: str) -> str:
        base = re.sub(r"[^A-Za-z0-9_]", "_", base_name(base)) or "x"
        if base[0].isdigit():
            base = "v" + base
        base = base.rstrip("_") or "x"
        if base.startswith("qf_"):
            base = "v" + base
        name, n = base, 0
        while name in self.used:
            n += 1
            name = f"{base}{n}"
        self.used.add(name)
        return name

    def local(self, ty: ObjType, base: str) -> Shape:
        stem = base_name(base)

        def make(suffix: str, leaf: ObjType) -> CExpr:
            name = self.cname(stem + suffix)
            self.decls.append((ctype(leaf), name))
            return CVar(name)
        return _build(ty, make)

    # typing of first-order terms ----------------------------------------------

    def type_of(self, t: ObjTerm, sc: _Scope) -> ObjType:
        match t:
            case Var(x):
                return sc.types[x]
            case Lit(kind, _):
                return Base(kind)
            case UnitTerm():
                return UNIT
            case Pair(a, b):
                return Prod(self.type_of(a, sc), self.type_of(b, sc))
            case Fst(a) | Snd(a):
                ty = self.type_of(a, sc)
                assert isinstance(ty, Prod)
                return ty.left if isinstance(t, Fst) else ty.right
            case Let(x, m, n):
                return self.type_of(n, sc.bind(x, (), self.type_of(m, sc)))
            case If(_, a, _):
                return self.type_of(a, sc)
            case ConstApp(name, args):
                match name:
                    case "+" | "-" | "*" | "/" | "save":
                        return self.type_of(args[0], sc)
                    case "==" | "<":
                        return BOOL
                    case "sqrt":
                        return FLOAT
                    case "div" | "mod" | "lnArr":
                        return INT
                    case "ixArr":
                        arr = self.type_of(args[0], sc)
                        assert isinstance(arr, Array)
                        return arr.elem
                    case "while":
                        return self.type_of(args[2], sc)
                    case "mkArr":
                        f = args[1]
                        if not isinstance(f, Lam):
                            raise UnsupportedLowering("mkArr needs a lambda argument")
                        return Array(self.type_of(f.body, sc.bind(f.binder, (), INT)))
                raise ForbiddenConstant(f"constant {name} cannot be compiled to C")
        raise NotFirstOrder(f"cannot lower {type(t).__name__} to C")

    # pure expressions -------------------------------------------------------

    def expr(self, t: ObjTerm, sc: _Scope) -> Optional[Shape]:
        """The shape of ``t`` if it needs no statements, else None."""
        match t:
            case Var(x):
                return sc.shapes[x]
            case Lit("Int", n):
                return CLit(_int_text(n))
            case Lit("Float", x):
                return CLit(_float_text(x))
            case Lit("Bool", b):
                return CLit("true" if b else "false")
            case UnitTerm():
                return ()
            case Pair(a, b):
                sa, sb = self.expr(a, sc), self.expr(b, sc)
                if sa is None or sb is None:
                    return None
                return (sa, sb)
            case Fst(a) | Snd(a):
                s = self.expr(a, sc)
                if s is None:
                    return None
                assert isinstance(s, tuple) and len(s) == 2
                return s[0] if isinstance(t, Fst) else s[1]
            case ConstApp(name, args) if name not in ("while", "mkArr"):
                shapes = [self.expr(a, sc) for a in args]
                if any(s is None for s in shapes):
                    return None
                return self.prim(name, args, shapes, sc)
        return None

    def prim(self, name: str, args: tuple[ObjTerm, ...], shapes: list[Shape],
             sc: _Scope) -> Shape:
        match name:
            case "save":
                return shapes[0]
            case "+" | "-" | "*":
                return CBin(name, shapes[0], shapes[1])  # type: ignore[arg-type]
            case "/":
                if self.type_of(args[0], sc) == INT:
                    return CCall("qf_div", (shapes[0], shapes[1]))  # type: ignore[arg-type]
                return CBin("/", shapes[0], shapes[1])  # type: ignore[arg-type]
            case "div":
                return CCall("qf_div", (shapes[0], shapes[1]))  # type: ignore[arg-type]
            case "mod":
                return CCall("qf_mod", (shapes[0], shapes[1]))  # type: ignore[arg-type]
            case "==" | "<":
                return CBin(name, shapes[0], shapes[1])  # type: ignore[arg-type]
            case "sqrt":
                return CCall("sqrtf", (shapes[0],))  # type: ignore[arg-type]
            case "lnArr":
                return CCast("int32_t", CField(shapes[0], "len"))  # type: ignore[arg-type]
            case "ixArr":
                return CCall("QF_IX", (shapes[0], shapes[1]))  # type: ignore[arg-type]
        raise ForbiddenConstant(f"constant {name} cannot be compiled to C")

    # statements ---------------------------------------------------------------

    def emit(self, stmt: CStmt) -> None:
        self.block.append(stmt)

    def nested(self, fn) -> tuple[CStmt, ...]:
        saved, self.block = self.block, []
        try:
            fn()
            return tuple(self.block)
        finally:
            self.block = saved

    def assign(self, target: Shape, value: Shape) -> None:
        for tgt, val in zip(leaves(target), leaves(value), strict=True):
            self.emit(CAssign(tgt, val))

    def value(self, t: ObjTerm, sc: _Scope, base: str = "t") -> Shape:
        """A pure shape for ``t``, emitting statements into a temporary if needed."""
        s = self.expr(t, sc)
        if s is not None:
            return s
        tmp = self.local(self.type_of(t, sc), base)
        self.into(t, tmp, sc)
        return tmp

    def into(self, t: ObjTerm, target: Shape, sc: _Scope) -> None:
        """Emit statements leaving the value of ``t`` in ``target``."""
        s = self.expr(t, sc)
        if s is not None:
            self.assign(target, s)
            return
        match t:
            case Let(x, m, n):
                ty = self.type_of(m, sc)
                if isinstance(m, (Var, Lit)):
                    shape = self.expr(m, sc)
                else:
                    shape = self.local(ty, x)
                    self.into(m, shape, sc)
                self.into(n, target, sc.bind(x, shape, ty))
            case If(c, a, b):
                cond = self.value(c, sc, "c")
                assert not isinstance(cond, tuple)
                then = self.nested(lambda: self.into(a, target, sc))
                els = self.nested(lambda: self.into(b, target, sc))
                self.emit(CIf(cond, then, els))
            case Pair(a, b):
                assert isinstance(target, tuple)
                self.into(a, target[0], sc)
                self.into(b, target[1], sc)
            case Fst(a) | Snd(a):
                s = self.value(a, sc)
                assert isinstance(s, tuple)
                self.assign(target, s[0] if isinstance(t, Fst) else s[1])
            case ConstApp("while", (cond, step, init)):
                self.lower_while(cond, step, init, target, sc)
            case ConstApp("mkArr", (n, f)):
                self.lower_mkarr(n, f, target, sc)
            case ConstApp(name, args):
                shapes = [self.value(a, sc) for a in args]
                self.assign(target, self.prim(name, args, shapes, sc))
            case Lam() | Const():
                raise NotFirstOrder("a function value reached C lowering")
            case _:
                raise NotFirstOrder(f"cannot lower {type(t).__name__} to C")

    def lower_while(self, cond: ObjTerm, step: ObjTerm, init: ObjTerm,
                    target: Shape, sc: _Scope) -> None:
        if not (isinstance(cond, Lam) and isinstance(step, Lam)):
            raise UnsupportedLowering("while needs lambda arguments")
        ty = self.type_of(init, sc)
        state = self.local(ty, "s")
        self.into(init, state, sc)
        csc = sc.bind(cond.binder, state, ty)
        ssc = sc.bind(step.binder, state, ty)
        test = self.expr(cond.body, csc)
        nxt = self.local(ty, "s")

        def body() -> None:
            self.into(step.body, nxt, ssc)
            self.assign(state, nxt)

        if test is not None:
            assert not isinstance(test, tuple)
            self.emit(CWhile(test, self.nested(body)))
        else:
            def guarded() -> None:
                c = self.value(cond.body, csc, "c")
                assert not isinstance(c, tuple)
                self.emit(CIf(CNot(c), (CBreak(),)))
                body()
            self.emit(CWhile(CLit("true"), self.nested(guarded)))
        self.assign(target, state)

    def lower_mkarr(self, n: ObjTerm, f: ObjTerm, target: Shape, sc: _Scope) -> None:
        if not isinstance(f, Lam):
            raise UnsupportedLowering("mkArr needs a lambda argument")
        assert not isinstance(target, tuple)
        ty = self.type_of(f.body, sc.bind(f.binder, (), INT))
        if not isinstance(ty, Base) or ty == UNIT:
            raise UnsupportedLowering(f"arrays of {show_type(ty)} are not supported in C")
        length = self.value(n, sc, "n")
        assert not isinstance(length, tuple)
        self.emit(CAssign(target, CCall(f"qf_alloc_{ty.kind.lower()}", (length,))))
        i = self.cname(f.binder)
        self.decls.append(("int32_t", i))
        isc = sc.bind(f.binder, CVar(i), INT)

        def body() -> None:
            elem = self.value(f.body, isc, "e")
            assert not isinstance(elem, tuple)
            self.emit(CStore(target, CVar(i), elem))

        self.emit(CFor(i, CCast("int32_t", CField(target, "len")), self.nested(body)))


def _spine(t: ObjTerm, ty: ObjType) -> tuple[list[tuple[str, ObjType]], ObjTerm, ObjType]:
    params = []
    while isinstance(t, Lam):
        assert isinstance(ty, Fun)
        params.append((t.binder, ty.dom))
        t, ty = t.body, ty.cod
    return params, t, ty


def lower(t: ObjTerm, entry: str = "prog", top_type: Optional[ObjType] = None) -> CUnit:
    """Lower a closed first-order normal form to a C unit with routine
    ``entry``. ``top_type`` fixes parameter types the term leaves open."""
    tt = infer(t, expected=top_type)
    report = check_first_order(tt)
    if not report.ok:
        raise NotFirstOrder("term is not first-order: " + report.witnesses[0].render())
    bad = check_permitted(tt)
    if bad:
        raise ForbiddenConstant(bad[0].message)
    params, body, result_ty = _spine(tt.term, tt.top_type)
    if isinstance(body, Lam):
        raise NotFirstOrder("entry returns a function")

    lw = _Lowerer(entry)
    sc = _Scope()
    cparams: list[tuple[str, str]] = []
    for x, ty in params:
        base = lw.cname(x)

        def make(suffix: str, leaf: ObjType, base=base) -> CExpr:
            name = base + suffix
            lw.used.add(name)
            cparams.append((ctype(leaf), name))
            return CVar(name)

        sc = sc.bind(x, _build(ty, make), ty)

    structs: tuple[CStruct, ...] = ()
    result_leaves = leaf_types(result_ty)
    if not result_leaves:
        ret, result = "void", None
        target: Shape = _build(result_ty, lambda s, l: CVar("r"))
    elif isinstance(result_ty, Prod):
        struct = CStruct(f"{entry}_result", tuple((ctype(l), "f" + s[1:]) for s, l in result_leaves))
        structs = (struct,)
        ret, result = struct.name, "r"
        target = _build(result_ty, lambda s, l: CField(CVar("r"), "f" + s[1:]))
    else:
        ret, result = ctype(result_ty), "r"
        target = CVar("r")

    lw.into(body, target, sc)
    decls = list(reversed(lw.decls))  # newest first, the result variable last
    if result is not None:
        decls.append((ret, "r"))
    stmts = list(lw.block)
    read = _reads(stmts) | {result}
    stmts += [CVoid(name) for _, name in lw.decls if name not in read]
    fn = CFunction(ret, entry, tuple(cparams), tuple(decls), tuple(stmts), result)
    return CUnit((fn,), structs, params=tuple(ty for _, ty in params), result=result_ty)


def _reads(stmts: list[CStmt] | tuple[CStmt, ...]) -> set[str]:
    out: set[str] = set()

    def ex(e: CExpr) -> None:
        match e:
            case CVar(name):
                out.add(name)
            case CBin(_, a, b):
                ex(a)
                ex(b)
            case CNot(a) | CCast(_, a) | CField(a, _):
                ex(a)
            case CCall(_, args):
                for a in args:
                    ex(a)

    def st(s: CStmt) -> None:
        match s:
            case CAssign(target, value):
                if not isinstance(target, CVar):
                    ex(target)
                ex(value)
            case CStore(arr, idx, value):
                ex(arr)
                ex(idx)
                ex(value)
            case CIf(c, a, b):
                ex(c)
                for x in a + b:
                    st(x)
            case CWhile(c, body):
                ex(c)
                for x in body:
                    st(x)
            case CFor(var, bound, body):
                out.add(var)
                ex(bound)
                for x in body:
                    st(x)

    for s in stmts:
        st(s)
    return out


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------


def render_expr(e: CExpr) -> str:
    match e:
        case CVar(name):
            return name
        case CLit(text):
            return text
        case CBin(op, a, b):
            return f"({render_expr(a)} {op} {render_expr(b)})"
        case CNot(a):
            return f"!{render_expr(a)}" if isinstance(a, (CVar, CBin, CCall)) else f"!({render_expr(a)})"
        case CCall(fn, args):
            return f"{fn}({', '.join(render_expr(a) for a in args)})"
        case CField(base, name):
            return f"{render_expr(base)}.{name}"
        case CCast(ty, a):
            return f"(({ty}) {render_expr(a)})"
    raise TypeError(e)


def _cond(e: CExpr) -> str:
    # the statement's own parentheses stand in for the outermost pair
    text = render_expr(e)
    return text[1:-1] if isinstance(e, CBin) else text


def _stmt(s: CStmt, indent: int) -> list[str]:
    pad = "  " * indent
    match s:
        case CAssign(target, value):
            return [f"{pad}{render_expr(target)} = {render_expr(value)};"]
        case CStore(arr, idx, value):
            return [f"{pad}{render_expr(arr)}.data[{render_expr(idx)}] = {render_expr(value)};"]
        case CIf(c, then, els):
            out = [f"{pad}if ({_cond(c)}) {{"]
            for x in then:
                out += _stmt(x, indent + 1)
            if els:
                out.append(f"{pad}}} else {{")
                for x in els:
                    out += _stmt(x, indent + 1)
            out.append(f"{pad}}}")
            return out
        case CWhile(c, body):
            out = [f"{pad}while ({_cond(c)}) {{"]
            for x in body:
                out += _stmt(x, indent + 1)
            return out + [f"{pad}}}"]
        case CFor(var, bound, body):
            out = [f"{pad}for ({var} = 0; {var} < {render_expr(bound)}; {var}++) {{"]
            for x in body:
                out += _stmt(x, indent + 1)
            return out + [f"{pad}}}"]
        case CBreak():
            return [f"{pad}break;"]
        case CVoid(name):
            return [f"{pad}(void) {name};"]
    raise TypeError(s)


def render_function(fn: CFunction) -> str:
    params = ", ".join(f"{t} {n}" for t, n in fn.params) or "void"
    lines = [f"{fn.ret} {fn.name} ({params}) {{"]
    lines += [f"  {t} {n};" for t, n in fn.decls]
    for s in fn.body:
        lines += _stmt(s, 1)
    if fn.result is not None:
        lines.append(f"  return {fn.result};")
    lines.append("}")
    return "\n".join(lines)


def emit(unit: CUnit) -> str:
    """Deterministic C99 text for ``unit``."""
    parts = [f'#include "{h}"' for h in unit.includes]
    for st in unit.structs:
        fields = " ".join(f"{t} {n};" for t, n in st.fields)
        parts.append(f"typedef struct {{ {fields} }} {st.name};")
    parts += [render_function(fn) for fn in unit.functions]
    return "\n\n".join(parts) + "\n"
