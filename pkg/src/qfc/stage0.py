"""Generation-stage evaluation.

A small call-by-value interpreter for the unquoted part of a module.
Evaluating a quotation walks its object term, renaming every object
binder fresh (hygiene) and grafting in the terms produced by splices.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Optional

from .desugar import desugar
from .errors import (
    EntryNotQuoted, MetaFuelExhausted, SpliceOfNonQuote, SpliceOutsideQuote,
    TypeClash, UnboundName,
)
from .parser import parse_module
from .syntax import (
    Definition, PTuple, PUnit, PVar, PWild, Pattern, Quote, SApp, SBinOp, SBool,
    SExpr, SFloat, SIf, SInt, SLam, SLet, SNeg, SOpRef, SourceModule, SSplice,
    STuple, SUnit, SVar,
)
from .terms import (
    Case, Lam, Let, ObjTerm, Splice, Var, children, fresh, pretty, rebuild,
)

DEFAULT_META_FUEL = 10**7


@dataclass(frozen=True)
class QuotedV:
    term: ObjTerm


@dataclass(frozen=True, eq=False)
class Closure:
    params: tuple[Pattern, ...]
    body: SExpr
    env: dict[str, Any]
    ren: dict[str, str]


@dataclass(frozen=True, eq=False)
class Builtin:
    name: str
    arity: int
    fn: Callable[..., Any]
    args: tuple[Any, ...] = ()


MetaVal = Any  # int | float | bool | tuple | Closure | Builtin | QuotedV


def _describe(v: MetaVal) -> str:
    match v:
        case bool():
            return "a Bool"
        case int():
            return "an Int"
        case float():
            return "a Float"
        case QuotedV():
            return "a quoted term"
        case Closure() | Builtin():
            return "a function"
        case tuple():
            return "a tuple"
    return type(v).__name__


def _int_op(name: str, fn: Callable[[Any, Any], Any]) -> Builtin:
    return Builtin(name, 2, fn)


_BUILTINS: dict[str, Builtin] = {
    "even": Builtin("even", 1, lambda n: n % 2 == 0),
    "odd": Builtin("odd", 1, lambda n: n % 2 != 0),
    "not": Builtin("not", 1, lambda b: not b),
    "abs": Builtin("abs", 1, abs),
    "negate": Builtin("negate", 1, lambda n: -n),
    "div": _int_op("div", lambda a, b: a // b),
    "mod": _int_op("mod", lambda a, b: a % b),
    "min": _int_op("min", min),
    "max": _int_op("max", max),
    "fst": Builtin("fst", 1, lambda p: p[0]),
    "snd": Builtin("snd", 1, lambda p: p[1]),
}

_BINOPS: dict[str, Callable[[Any, Any], Any]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "==": lambda a, b: a == b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
}


@functools.lru_cache(maxsize=1)
def prelude_module() -> SourceModule:
    text = resources.files("qfc").joinpath("prelude.qf").read_text(encoding="utf-8")
    return desugar(parse_module(text, entry=""))


def prelude_names() -> frozenset[str]:
    return frozenset(d.name for d in prelude_module().definitions)


@dataclass
class Evaluator:
    module: SourceModule
    fuel: int = DEFAULT_META_FUEL
    use_prelude: bool = True
    steps: int = 0
    _globals: dict[str, MetaVal] = field(default_factory=dict)
    _pending: set[str] = field(default_factory=set)

    def tick(self, pos: Optional[tuple[int, int]]) -> None:
        self.steps += 1
        if self.steps > self.fuel:
            raise MetaFuelExhausted(
                f"generation stage exceeded {self.fuel} steps", pos)

    # globals ----------------------------------------------------------------

    def lookup_def(self, name: str) -> Optional[Definition]:
        d = self.module.lookup(name)
        if d is None and self.use_prelude:
            d = prelude_module().lookup(name)
        return d

    def global_value(self, name: str, pos: Optional[tuple[int, int]]) -> MetaVal:
        if name in self._globals:
            return self._globals[name]
        d = self.lookup_def(name)
        if d is None:
            if name in _BUILTINS:
                return _BUILTINS[name]
            raise UnboundName(f"unbound name {name!r}", pos)
        if d.params:
            v: MetaVal = Closure(tuple(PVar(p) for p in d.params), d.body, {}, {})
        else:
            if name in self._pending:
                raise TypeClash(f"definition {name!r} depends on its own value", d.pos)
            self._pending.add(name)
            try:
                v = self.eval(d.body, {}, {})
            finally:
                self._pending.discard(name)
        self._globals[name] = v
        return v

    # expressions --------------------------------------------------------------

    def eval(self, e: SExpr, env: dict[str, MetaVal], ren: dict[str, str]) -> MetaVal:
        self.tick(getattr(e, "pos", None))
        match e:
            case SVar(name, pos):
                if name in env:
                    return env[name]
                return self.global_value(name, pos)
            case SInt(n) | SFloat(n) | SBool(n):
                return n
            case SUnit():
                return ()
            case SApp(f, a, pos):
                return self.apply(self.eval(f, env, ren), self.eval(a, env, ren), pos)
            case SLam(params, body):
                return Closure(params, body, env, ren)
            case SLet(binds, body):
                env = dict(env)
                for b in binds:
                    if b.params:
                        # function bindings may recurse through their own name
                        inner = dict(env)
                        clo = Closure(b.params, b.expr, inner, ren)
                        inner[b.name] = clo
                        env[b.name] = clo
                    elif b.pattern is not None and not isinstance(b.pattern, PVar):
                        self.bind(b.pattern, self.eval(b.expr, env, ren), env, e.pos)
                    else:
                        name = b.name or b.pattern.name  # type: ignore[union-attr]
                        env[name] = self.eval(b.expr, env, ren)
                return self.eval(body, env, ren)
            case SIf(c, a, b, pos):
                cond = self.eval(c, env, ren)
                if not isinstance(cond, bool):
                    raise TypeClash(f"if condition is {_describe(cond)}, expected a Bool", pos)
                return self.eval(a if cond else b, env, ren)
            case SBinOp(".", l, r, pos):
                f, g = self.eval(l, env, ren), self.eval(r, env, ren)
                return Builtin(".", 1, lambda x: self.apply(f, self.apply(g, x, pos), pos))
            case SBinOp(op, l, r, pos):
                return self.binop(op, self.eval(l, env, ren), self.eval(r, env, ren), pos)
            case SOpRef(op, pos):
                if op not in _BINOPS:
                    raise TypeClash(f"operator ({op}) is not available at generation time", pos)
                return Builtin(op, 2, lambda a, b: self.binop(op, a, b, pos))
            case SNeg(a, pos):
                v = self.eval(a, env, ren)
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise TypeClash(f"cannot negate {_describe(v)}", pos)
                return -v
            case STuple(items):
                return tuple(self.eval(i, env, ren) for i in items)
            case Quote(body):
                return QuotedV(self.graft(body, env, ren))
            case SSplice(_, pos):
                raise SpliceOutsideQuote("splice outside of a quotation", pos)
        raise TypeClash(f"unsupported generation-stage form {type(e).__name__}",
                        getattr(e, "pos", None))

    def binop(self, op: str, a: MetaVal, b: MetaVal, pos) -> MetaVal:
        numeric = all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in (a, b))
        if op == "==" and type(a) is type(b) and not isinstance(a, (Closure, Builtin)):
            return a == b
        if not numeric:
            raise TypeClash(
                f"operator {op} applied to {_describe(a)} and {_describe(b)}", pos)
        if op == "/" and isinstance(a, int) and isinstance(b, int):
            raise TypeClash("use div for integer division at generation time", pos)
        try:
            return _BINOPS[op](a, b)
        except ZeroDivisionError:
            raise TypeClash("division by zero at generation time", pos) from None

    def apply(self, f: MetaVal, a: MetaVal, pos) -> MetaVal:
        match f:
            case Closure(params, body, env, ren):
                env = dict(env)
                self.bind(params[0], a, env, pos)
                if len(params) > 1:
                    return Closure(params[1:], body, env, ren)
                return self.eval(body, env, ren)
            case Builtin(name, arity, fn, args):
                args = args + (a,)
                if len(args) < arity:
                    return Builtin(name, arity, fn, args)
                try:
                    return fn(*args)
                except (TypeError, IndexError, ZeroDivisionError) as exc:
                    raise TypeClash(f"bad arguments to {name}: {exc}", pos) from None
        hint = "; splice it inside a quotation" if isinstance(f, QuotedV) else ""
        raise TypeClash(f"cannot apply {_describe(f)}{hint}", pos)

    def bind(self, p: Pattern, v: MetaVal, env: dict[str, MetaVal], pos) -> None:
        match p:
            case PVar(name):
                env[name] = v
            case PWild() | PUnit():
                pass
            case PTuple(items):
                if not isinstance(v, tuple) or len(v) < 2:
                    raise TypeClash(f"cannot match {_describe(v)} against a tuple", pos)
                if len(items) == 2 and len(v) == 2:
                    self.bind(items[0], v[0], env, pos)
                    self.bind(items[1], v[1], env, pos)
                elif len(items) == len(v):
                    for q, w in zip(items, v):
                        self.bind(q, w, env, pos)
                else:
                    raise TypeClash("tuple pattern has the wrong arity", pos)
            case _:
                raise TypeClash("unsupported generation-stage pattern", pos)

    # quotations ---------------------------------------------------------------

    def graft(self, t: ObjTerm, env: dict[str, MetaVal], ren: dict[str, str]) -> ObjTerm:
        match t:
            case Var(x):
                return Var(ren.get(x, x))
            case Lam(x, body):
                x2 = fresh(x)
                return Lam(x2, self.graft(body, env, {**ren, x: x2}))
            case Let(x, m, n):
                x2 = fresh(x)
                return Let(x2, self.graft(m, env, ren), self.graft(n, env, {**ren, x: x2}))
            case Case(s, x, l, y, r):
                x2, y2 = fresh(x), fresh(y)
                return Case(self.graft(s, env, ren), x2, self.graft(l, env, {**ren, x: x2}),
                            y2, self.graft(r, env, {**ren, y: y2}))
            case Splice(e):
                v = self.eval(e, env, ren)
                if isinstance(v, QuotedV):
                    return v.term
                pos = getattr(e, "pos", None)
                if isinstance(e, SVar):
                    raise SpliceOfNonQuote(
                        f"{e.name!r} is {_describe(v)} from the generation stage; only "
                        "quoted terms may be used inside a quotation", pos)
                raise SpliceOfNonQuote(f"splice evaluated to {_describe(v)}, not a quoted term", pos)
        kids = children(t)
        if not kids:
            return t
        return rebuild(t, tuple(self.graft(c, env, ren) for c in kids))


def eval_meta(module: SourceModule, e: SExpr, fuel: int = DEFAULT_META_FUEL,
              use_prelude: bool = True) -> MetaVal:
    try:
        return Evaluator(module, fuel, use_prelude).eval(e, {}, {})
    except RecursionError:
        raise MetaFuelExhausted("generation stage recursed too deeply") from None


def run_entry(module: SourceModule, fuel: int = DEFAULT_META_FUEL,
              use_prelude: bool = True) -> ObjTerm:
    """Evaluate the entry definition to a closed object term."""
    ev = Evaluator(module, fuel, use_prelude)
    d = module.lookup(module.entry)
    if d is None:
        raise UnboundName(f"entry definition {module.entry!r} not found")
    try:
        v = ev.global_value(module.entry, d.pos)
    except RecursionError:
        raise MetaFuelExhausted("generation stage recursed too deeply", d.pos) from None
    if not isinstance(v, QuotedV):
        raise EntryNotQuoted(
            f"entry {module.entry!r} evaluated to {_describe(v)}, expected a quoted term", d.pos)
    return v.term


def show_meta(v: MetaVal) -> str:
    if isinstance(v, QuotedV):
        return f"[|| {pretty(v.term)} ||]"
    return repr(v)
