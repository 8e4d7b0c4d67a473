"""Elimination of surface sugar.

Generation-stage expressions keep their surface shape; each quotation is
replaced by a :class:`~qfc.syntax.Quote` whose body is an object term.
Inside quotes, Maybe and do-notation become sums, ``Vec`` becomes a pair,
pattern lambdas become projections, and names that are not bound at the
object level turn into splices resolved by stage 0.
"""

from __future__ import annotations

from dataclasses import replace

from .errors import SugarError
from .syntax import (
    Definition, PBool, PCon, PTuple, PUnit, PVar, PWild, Pattern, Quote, SApp,
    SBind, SBinOp, SBool, SCase, SCon, SDo, SExpr, SFloat, SIf, SInt, SLam, SLet,
    SNeg, SOpRef, SourceModule, SQuote, SSplice, STuple, SUnit, SVar,
)
from .terms import (
    App, CONSTANTS, Case, Const, ConstApp, FALSE, Fst, If, Inl, Inr, Lam, Let,
    Lit, ObjTerm, Pair, Snd, Splice, TRUE, UnitTerm, Var, apps, fresh,
)

# sugar heads with their arity (number of arguments needed to desugar)
_SUGAR_ARITY = {
    "fst": 1, "snd": 1, "Just": 1, "Inr": 1, "Right": 1, "return": 1,
    "Inl": 1, "Left": 1, "Vec": 2, "maybe": 3,
}
_NAMED_CONSTANTS = frozenset(n for n in CONSTANTS if n.isalpha())
_LEFT_CONS = ("Inl", "Left", "Nothing")
_RIGHT_CONS = ("Inr", "Right", "Just")


def desugar(m: SourceModule) -> SourceModule:
    defs = tuple(replace(d, body=desugar_meta(d.body)) for d in m.definitions)
    return SourceModule(defs, m.entry)


def desugar_definition(d: Definition) -> Definition:
    return replace(d, body=desugar_meta(d.body))


# ---------------------------------------------------------------------------
# generation stage
# ---------------------------------------------------------------------------


def desugar_meta(e: SExpr, scope: frozenset[str] = frozenset()) -> SExpr:
    """Desugar quotes inside a generation-stage expression.

    ``scope`` holds object variables bound by enclosing quotations, which
    nested quotes inside splices may still refer to.
    """
    match e:
        case SQuote(body, pos):
            return Quote(desugar_object(body, scope), pos)
        case Quote():
            return e
        case SApp(f, a, pos):
            return SApp(desugar_meta(f, scope), desugar_meta(a, scope), pos)
        case SLam(params, body, pos):
            bound = frozenset().union(*(pattern_vars(p) for p in params))
            return SLam(params, desugar_meta(body, scope - bound), pos)
        case SLet(binds, body, pos):
            new = []
            inner = scope
            for b in binds:
                inner = inner - {b.name}
                new.append(replace(b, expr=desugar_meta(b.expr, inner)))
            return SLet(tuple(new), desugar_meta(body, inner), pos)
        case SIf(c, a, b, pos):
            return SIf(desugar_meta(c, scope), desugar_meta(a, scope), desugar_meta(b, scope), pos)
        case SBinOp(op, l, r, pos):
            return SBinOp(op, desugar_meta(l, scope), desugar_meta(r, scope), pos)
        case SNeg(a, pos):
            return SNeg(desugar_meta(a, scope), pos)
        case SSplice(a, pos):
            return SSplice(desugar_meta(a, scope), pos)
        case STuple(items, pos):
            return STuple(tuple(desugar_meta(i, scope) for i in items), pos)
        case SCase() | SDo():
            raise SugarError("case and do are only supported inside quotations", e.pos)
    return e


# ---------------------------------------------------------------------------
# object stage
# ---------------------------------------------------------------------------


def pattern_vars(p: Pattern) -> frozenset[str]:
    match p:
        case PVar(name):
            return frozenset({name})
        case PTuple(items) | PCon(_, items):
            return frozenset().union(*(pattern_vars(i) for i in items))
    return frozenset()


def desugar_object(e: SExpr, scope: frozenset[str] = frozenset(),
                   open_term: bool = False) -> ObjTerm:
    """Desugar object syntax. Unbound names are generation-stage references,
    or free object variables when ``open_term`` is set."""
    return _Desugarer(open_term).go(e, scope)


class _Desugarer:
    def __init__(self, open_term: bool = False) -> None:
        self.open_term = open_term

    def go(self, e: SExpr, scope: frozenset[str]) -> ObjTerm:
        match e:
            case SInt(n):
                return Lit("Int", n)
            case SFloat(x):
                return Lit("Float", float(x))
            case SBool(b):
                return TRUE if b else FALSE
            case SUnit():
                return UnitTerm()
            case SVar() | SCon() | SApp() | SOpRef():
                return self.spine(e, scope)
            case SLam(params, body):
                return self.lam(params, body, scope)
            case SLet(binds, body):
                return self.let(list(binds), body, scope)
            case SIf(c, a, b):
                return If(self.go(c, scope), self.go(a, scope), self.go(b, scope))
            case SCase(scrut, alts, pos):
                return self.case(self.go(scrut, scope), alts, scope, pos)
            case STuple(items):
                terms = [self.go(i, scope) for i in items]
                out = terms[-1]
                for t in reversed(terms[:-1]):
                    out = Pair(t, out)
                return out
            case SBinOp(op, l, r, pos):
                return self.binop(op, l, r, scope, pos)
            case SNeg(SInt(n)):
                return Lit("Int", -n)
            case SNeg(SFloat(x)):
                return Lit("Float", -float(x))
            case SNeg(a):
                return ConstApp("-", (Lit("Int", 0), self.go(a, scope)))
            case SSplice(a):
                return Splice(desugar_meta(a, scope))
            case SDo(stmts, pos):
                return self.go(self.do(list(stmts), pos), scope)
            case SQuote(_, pos):
                raise SugarError("nested quotation inside a quotation", pos)
            case Quote(_, pos):
                raise SugarError("nested quotation inside a quotation", pos)
        raise SugarError(f"unsupported form {type(e).__name__}", getattr(e, "pos", None))

    # application spines ------------------------------------------------------

    def spine(self, e: SExpr, scope: frozenset[str]) -> ObjTerm:
        args: list[SExpr] = []
        head = e
        while isinstance(head, SApp):
            args.append(head.arg)
            head = head.fun
        args.reverse()
        match head:
            case SVar(name) if name in scope:
                return apps(Var(name), *(self.go(a, scope) for a in args))
            case SVar(name) if name in _NAMED_CONSTANTS:
                return self.constant(name, args, scope)
            case SVar(name) | SCon(name) if name in _SUGAR_ARITY or name == "Nothing":
                return self.sugar(name, args, scope, head.pos)
            case SVar(name) if self.open_term:
                return apps(Var(name), *(self.go(a, scope) for a in args))
            case SVar(name, pos):
                # bare reference to a generation-stage definition
                return apps(Splice(SVar(name, pos)), *(self.go(a, scope) for a in args))
            case SCon(name, pos):
                raise SugarError(f"unknown constructor {name!r}", pos)
            case SOpRef(op, pos):
                return self.opref(op, args, scope, pos)
        return apps(self.go(head, scope), *(self.go(a, scope) for a in args))

    def constant(self, name: str, args: list[SExpr], scope: frozenset[str]) -> ObjTerm:
        k = CONSTANTS[name].arity
        terms = [self.go(a, scope) for a in args]
        if len(terms) < k:
            return apps(Const(name), *terms)
        return apps(ConstApp(name, tuple(terms[:k])), *terms[k:])

    def sugar(self, name: str, args: list[SExpr], scope: frozenset[str], pos) -> ObjTerm:
        if name == "Nothing":
            return apps(Inl(UnitTerm()), *(self.go(a, scope) for a in args))
        k = _SUGAR_ARITY[name]
        if len(args) < k:
            return self.eta(SVar(name, pos), args, k, scope)
        terms = [self.go(a, scope) for a in args[:k]]
        rest = [self.go(a, scope) for a in args[k:]]
        match name:
            case "fst":
                out: ObjTerm = Fst(terms[0])
            case "snd":
                out = Snd(terms[0])
            case "Inl" | "Left":
                out = Inl(terms[0])
            case "Inr" | "Right" | "Just" | "return":
                out = Inr(terms[0])
            case "Vec":
                out = Pair(terms[0], terms[1])
            case "maybe":
                d, f, m = terms
                u, y = fresh("u"), fresh("y")
                out = Case(m, u, d, y, App(f, Var(y)))
        return apps(out, *rest)

    def eta(self, head: SExpr, args: list[SExpr], k: int, scope: frozenset[str]) -> ObjTerm:
        """Expand an under-applied sugar form into a lambda."""
        names = [fresh("a") for _ in range(k - len(args))]
        body: SExpr = head
        for a in args:
            body = SApp(body, a, getattr(a, "pos", (0, 0)))
        for n in names:
            body = SApp(body, SVar(n))
        return self.go(SLam(tuple(PVar(n) for n in names), body), scope)

    def opref(self, op: str, args: list[SExpr], scope: frozenset[str], pos) -> ObjTerm:
        if op in CONSTANTS:
            terms = [self.go(a, scope) for a in args]
            if len(terms) >= 2:
                return apps(ConstApp(op, (terms[0], terms[1])), *terms[2:])
            return apps(Const(op), *terms)
        if len(args) >= 2:
            out = self.binop(op, args[0], args[1], scope, pos)
            return apps(out, *(self.go(a, scope) for a in args[2:]))
        a, b = fresh("a"), fresh("b")
        lam = SLam((PVar(a), PVar(b)), SBinOp(op, SVar(a), SVar(b), pos), pos)
        return self.go(_sapps(lam, args), scope)

    def binop(self, op: str, l: SExpr, r: SExpr, scope: frozenset[str], pos) -> ObjTerm:
        match op:
            case "+" | "-" | "*" | "/" | "==" | "<":
                return ConstApp(op, (self.go(l, scope), self.go(r, scope)))
            case ">":
                return ConstApp("<", (self.go(r, scope), self.go(l, scope)))
            case ".":
                x = fresh("x")
                return self.go(SLam((PVar(x),), SApp(l, SApp(r, SVar(x)))), scope)
            case ">>=":
                m = self.go(l, scope)
                k = self.go(r, scope)
                u, x = fresh("u"), fresh("x")
                return Case(m, u, Inl(Var(u)), x, App(k, Var(x)))
        raise SugarError(f"unknown operator {op!r}", pos)

    # binders ----------------------------------------------------------------

    def lam(self, params: tuple[Pattern, ...], body: SExpr, scope: frozenset[str]) -> ObjTerm:
        binders: list[tuple[str, Pattern]] = []
        for p in params:
            binders.append((p.name if isinstance(p, PVar) else fresh("p"), p))
        inner = scope | {b for b, _ in binders}
        for _, p in binders:
            inner |= pattern_vars(p)
        out = self.go(body, inner)
        for b, p in reversed(binders):
            if not isinstance(p, PVar):
                out = bind_pattern(p, b, out)
            out = Lam(b, out)
        return out

    def let(self, binds: list[SBind], body: SExpr, scope: frozenset[str]) -> ObjTerm:
        if not binds:
            return self.go(body, scope)
        b, rest = binds[0], binds[1:]
        rhs: SExpr = b.expr
        if b.params:
            rhs = SLam(b.params, rhs)
        bound = self.go(rhs, scope)
        if b.pattern is None or isinstance(b.pattern, PVar):
            name = b.name or b.pattern.name  # type: ignore[union-attr]
            return Let(name, bound, self.let(rest, body, scope | {name}))
        p = fresh("p")
        inner = self.let(rest, body, scope | pattern_vars(b.pattern))
        return Let(p, bound, bind_pattern(b.pattern, p, inner))

    def case(self, scrut: ObjTerm, alts, scope: frozenset[str], pos) -> ObjTerm:
        pats = [p for p, _ in alts]
        if len(alts) == 1 and isinstance(pats[0], (PVar, PTuple, PWild, PUnit)) or (
                len(alts) == 1 and isinstance(pats[0], PCon) and pats[0].name == "Vec"):
            p, rhs = alts[0]
            v = fresh("p")
            inner = self.go(rhs, scope | pattern_vars(p))
            return Let(v, scrut, bind_pattern(p, v, inner))
        if len(alts) == 2 and all(isinstance(p, PBool) for p in pats):
            branches = {p.value: rhs for p, rhs in alts}
            if set(branches) != {True, False}:
                raise SugarError("case on Bool needs both True and False", pos)
            return If(scrut, self.go(branches[True], scope), self.go(branches[False], scope))
        left = right = None
        for p, rhs in alts:
            match p:
                case PCon(name, args) if name in _LEFT_CONS and left is None:
                    left = (args, rhs)
                case PCon(name, args) if name in _RIGHT_CONS and right is None:
                    right = (args, rhs)
                case _:
                    raise SugarError("unsupported case alternative", pos)
        if left is None or right is None:
            raise SugarError("case on a sum needs one left and one right alternative", pos)
        lb, lbody = self.alt(left[0], left[1], scope, pos)
        rb, rbody = self.alt(right[0], right[1], scope, pos)
        return Case(scrut, lb, lbody, rb, rbody)

    def alt(self, args: tuple[Pattern, ...], rhs: SExpr, scope: frozenset[str],
            pos) -> tuple[str, ObjTerm]:
        if len(args) > 1:
            raise SugarError("constructor pattern takes one argument", pos)
        if not args:
            return fresh("u"), self.go(rhs, scope)
        p = args[0]
        if isinstance(p, PVar):
            return p.name, self.go(rhs, scope | {p.name})
        v = fresh("p")
        return v, bind_pattern(p, v, self.go(rhs, scope | pattern_vars(p)))

    def do(self, stmts: list, pos) -> SExpr:
        first, rest = stmts[0], stmts[1:]
        if not rest:
            if first.kind != "expr":
                raise SugarError("the last statement of a do block must be an expression", first.pos)
            return first.expr
        tail = self.do(rest, pos)
        match first.kind:
            case "bind":
                return SBinOp(">>=", first.expr, SLam((first.pattern,), tail), first.pos)
            case "let":
                return SLet(first.expr.binds, tail, first.pos)
        return SBinOp(">>=", first.expr, SLam((PWild(),), tail), first.pos)


def _sapps(head: SExpr, args: list[SExpr]) -> SExpr:
    for a in args:
        head = SApp(head, a)
    return head


def bind_pattern(p: Pattern, var: str, body: ObjTerm) -> ObjTerm:
    """Wrap ``body`` in projections destructuring ``var`` against ``p``."""
    match p:
        case PVar(name):
            return body if name == var else Let(name, Var(var), body)
        case PWild() | PUnit():
            return body
        case PCon("Vec", items) if len(items) == 2:
            return bind_pattern(PTuple(items), var, body)
        case PCon(name, _):
            raise SugarError(f"constructor pattern {name!r} is not allowed here")
        case PBool():
            raise SugarError("Bool patterns are only allowed in case alternatives")
        case PTuple(items):
            first, rest = items[0], items[1:]
            second = rest[0] if len(rest) == 1 else PTuple(rest)
            inner = _project(second, Snd(Var(var)), body)
            return _project(first, Fst(Var(var)), inner)
    raise SugarError("unsupported pattern")


def _project(p: Pattern, proj: ObjTerm, body: ObjTerm) -> ObjTerm:
    match p:
        case PWild() | PUnit():
            return body
        case PVar(name):
            return Let(name, proj, body)
    v = fresh("p")
    return Let(v, proj, bind_pattern(p, v, body))
