"""Lexer and recursive-descent parser for ``.qf`` sources.

The grammar is Haskell-like but layout-insensitive, except that every
top-level declaration starts in column 1 (continuation lines are indented).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
from .syntax import (
    Definition, PBool, PCon, PTuple, PUnit, PVar, PWild, Pattern, QtType, SApp,
    SBind, SBinOp, SBool, SCase, SCon, SDo, SExpr, SFloat, SIf, SInt, SLam, SLet,
    SNeg, SOpRef, SourceModule, SQuote, SSplice, SStmt, STuple, SUnit, SVar,
)
from .terms import (
    Array, BOOL, FLOAT, Fun, INT, ObjTerm, ObjType, Prod, Sum, TVar, UNIT, is_representable, type_vars,
    maybe_type, vec_type,
)

KEYWORDS = {"let", "in", "if", "then", "else", "case", "of", "do"}

_UNICODE = {"λ": "\\", "→": "->", "←": "<-", "×": "*"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<qopen>\[\|\|)
  | (?P<qclose>\|\|\])
  | (?P<splice>\$\$)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?)
  | (?P<int>\d+)
  | (?P<ident>[a-z_][A-Za-z0-9_']*)
  | (?P<con>[A-Z][A-Za-z0-9_']*)
  | (?P<tick>`[a-z][A-Za-z0-9_']*`)
  | (?P<op>>>=|->|<-|::|==|[\\=<>+\-*/.,;:(){}|])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int

    @property
    def pos(self) -> tuple[int, int]:
        return (self.line, self.col)


def tokenize(source: str) -> list[Token]:
    for k, v in _UNICODE.items():
        source = source.replace(k, v)
    tokens: list[Token] = []
    line, line_start, i = 1, 0, 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        if m is None:
            raise ParseError(f"unexpected character {source[i]!r}",
                             (line, i - line_start + 1))
        kind = m.lastgroup or ""
        text = m.group()
        col = i - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            elif kind == "ident" and text == "_":
                kind = "op"
            tokens.append(Token(kind, text, line, col))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


_BINOPS = {
    # op: (precedence, associativity)
    ">>=": (1, "left"),
    "==": (4, "none"), "<": (4, "none"), ">": (4, "none"),
    "+": (6, "left"), "-": (6, "left"),
    "*": (7, "left"), "/": (7, "left"),
    ".": (9, "right"),
}
_TICK_PREC = (7, "left")
_BLOCK_STARTS = {"\\", "let", "if", "case", "do"}


class Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.toks = tokens
        self.i = 0

    # helpers -----------------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "kw", "qopen", "qclose", "splice")

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail([text])
        return self.advance()

    def fail(self, expected: list[str]) -> None:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"unexpected {found}; expected one of: {', '.join(expected)}", t.pos)

    def starts_block(self) -> bool:
        return self.tok.text in _BLOCK_STARTS and self.tok.kind in ("op", "kw")

    # expressions ------------------------------------------------------------

    def expr(self) -> SExpr:
        t = self.tok
        if self.at("\\"):
            self.advance()
            params = [self.apat()]
            while not self.at("->"):
                params.append(self.apat())
            self.expect("->")
            return SLam(tuple(params), self.expr(), t.pos)
        if self.at("let"):
            self.advance()
            binds = [self.binding()]
            while self.at(";"):
                self.advance()
                if self.at("in"):
                    break
                binds.append(self.binding())
            self.expect("in")
            return SLet(tuple(binds), self.expr(), t.pos)
        if self.at("if"):
            self.advance()
            c = self.expr()
            self.expect("then")
            a = self.expr()
            self.expect("else")
            return SIf(c, a, self.expr(), t.pos)
        if self.at("case"):
            self.advance()
            scrut = self.expr()
            self.expect("of")
            self.expect("{")
            alts = []
            while not self.at("}"):
                p = self.pattern()
                self.expect("->")
                alts.append((p, self.expr()))
                if not self.at(";"):
                    break
                self.advance()
            self.expect("}")
            return SCase(scrut, tuple(alts), t.pos)
        if self.at("do"):
            self.advance()
            self.expect("{")
            stmts = []
            while not self.at("}"):
                stmts.append(self.stmt())
                if not self.at(";"):
                    break
                self.advance()
            self.expect("}")
            if not stmts:
                raise ParseError("empty do block", t.pos)
            return SDo(tuple(stmts), t.pos)
        return self.opexpr(0)

    def binding(self) -> SBind:
        t = self.tok
        if t.kind == "ident":
            name = self.advance().text
            params = []
            while not self.at("="):
                params.append(self.apat())
            self.expect("=")
            return SBind(name, tuple(params), self.expr())
        pat = self.pattern()
        self.expect("=")
        return SBind("", (), self.expr(), pat)

    def stmt(self) -> SStmt:
        t = self.tok
        if self.at("let"):
            self.advance()
            b = self.binding()
            return SStmt("let", None, SLet((b,), SUnit(t.pos), t.pos), t.pos)
        save = self.i
        try:
            pat = self.pattern()
            if self.at("<-"):
                self.advance()
                return SStmt("bind", pat, self.expr(), t.pos)
        except ParseError:
            pass
        self.i = save
        return SStmt("expr", None, self.expr(), t.pos)

    def opexpr(self, min_prec: int) -> SExpr:
        left = self.unary()
        while True:
            t = self.tok
            if t.kind == "tick":
                op, (prec, assoc) = t.text.strip("`"), _TICK_PREC
            elif t.kind == "op" and t.text in _BINOPS:
                op, (prec, assoc) = t.text, _BINOPS[t.text]
            else:
                return left
            if prec < min_prec:
                return left
            self.advance()
            nxt = prec + 1 if assoc in ("left", "none") else prec
            right = self.expr() if self.starts_block() else self.opexpr(nxt)
            if t.kind == "tick":
                left = SApp(SApp(SVar(op, t.pos), left, t.pos), right, t.pos)
            else:
                left = SBinOp(op, left, right, t.pos)

    def unary(self) -> SExpr:
        if self.at("-"):
            t = self.advance()
            return SNeg(self.opexpr(7), t.pos)
        if self.starts_block():
            return self.expr()
        return self.application()

    def application(self) -> SExpr:
        head = self.aexpr()
        while True:
            if self.starts_block():
                return SApp(head, self.expr(), head.pos)  # type: ignore[union-attr]
            if not self.starts_atom():
                return head
            head = SApp(head, self.aexpr(), head.pos)  # type: ignore[union-attr]

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "con", "int", "float", "qopen", "splice"):
            return True
        return t.kind == "op" and t.text == "("

    def aexpr(self) -> SExpr:
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return SVar(t.text, t.pos)
        if t.kind == "con":
            self.advance()
            if t.text in ("True", "False"):
                return SBool(t.text == "True", t.pos)
            return SCon(t.text, t.pos)
        if t.kind == "int":
            self.advance()
            return SInt(int(t.text), t.pos)
        if t.kind == "float":
            self.advance()
            return SFloat(float(t.text), t.pos)
        if t.kind == "qopen":
            self.advance()
            body = self.expr()
            if self.tok.kind != "qclose":
                self.fail(["||]"])
            self.advance()
            return SQuote(body, t.pos)
        if t.kind == "splice":
            self.advance()
            return SSplice(self.aexpr(), t.pos)
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return SUnit(t.pos)
            nt = self.tok
            if nt.kind == "op" and (nt.text in _BINOPS or nt.text == "-") and self.peek().text == ")":
                self.advance()
                self.advance()
                return SOpRef(nt.text, t.pos)
            if nt.kind == "tick" and self.peek().text == ")":
                self.advance()
                self.advance()
                return SVar(nt.text.strip("`"), t.pos)
            items = [self.expr()]
            while self.at(","):
                self.advance()
                items.append(self.expr())
            self.expect(")")
            return items[0] if len(items) == 1 else STuple(tuple(items), t.pos)
        self.fail(["expression"])
        raise AssertionError  # unreachable

    # patterns ---------------------------------------------------------------

    def pattern(self) -> Pattern:
        t = self.tok
        if t.kind == "con" and t.text not in ("True", "False"):
            self.advance()
            args = []
            while self.starts_apat():
                args.append(self.apat())
            return PCon(t.text, tuple(args))
        return self.apat()

    def starts_apat(self) -> bool:
        t = self.tok
        return t.kind in ("ident", "con") or (t.kind == "op" and t.text in ("_", "("))

    def apat(self) -> Pattern:
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return PVar(t.text)
        if t.kind == "op" and t.text == "_":
            self.advance()
            return PWild()
        if t.kind == "con":
            self.advance()
            if t.text in ("True", "False"):
                return PBool(t.text == "True")
            return PCon(t.text, ())
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return PUnit()
            items = [self.pattern()]
            while self.at(","):
                self.advance()
                items.append(self.pattern())
            self.expect(")")
            return items[0] if len(items) == 1 else PTuple(tuple(items))
        self.fail(["pattern"])
        raise AssertionError

    # types ------------------------------------------------------------------

    def type_(self) -> object:
        left = self.btype()
        if self.at("->"):
            self.advance()
            right = self.type_()
            if isinstance(left, (QtType, tuple)) or isinstance(right, (QtType, tuple)):
                # generation-stage arrow; kept only for documentation
                return ("meta-fun", left, right)
            return Fun(left, right)  # type: ignore[arg-type]
        return left

    def btype(self) -> object:
        t = self.tok
        if t.kind == "con" and t.text in ("Arr", "Vec", "Maybe", "Qt"):
            self.advance()
            arg = self.atype()
            if t.text == "Qt":
                return QtType(arg)
            if t.text == "Arr":
                if not type_vars(arg) and not is_representable(arg):  # type: ignore[arg-type]
                    raise ParseError("array elements must be representable", t.pos)
                return Array(arg)  # type: ignore[arg-type]
            if t.text == "Vec":
                return vec_type(arg)  # type: ignore[arg-type]
            return maybe_type(arg)  # type: ignore[arg-type]
        if t.kind == "con" and t.text == "Either":
            self.advance()
            a = self.atype()
            return Sum(a, self.atype())  # type: ignore[arg-type]
        return self.atype()

    def atype(self) -> object:
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return TVar(t.text)
        if t.kind == "con":
            base = {"Int": INT, "Float": FLOAT, "Bool": BOOL, "Unit": UNIT}.get(t.text)
            if base is not None:
                self.advance()
                return base
            if t.text in ("Arr", "Vec", "Maybe", "Qt", "Either"):
                return self.btype()
        if self.at("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return UNIT
            items = [self.type_()]
            while self.at(","):
                self.advance()
                items.append(self.type_())
            self.expect(")")
            out = items[-1]
            for it in reversed(items[:-1]):
                out = Prod(it, out)  # type: ignore[arg-type]
            return out
        self.fail(["type"])
        raise AssertionError

    # module -----------------------------------------------------------------

    def module(self, entry: str) -> SourceModule:
        defs: list[Definition] = []
        ascriptions: dict[str, object] = {}
        while self.tok.kind != "eof":
            if self.at(";"):
                self.advance()
                continue
            t = self.tok
            if t.kind != "ident":
                self.fail(["top-level definition"])
            start = self.i
            end = self._decl_end(start)
            sub = Parser(self.toks[start:end] + [Token("eof", "", self.toks[end].line, self.toks[end].col)])
            name = sub.advance().text
            if sub.at("::") or sub.at(":"):
                sub.advance()
                ty = sub.type_()
                if sub.tok.kind != "eof":
                    sub.fail(["end of declaration"])
                ascriptions[name] = ty
            else:
                params = []
                while sub.tok.kind == "ident":
                    params.append(sub.advance().text)
                sub.expect("=")
                body = sub.expr()
                if sub.tok.kind != "eof" and not sub.at(";"):
                    sub.fail(["end of declaration"])
                if any(d.name == name for d in defs):
                    raise ParseError(f"duplicate definition of {name!r}", t.pos)
                defs.append(Definition(name, tuple(params), body, None, t.pos))
            self.i = end
        out = []
        for d in defs:
            out.append(Definition(d.name, d.params, d.body, ascriptions.get(d.name), d.pos))
        for name in ascriptions:
            if not any(d.name == name for d in defs):
                raise ParseError(f"type signature for {name!r} lacks a definition")
        return SourceModule(tuple(out), entry)

    def _decl_end(self, start: int) -> int:
        depth = 0
        j = start + 1
        while self.toks[j].kind != "eof":
            t = self.toks[j]
            if t.text in ("(", "{") or t.kind == "qopen":
                depth += 1
            elif t.text in (")", "}") or t.kind == "qclose":
                depth -= 1
            elif t.col == 1 and depth <= 0:
                break
            j += 1
        return j


def parse_module(source: str, entry: str = "main") -> SourceModule:
    return Parser(tokenize(source)).module(entry)


def parse_expr(source: str) -> SExpr:
    p = Parser(tokenize(source))
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail(["end of input"])
    return e


def parse_type(source: str) -> ObjType:
    p = Parser(tokenize(source))
    ty = p.type_()
    if p.tok.kind != "eof":
        p.fail(["end of input"])
    if not isinstance(ty, (Fun, Prod, Sum, Array)) and not hasattr(ty, "kind"):
        raise ParseError("expected an object-language type")
    return ty  # type: ignore[return-value]


def parse_term(source: str) -> ObjTerm:
    """Parse object syntax (as printed by :func:`qfc.terms.pretty`) into a
    term; unbound names become free variables."""
    from .desugar import desugar_object

    return desugar_object(parse_expr(source), open_term=True)
