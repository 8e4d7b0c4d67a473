"""Surface syntax produced by the parser.

The same node set serves both stages: outside quotation brackets it is the
generation-stage language (after desugaring, :class:`Quote` nodes hold
object terms); inside brackets it is object syntax with sugar, which
:mod:`qfc.desugar` turns into :mod:`qfc.terms` nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .terms import ObjTerm, ObjType

Pos = tuple[int, int]


def _pos() -> Pos:
    return field(default=(0, 0), compare=False, repr=False)  # type: ignore[return-value]


# patterns -------------------------------------------------------------------


@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class PWild:
    pass


@dataclass(frozen=True)
class PUnit:
    pass


@dataclass(frozen=True)
class PTuple:
    items: tuple["Pattern", ...]


@dataclass(frozen=True)
class PCon:
    name: str
    args: tuple["Pattern", ...]


@dataclass(frozen=True)
class PBool:
    value: bool


Pattern = Union[PVar, PWild, PUnit, PTuple, PCon, PBool]


# expressions ------------------------------------------------------------------


@dataclass(frozen=True)
class SVar:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class SCon:
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class SInt:
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class SFloat:
    value: float
    pos: Pos = _pos()


@dataclass(frozen=True)
class SBool:
    value: bool
    pos: Pos = _pos()


@dataclass(frozen=True)
class SUnit:
    pos: Pos = _pos()


@dataclass(frozen=True)
class SApp:
    fun: "SExpr"
    arg: "SExpr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class SLam:
    params: tuple[Pattern, ...]
    body: "SExpr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class SBind:
    name: str
    params: tuple[Pattern, ...]
    expr: "SExpr"
    pattern: Optional[Pattern] = None


@dataclass(frozen=True)
class SLet:
    binds: tuple[SBind, ...]
    body: "SExpr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class SIf:
    cond: "SExpr"
    then: "SExpr"
    orelse: "SExpr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class SCase:
    scrut: "SExpr"
    alts: tuple[tuple[Pattern, "SExpr"], ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class STuple:
    items: tuple["SExpr", ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class SBinOp:
    op: str
    left: "SExpr"
    right: "SExpr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class SNeg:
    arg: "SExpr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class SOpRef:
    op: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class SQuote:
    body: "SExpr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class SSplice:
    expr: "SExpr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class SStmt:
    kind: str  # "bind" | "let" | "expr"
    pattern: Optional[Pattern]
    expr: "SExpr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class SDo:
    stmts: tuple[SStmt, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Quote:
    """Desugared quotation: an object term possibly containing splices."""

    body: ObjTerm
    pos: Pos = _pos()


SExpr = Union[SVar, SCon, SInt, SFloat, SBool, SUnit, SApp, SLam, SLet, SIf,
              SCase, STuple, SBinOp, SNeg, SOpRef, SQuote, SSplice, SDo, Quote]
MetaExpr = SExpr


# modules ------------------------------------------------------------------------


@dataclass(frozen=True)
class QtType:
    """Ascription ``Qt T``: a quoted term of object type ``T``."""

    inner: object


@dataclass(frozen=True)
class Definition:
    name: str
    params: tuple[str, ...]
    body: SExpr
    ascription: Optional[object] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class SourceModule:
    definitions: tuple[Definition, ...]
    entry: str = "main"

    def lookup(self, name: str) -> Optional[Definition]:
        for d in self.definitions:
            if d.name == name:
                return d
        return None

    def entry_type(self) -> Optional[ObjType]:
        d = self.lookup(self.entry)
        if d is None or d.ascription is None:
            return None
        asc = d.ascription
        return asc.inner if isinstance(asc, QtType) else asc  # type: ignore[return-value]
