"""Diagnostics with stable error codes."""

from __future__ import annotations

from typing import Optional


class QfError(Exception):
    """A user-facing error. ``code`` is stable across releases."""

    code = "E000"

    def __init__(self, message: str, pos: Optional[tuple[int, int]] = None) -> None:
        super().__init__(message)
        self.message = message
        self.pos = pos

    def render(self, filename: str = "<input>") -> str:
        line, col = self.pos or (0, 0)
        return f"{filename}:{line}:{col}: error[{self.code}]: {self.message}"


class ParseError(QfError):
    code = "E001"


class SugarError(QfError):
    code = "E002"


class UnboundName(QfError):
    code = "E101"


class TypeClash(QfError):
    code = "E102"


class SpliceOfNonQuote(QfError):
    code = "E103"


class SpliceOutsideQuote(QfError):
    code = "E104"


class MetaFuelExhausted(QfError):
    code = "E105"


class EntryNotQuoted(QfError):
    code = "E106"


class TypeMismatch(QfError):
    code = "E201"


class AmbiguousOverload(QfError):
    code = "E202"


class UnrepresentableInstance(QfError):
    code = "E203"


class BadEntryType(QfError):
    code = "E204"


class NormFuelExhausted(QfError):
    code = "E301"


class PropertyViolation(QfError):
    code = "E401"


class NotFirstOrder(QfError):
    code = "E501"


class ForbiddenConstant(QfError):
    code = "E502"


class UnsupportedLowering(QfError):
    code = "E503"


class IxOutOfBounds(QfError):
    code = "E601"


class DivByZeroInt(QfError):
    code = "E602"


class EvalFuelExhausted(QfError):
    code = "E603"


class EvalError(QfError):
    code = "E604"
