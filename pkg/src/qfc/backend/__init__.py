"""C backend: term optimisations, lowering and emission."""

from __future__ import annotations

from typing import Optional

from ..normalize import Strategy
from ..terms import ObjTerm, ObjType
from .cgen import CUnit, emit, lower
from .golden import c_alpha_equal, c_tokens
from .optimize import cse, eta_contract, inline_linear, optimize
from .runtime import RUNTIME_HEADER, write_runtime

__all__ = [
    "CUnit", "RUNTIME_HEADER", "backend_pipeline", "c_alpha_equal", "c_tokens", "cse",
    "emit", "eta_contract", "inline_linear", "lower", "optimize", "write_runtime",
]


def backend_pipeline(t: ObjTerm, entry: str = "prog",
                     strategy: Strategy | str = Strategy.NEED,
                     top_type: Optional[ObjType] = None) -> str:
    """Optimise a normal form and return C text for routine ``entry``."""
    return emit(lower(optimize(t, strategy), entry, top_type))
