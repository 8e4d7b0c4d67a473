"""The compiler pipeline, from source text to checked normal forms and C.

One :class:`Program` owns the fresh-name supply for everything derived
from it, so repeated runs over the same source are deterministic.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .backend import emit, lower, optimize
from .backend.cgen import CUnit
from .desugar import desugar
from .errors import EvalError, ForbiddenConstant, NotFirstOrder
from .interp import DEFAULT_EVAL_FUEL, ArrVal, interp
from .normalize import DEFAULT_FUEL, NormStats, Strategy, normalize, normalize_to
from .parser import parse_module
from .stage0 import DEFAULT_META_FUEL, run_entry
from .syntax import SourceModule
from .terms import (
    Array, Base, NameSupply, ObjTerm, ObjType, Prod, show_type, using_supply,
)
from .typecheck import TypedTerm, check_entry_type, check_permitted, infer
from .verify import (
    ORACLE_SEED, PropertyReport, Witness, arg_types, check_first_order, check_sharpened,
    check_subformula, oracle_compare,
)

PROPERTIES = ("subformula", "sharpened", "first-order", "permitted")


@dataclass
class Program:
    """A generated, typechecked object term and where it came from."""

    filename: str
    module: SourceModule
    typed: TypedTerm
    supply: NameSupply = field(default_factory=NameSupply, repr=False)

    @property
    def term(self) -> ObjTerm:
        return self.typed.term

    @property
    def top_type(self) -> ObjType:
        return self.typed.top_type


def load(source: str, filename: str = "<input>", main: str = "main",
         meta_fuel: int = DEFAULT_META_FUEL, use_prelude: bool = True) -> Program:
    """Parse, run the generation stage for ``main`` and typecheck the result."""
    supply = NameSupply()
    with using_supply(supply):
        module = desugar(parse_module(source, entry=main))
        term = run_entry(module, meta_fuel, use_prelude)
        expected = module.entry_type()
        if isinstance(expected, tuple):  # a generation-stage type
            expected = None
        typed = infer(term, expected=expected)
        check_entry_type(typed.top_type)
    return Program(filename, module, typed, supply)


def load_file(path: str, main: str = "main", meta_fuel: int = DEFAULT_META_FUEL) -> Program:
    with open(path, encoding="utf-8") as fh:
        return load(fh.read(), path, main, meta_fuel)


def normal_form(p: Program, strategy: Strategy | str = Strategy.NEED,
                fuel: int = DEFAULT_FUEL) -> tuple[ObjTerm, NormStats]:
    with using_supply(p.supply):
        return normalize(p.term, strategy, fuel)


def dump_phase(p: Program, phase: int, strategy: Strategy | str = Strategy.NEED,
               fuel: int = DEFAULT_FUEL) -> ObjTerm:
    with using_supply(p.supply):
        return normalize_to(p.term, phase, strategy, fuel)


def check(p: Program, properties: Iterable[str] = PROPERTIES,
          strategy: Strategy | str = Strategy.NEED, fuel: int = DEFAULT_FUEL) -> list[PropertyReport]:
    """Property reports for the normal form of ``p``."""
    nf, _ = normal_form(p, strategy, fuel)
    tt = infer(nf, expected=p.top_type)
    reports = []
    for name in properties:
        match name:
            case "subformula":
                reports.append(check_subformula(tt))
            case "sharpened":
                reports.append(check_sharpened(tt))
            case "first-order":
                reports.append(check_first_order(tt))
            case "permitted":
                reports.append(PropertyReport("permitted", tuple(
                    Witness(v.path, None, v.message) for v in check_permitted(tt))))
            case _:
                raise ValueError(f"unknown property {name!r}")
    return reports


def oracle(p: Program, samples: int = 100, seed: int = ORACLE_SEED,
           strategy: Strategy | str = Strategy.NEED, fuel: int = DEFAULT_FUEL) -> PropertyReport:
    """Compare the generated term with its normal form on random inputs."""
    nf, _ = normal_form(p, strategy, fuel)
    mode = Strategy.parse(strategy).value
    return oracle_compare(p.term, nf, samples, seed, top_type=p.top_type, strategy=mode)


def compile_unit(p: Program, entry: str = "prog", strategy: Strategy | str = Strategy.NEED,
                 fuel: int = DEFAULT_FUEL) -> CUnit:
    """Normalise, check the first-order and permitted-constant properties,
    optimise and lower. Raises instead of producing partial output."""
    nf, _ = normal_form(p, strategy, fuel)
    tt = infer(nf, expected=p.top_type)
    report = check_first_order(tt)
    if not report.ok:
        raise NotFirstOrder("normal form is not first-order:\n" + report.render())
    bad = check_permitted(tt)
    if bad:
        raise ForbiddenConstant("; ".join(v.message for v in bad))
    with using_supply(p.supply):
        return lower(optimize(nf, strategy), entry, p.top_type)


def compile_c(p: Program, entry: str = "prog", strategy: Strategy | str = Strategy.NEED,
              fuel: int = DEFAULT_FUEL) -> str:
    return emit(compile_unit(p, entry, strategy, fuel))


# ---------------------------------------------------------------------------
# evaluation from the command line
# ---------------------------------------------------------------------------


def parse_arg(text: str, ty: ObjType) -> Any:
    """Read a literal argument of type ``ty``: ``3``, ``2.5``, ``True``,
    ``(1, 2.0)`` or ``[1.0, 2.0]``."""
    try:
        raw = ast.literal_eval(text.strip().replace("true", "True").replace("false", "False"))
    except (ValueError, SyntaxError):
        raise EvalError(f"cannot read {text!r} as {show_type(ty)}") from None
    return _convert(raw, ty, text)


def _convert(raw: Any, ty: ObjType, text: str) -> Any:
    match ty:
        case Base("Int") if isinstance(raw, int) and not isinstance(raw, bool):
            return raw
        case Base("Float") if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return float(raw)
        case Base("Bool") if isinstance(raw, bool):
            return raw
        case Base("Unit") if raw == ():
            return ()
        case Prod(a, b) if isinstance(raw, tuple) and len(raw) == 2:
            return (_convert(raw[0], a, text), _convert(raw[1], b, text))
        case Array(elem) if isinstance(raw, (list, tuple)):
            return ArrVal(tuple(_convert(x, elem, text) for x in raw))
    raise EvalError(f"cannot read {text!r} as {show_type(ty)}")


def evaluate(p: Program, args: Sequence[str], normalized: bool = True,
             strategy: Strategy | str = Strategy.NEED, fuel: int = DEFAULT_FUEL,
             eval_fuel: int = DEFAULT_EVAL_FUEL) -> Any:
    params, _ = arg_types(p.top_type)
    if len(args) != len(params):
        raise EvalError(f"expected {len(params)} argument(s), got {len(args)}")
    values = [parse_arg(a, ty) for a, ty in zip(args, params)]
    term = normal_form(p, strategy, fuel)[0] if normalized else p.term
    mode = Strategy.parse(strategy).value
    return interp(term, values, eval_fuel, mode)
