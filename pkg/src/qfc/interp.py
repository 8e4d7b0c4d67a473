"""Reference interpreter for object terms.

Call-by-need by default (let-bound terms and arguments become memoised
thunks); ``strategy="value"`` evaluates them eagerly instead. Int
arithmetic wraps at 32 bits and divides toward zero, like the generated C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .errors import DivByZeroInt, EvalError, EvalFuelExhausted, IxOutOfBounds
from .terms import (
    App, CONSTANTS, Case, Const, ConstApp, Fst, If, Inl, Inr, Lam, Let, Lit,
    ObjTerm, Pair, Snd, UnitTerm, Var,
)

DEFAULT_EVAL_FUEL = 10**7


@dataclass(frozen=True)
class SumVal:
    tag: int  # 0 = Inl, 1 = Inr
    value: Any


@dataclass(frozen=True)
class ArrVal:
    elems: tuple[Any, ...]

    def __len__(self) -> int:
        return len(self.elems)


@dataclass(frozen=True, eq=False)
class Closure:
    fn: Callable[[Any], Any]

    def __call__(self, arg: Any) -> Any:
        return self.fn(arg)


class Thunk:
    __slots__ = ("compute", "value", "done")

    def __init__(self, compute: Callable[[], Any]) -> None:
        self.compute = compute
        self.value: Any = None
        self.done = False

    def force(self) -> Any:
        if not self.done:
            self.value = force(self.compute())
            self.done = True
            self.compute = None  # type: ignore[assignment]
        return self.value


def force(v: Any) -> Any:
    while isinstance(v, Thunk):
        v = v.force()
    return v


def wrap32(n: int) -> int:
    return ((n + 2**31) % 2**32) - 2**31


def _trunc_div(a: int, b: int) -> int:
    if b == 0:
        raise DivByZeroInt("integer division by zero")
    q = abs(a) // abs(b)
    return wrap32(q if (a >= 0) == (b >= 0) else -q)


def _trunc_mod(a: int, b: int) -> int:
    if b == 0:
        raise DivByZeroInt("integer modulus by zero")
    return wrap32(a - b * _trunc_div(a, b))


def _float_div(a: float, b: float) -> float:
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _arith(op: str, a: Any, b: Any) -> Any:
    if _is_int(a) and _is_int(b):
        match op:
            case "+":
                return wrap32(a + b)
            case "-":
                return wrap32(a - b)
            case "*":
                return wrap32(a * b)
            case "/":
                return _trunc_div(a, b)
    a, b = float(a), float(b)
    match op:
        case "+":
            return a + b
        case "-":
            return a - b
        case "*":
            return a * b
    return _float_div(a, b)


class Interpreter:
    def __init__(self, fuel: int = DEFAULT_EVAL_FUEL, strategy: str = "need") -> None:
        self.fuel = fuel
        self.steps = 0
        self.lazy = strategy == "need"

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.fuel:
            raise EvalFuelExhausted(f"evaluation exceeded {self.fuel} steps")

    def delay(self, t: ObjTerm, env: dict[str, Any]) -> Any:
        if isinstance(t, (Var, Lit, UnitTerm, Lam)):
            return self.eval(t, env)
        if self.lazy:
            return Thunk(lambda: self.eval(t, env))
        return self.eval(t, env)

    def eval(self, t: ObjTerm, env: dict[str, Any]) -> Any:
        self.tick()
        match t:
            case Var(x):
                if x not in env:
                    raise EvalError(f"unbound variable {x!r}")
                return force(env[x])
            case Lit(kind, value):
                return float(value) if kind == "Float" else value
            case UnitTerm():
                return ()
            case Lam(x, body):
                return Closure(lambda arg: self.eval(body, {**env, x: arg}))
            case App(f, a):
                fv = self.eval(f, env)
                if not isinstance(fv, Closure):
                    raise EvalError("application of a non-function")
                return force(fv(self.delay(a, env)))
            case Let(x, m, n):
                return self.eval(n, {**env, x: self.delay(m, env)})
            case Pair(a, b):
                return (self.eval(a, env), self.eval(b, env))
            case Fst(a):
                return self.eval(a, env)[0]
            case Snd(a):
                return self.eval(a, env)[1]
            case Inl(a):
                return SumVal(0, self.eval(a, env))
            case Inr(a):
                return SumVal(1, self.eval(a, env))
            case Case(s, x, l, y, r):
                v = self.eval(s, env)
                if not isinstance(v, SumVal):
                    raise EvalError("case on a non-sum value")
                if v.tag == 0:
                    return self.eval(l, {**env, x: v.value})
                return self.eval(r, {**env, y: v.value})
            case If(c, a, b):
                cond = self.eval(c, env)
                return self.eval(a if cond else b, env)
            case ConstApp(name, args):
                return self.prim(name, [self.eval(a, env) for a in args])
            case Const(name):
                return self.curried(name, CONSTANTS[name].arity, [])
        raise EvalError(f"cannot evaluate {t!r}")

    def curried(self, name: str, k: int, got: list[Any]) -> Any:
        if len(got) == k:
            return self.prim(name, got)
        return Closure(lambda arg: self.curried(name, k, got + [force(arg)]))

    def call(self, f: Any, arg: Any) -> Any:
        f = force(f)
        if not isinstance(f, Closure):
            raise EvalError("application of a non-function")
        return force(f(arg))

    def prim(self, name: str, args: list[Any]) -> Any:
        match name:
            case "+" | "-" | "*" | "/":
                return _arith(name, args[0], args[1])
            case "==":
                return args[0] == args[1]
            case "<":
                return args[0] < args[1]
            case "sqrt":
                x = float(args[0])
                return math.sqrt(x) if x >= 0 else math.nan
            case "div":
                return _trunc_div(args[0], args[1])
            case "mod":
                return _trunc_mod(args[0], args[1])
            case "while":
                cond, step, state = args
                while self.call(cond, state):
                    self.tick()
                    state = self.call(step, state)
                return state
            case "mkArr":
                n, f = args
                if n < 0:
                    raise EvalError(f"mkArr with negative length {n}")
                return ArrVal(tuple(self.call(f, i) for i in range(n)))
            case "lnArr":
                return len(args[0].elems)
            case "ixArr":
                arr, i = args
                if not 0 <= i < len(arr.elems):
                    raise IxOutOfBounds(f"index {i} out of bounds for array of length {len(arr.elems)}")
                return arr.elems[i]
            case "save":
                return args[0]
            case "fix":
                f = args[0]
                cell: list[Any] = []
                knot = Thunk(lambda: self.call(f, cell[0]))
                cell.append(knot)
                return force(knot)
        raise EvalError(f"unknown constant {name}")


def to_runtime(v: Any) -> Any:
    """Convert Python data (lists for arrays) to runtime values."""
    match v:
        case list():
            return ArrVal(tuple(to_runtime(x) for x in v))
        case tuple() if len(v) == 2:
            return (to_runtime(v[0]), to_runtime(v[1]))
    return v


def interp(t: ObjTerm, args: Sequence[Any] = (), fuel: int = DEFAULT_EVAL_FUEL,
           strategy: str = "need") -> Any:
    """Evaluate ``t`` and apply it to ``args``."""
    ev = Interpreter(fuel, strategy)
    try:
        v = ev.eval(t, {})
        for a in args:
            v = ev.call(v, to_runtime(a))
    except RecursionError:
        raise EvalFuelExhausted("evaluation recursed too deeply") from None
    return v


def values_close(a: Any, b: Any, rel: float = 1e-6, abs_tol: float = 1e-9) -> bool:
    match a:
        case bool() | ():
            return a == b
        case int() if not isinstance(b, float):
            return a == b
        case float() | int():
            if not isinstance(b, (int, float)) or isinstance(b, bool):
                return False
            a, b = float(a), float(b)
            if math.isnan(a) or math.isnan(b):
                return math.isnan(a) and math.isnan(b)
            if math.isinf(a) or math.isinf(b):
                return a == b
            return abs(a - b) <= max(rel * max(abs(a), abs(b)), abs_tol)
        case tuple():
            return (isinstance(b, tuple) and len(a) == len(b)
                    and all(values_close(x, y, rel, abs_tol) for x, y in zip(a, b)))
        case ArrVal(elems):
            return (isinstance(b, ArrVal) and len(elems) == len(b.elems)
                    and all(values_close(x, y, rel, abs_tol) for x, y in zip(elems, b.elems)))
        case SumVal(tag, value):
            return isinstance(b, SumVal) and tag == b.tag and values_close(value, b.value, rel, abs_tol)
    return a == b


def show_value(v: Any) -> str:
    match v:
        case bool():
            return "True" if v else "False"
        case float():
            return repr(v)
        case ():
            return "()"
        case tuple():
            return f"({show_value(v[0])}, {show_value(v[1])})"
        case ArrVal(elems):
            return "[" + ", ".join(show_value(e) for e in elems) + "]"
        case SumVal(tag, value):
            return f"{'Inl' if tag == 0 else 'Inr'} {show_value(value)}"
        case Closure():
            return "<function>"
    return str(v)

