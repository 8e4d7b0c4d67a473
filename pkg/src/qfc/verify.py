"""Checks of the subformula, sharpened subformula and first-order properties,
plus differential comparison of two terms under the reference interpreter."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from .errors import QfError
from .interp import ArrVal, interp, show_value, values_close
from .terms import (
    App, Array, Base, Case, Const, ConstApp, Fst, Fun, Lam, Let, Lit, ObjTerm, ObjType,
    Prod, Snd, Var, child_binders, children, free_vars, is_representable, pretty,
    proper_subformulas, show_type, subformulas,
)
from .typecheck import TypedTerm, infer

Path = tuple[int, ...]

ORACLE_SEED = 0xFE1D5


@dataclass(frozen=True)
class Witness:
    path: Path
    type: Optional[ObjType]
    reason: str

    def render(self) -> str:
        ty = "" if self.type is None else f" : {show_type(self.type)}"
        loc = "/".join(map(str, self.path)) or "root"
        return f"at {loc}{ty}: {self.reason}"


@dataclass(frozen=True)
class PropertyReport:
    name: str
    witnesses: tuple[Witness, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.witnesses

    def render(self) -> str:
        head = f"{self.name}: {'ok' if self.ok else 'FAILED'}"
        return "\n".join([head] + [f"  {w.render()}" for w in self.witnesses])


def _typed(t: TypedTerm | ObjTerm) -> TypedTerm:
    return t if isinstance(t, TypedTerm) else infer(t)


def _walk(tt: TypedTerm) -> Iterable[tuple[Path, ObjTerm, dict[str, ObjType]]]:
    """Pre-order subterms with the types of the variables bound around them."""

    def go(t: ObjTerm, path: Path, env: dict[str, ObjType]):
        yield path, t, env
        for i, c in enumerate(children(t)):
            bound = child_binders(t, i)
            inner = env
            if bound:
                inner = dict(env)
                for x in bound:
                    inner[x] = _binder_type(tt, t, path, i, x)
            yield from go(c, path + (i,), inner)

    yield from go(tt.term, (), dict(tt.env))


def _binder_type(tt: TypedTerm, t: ObjTerm, path: Path, index: int, x: str) -> ObjType:
    match t:
        case Lam():
            ty = tt.types[path]
            assert isinstance(ty, Fun)
            return ty.dom
        case Let():
            return tt.types[path + (0,)]
        case Case():
            sty = tt.types[path + (0,)]
            return sty.left if index == 1 else sty.right  # type: ignore[union-attr]
    raise AssertionError("not a binder")


def _constant_subformulas(tt: TypedTerm) -> set[ObjType]:
    out: set[ObjType] = set()
    for path, t, _ in _walk(tt):
        match t:
            case ConstApp(_, args):
                arg_types = tuple(tt.types[path + (i,)] for i in range(len(args)))
                out |= t.sig.instance_subformulas(arg_types, tt.types[path])
            case Const() | Lit():
                # a bare constant or literal: arity-zero constant of its own type
                out |= subformulas(tt.types[path])
    return out


def check_subformula(t: TypedTerm | ObjTerm) -> PropertyReport:
    """Every subterm's type is a subformula of the top type, of an
    environment type, or of a constant instance in the term."""
    tt = _typed(t)
    allowed = set(subformulas(tt.top_type)) | _constant_subformulas(tt)
    for _, ty in tt.env:
        allowed |= subformulas(ty)
    witnesses = [
        Witness(path, tt.types[path], f"type not a subformula (in {_short(sub)})")
        for path, sub, _ in _walk(tt) if tt.types[path] not in allowed
    ]
    return PropertyReport("subformula", tuple(witnesses))


def _short(t: ObjTerm, limit: int = 50) -> str:
    s = pretty(t)
    return s if len(s) <= limit else s[:limit - 3] + "..."


def check_sharpened(t: TypedTerm | ObjTerm) -> PropertyReport:
    """Proper subterms outside constant applications (and not free
    variables) have proper subformulas of the top or environment types.

    Arguments of constant applications are checked the same way, each
    against its own argument type and the types of its free variables.
    A constant application acts as a hypothesis, like a free variable: a
    variable let-bound to one is skipped, and a projection or application
    chain headed by one may have proper subformulas of its type.
    """
    tt = _typed(t)
    witnesses: list[Witness] = []

    def check(root: Path, top: ObjType, env: dict[str, ObjType]) -> None:
        sub = _at(tt.term, root)
        allowed = set(proper_subformulas(top))
        for x in free_vars(sub):
            if x in env:
                allowed |= proper_subformulas(env[x])

        def go(t: ObjTerm, path: Path, scope: dict[str, ObjType], local: frozenset[str]) -> None:
            if isinstance(t, (ConstApp, Lit, Const)):
                if isinstance(t, ConstApp):
                    for i in range(len(t.args)):
                        check(path + (i,), tt.types[path + (i,)], scope)
                return
            hypothesis = isinstance(t, Var) and t.name not in local
            ty = tt.types[path]
            if (path != root and not hypothesis and ty not in allowed
                    and not _from_hypothesis(tt, t, path, ty, local)):
                witnesses.append(Witness(path, ty, f"not a proper subformula (in {_short(t)})"))
            for i, c in enumerate(children(t)):
                inner, inner_local = scope, local
                bound = child_binders(t, i)
                if bound:
                    inner = dict(scope)
                    for x in bound:
                        inner[x] = _binder_type(tt, t, path, i, x)
                    if not (isinstance(t, Let) and isinstance(t.bound, ConstApp)):
                        inner_local = local | set(bound)
                    else:
                        inner_local = local - set(bound)
                go(c, path + (i,), inner, inner_local)

        go(sub, root, env, frozenset())

    check((), tt.top_type, dict(tt.env))
    return PropertyReport("sharpened", tuple(_dedupe(witnesses)))


def _from_hypothesis(tt: TypedTerm, t: ObjTerm, path: Path, ty: ObjType,
                     local: frozenset[str]) -> bool:
    """Is ``t`` an elimination chain on a hypothesis (a constant application
    or a variable naming one) whose type has ``ty`` as a proper subformula?"""
    if not isinstance(t, (Fst, Snd, App)):
        return False
    while isinstance(t, (Fst, Snd, App)):
        t = t.arg if isinstance(t, (Fst, Snd)) else t.fun
        path = path + (0,)
    head = isinstance(t, ConstApp) or (isinstance(t, Var) and t.name not in local)
    return head and ty in proper_subformulas(tt.types[path])


def _dedupe(ws: list[Witness]) -> list[Witness]:
    seen: set[Path] = set()
    out = []
    for w in ws:
        if w.path not in seen:
            seen.add(w.path)
            out.append(w)
    return out


def _at(t: ObjTerm, path: Path) -> ObjTerm:
    for i in path:
        t = children(t)[i]
    return t


def check_first_order(t: TypedTerm | ObjTerm) -> PropertyReport:
    """Every subterm is representable or a lambda ``\\xs -> N`` whose binders
    and body are representable."""
    tt = _typed(t)
    witnesses = []
    for path, sub, _ in _walk(tt):
        ty = tt.types[path]
        if is_representable(ty):
            continue
        if isinstance(sub, Lam):
            body_path, body = path, sub
            binder_types = []
            while isinstance(body, Lam):
                fty = tt.types[body_path]
                assert isinstance(fty, Fun)
                binder_types.append(fty.dom)
                body_path, body = body_path + (0,), body.body
            bad = [b for b in binder_types if not is_representable(b)]
            if not bad and is_representable(tt.types[body_path]):
                continue
            reason = "lambda with non-representable binder or body"
        else:
            reason = "non-representable subterm that is not a lambda"
        witnesses.append(Witness(path, ty, f"{reason} (in {_short(sub)})"))
    return PropertyReport("first-order", tuple(witnesses))


def check_all(t: TypedTerm | ObjTerm) -> list[PropertyReport]:
    tt = _typed(t)
    return [check_subformula(tt), check_sharpened(tt), check_first_order(tt)]


# ---------------------------------------------------------------------------
# differential oracle
# ---------------------------------------------------------------------------


def arg_types(ty: ObjType) -> tuple[list[ObjType], ObjType]:
    params = []
    while isinstance(ty, Fun):
        params.append(ty.dom)
        ty = ty.cod
    return params, ty


def sample_value(ty: ObjType, rng: random.Random, in_array: bool = False) -> Any:
    """Random input of a representable type.

    Floats are drawn from +-[0.5, 2] (away from zero), Ints from [0, 30];
    array elements come from [0, 4] and lengths from [0, 64].
    """
    match ty:
        case Base("Int"):
            return rng.randint(0, 4) if in_array else rng.randint(0, 30)
        case Base("Float"):
            if in_array:
                return rng.uniform(0.0, 4.0)
            return rng.choice((-1.0, 1.0)) * rng.uniform(0.5, 2.0)
        case Base("Bool"):
            return rng.random() < 0.5
        case Base("Unit"):
            return ()
        case Prod(a, b):
            return (sample_value(a, rng, in_array), sample_value(b, rng, in_array))
        case Array(elem):
            n = rng.randint(0, 64)
            return ArrVal(tuple(sample_value(elem, rng, True) for _ in range(n)))
    raise ValueError(f"cannot sample values of type {show_type(ty)}")


def sample_args(ty: ObjType, samples: int, seed: int = ORACLE_SEED) -> list[list[Any]]:
    rng = random.Random(seed)
    params, _ = arg_types(ty)
    return [[sample_value(p, rng) for p in params] for _ in range(samples)]


def oracle_compare(a: ObjTerm, b: ObjTerm, samples: int = 100, seed: int = ORACLE_SEED,
                   rel: float = 1e-6, abs_tol: float = 1e-9,
                   top_type: Optional[ObjType] = None,
                   strategy: str = "need") -> PropertyReport:
    """Run both terms on the same random arguments and compare results."""
    ty = top_type if top_type is not None else infer(a).top_type
    witnesses = []
    for args in sample_args(ty, samples, seed):
        results = []
        for t in (a, b):
            try:
                results.append(("ok", interp(t, args, strategy=strategy)))
            except QfError as e:
                results.append(("error", e.code))
        (ka, va), (kb, vb) = results
        same = ka == kb and (va == vb if ka == "error" else values_close(va, vb, rel, abs_tol))
        if not same:
            shown = ", ".join(show_value(x) for x in args)
            witnesses.append(Witness((), None, f"args ({shown}): {_show(ka, va)} vs {_show(kb, vb)}"))
    return PropertyReport("oracle", tuple(witnesses))


def _show(kind: str, v: Any) -> str:
    return f"error {v}" if kind == "error" else show_value(v)

