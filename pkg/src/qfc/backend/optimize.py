"""Term-level backend passes: sharing of common subexpressions, eta
contraction for conditionals and arrays, and order-preserving linear
inlining of let bindings."""

from __future__ import annotations

from typing import Hashable

from ..normalize import Strategy, is_expression, leads, normalize, phase1
from ..terms import (
    ConstApp, If, Lam, Let, Lit, ObjTerm, Var,
    alpha_eq, child_binders, children, free_vars, is_value, occurrences, rebuild, subst,
)

MAX_ROUNDS = 20

# constants whose applications read as plain C expressions
def canonical(t: ObjTerm) -> Hashable:
    """A hashable key equal for alpha-equivalent terms.

    Bound variables become de Bruijn levels; float literals are keyed by
    ``repr`` so that ``0.0`` and ``-0.0`` stay apart.
    """

    def go(t: ObjTerm, env: dict[str, int], depth: int) -> Hashable:
        match t:
            case Var(x):
                return ("v", env[x]) if x in env else ("f", x)
            case Lit(kind, value):
                return ("l", kind, repr(value))
        kids = []
        for i, c in enumerate(children(t)):
            bound = child_binders(t, i)
            inner = env
            if bound:
                inner = {**env, **{x: depth + j for j, x in enumerate(bound)}}
            kids.append(go(c, inner, depth + len(bound)))
        tag = t.name if isinstance(t, ConstApp) else type(t).__name__
        return (tag, tuple(kids)) if kids else (tag, repr(t))

    return go(t, {}, 0)


# ---------------------------------------------------------------------------
# common subexpressions
# ---------------------------------------------------------------------------


def cse(t: ObjTerm) -> ObjTerm:
    """Bind repeated computations once.

    The term is first put in A-normal form so every computation has a name;
    a let whose right-hand side repeats one already bound in scope is then
    replaced by the earlier variable. Only bindings that dominate the
    repeat are reused, so nothing moves out of a branch or a lambda.
    """
    return _share(phase1(t), {})


def _share(t: ObjTerm, avail: dict[Hashable, str]) -> ObjTerm:
    match t:
        case Let(x, m, n):
            m = _share(m, avail)
            if not is_value(m):
                key = canonical(m)
                if key in avail:
                    return _share(subst(n, x, Var(avail[key])), avail)
                inner = _forget(avail, (x,))
                inner[key] = x
                return Let(x, m, _share(n, inner))
            return Let(x, m, _share(n, _forget(avail, (x,))))
    kids = children(t)
    if not kids:
        return t
    new = []
    for i, c in enumerate(kids):
        bound = child_binders(t, i)
        new.append(_share(c, _forget(avail, bound) if bound else avail))
    return rebuild(t, tuple(new))


def _forget(avail: dict[Hashable, str], bound: tuple[str, ...]) -> dict[Hashable, str]:
    """Drop entries a new binder would shadow (its key or its name)."""
    if not bound:
        return dict(avail)
    out = {}
    for key, name in avail.items():
        if name in bound or any(("f", x) in _free_keys(key) for x in bound):
            continue
        out[key] = name
    return out


def _free_keys(key: Hashable) -> set[Hashable]:
    out: set[Hashable] = set()
    stack = [key]
    while stack:
        k = stack.pop()
        if isinstance(k, tuple):
            if len(k) == 2 and k[0] == "f":
                out.add(k)
            else:
                stack.extend(k)
    return out


# ---------------------------------------------------------------------------
# eta contraction
# ---------------------------------------------------------------------------


def eta_contract(t: ObjTerm) -> ObjTerm:
    """Apply ``if L then M else M -> M`` and
    ``mkArr (lnArr M) (\\i -> ixArr M i) -> M`` everywhere.

    A length given by a variable let-bound to ``lnArr M`` counts as
    ``lnArr M``, since A-normal form names it.
    """
    return _eta(t, {})


def _eta(t: ObjTerm, lens: dict[str, ObjTerm]) -> ObjTerm:
    match t:
        case Let(x, m, n):
            m = _eta(m, lens)
            inner = _drop(lens, x)
            if isinstance(m, ConstApp) and m.name == "lnArr":
                inner[x] = m.args[0]
            return Let(x, m, _eta(n, inner))
    kids = children(t)
    if kids:
        new = []
        for i, c in enumerate(kids):
            inner = lens
            for x in child_binders(t, i):
                inner = _drop(inner, x)
            new.append(_eta(c, inner))
        t = rebuild(t, tuple(new))
    match t:
        case If(_, a, b) if canonical(a) == canonical(b):
            return a
        case ConstApp("mkArr", (n, Lam(i, ConstApp("ixArr", (arr, Var(j)))))) if (
                i == j and i not in free_vars(arr) and _length_of(n, lens, arr)):
            return arr
    return t


def _length_of(n: ObjTerm, lens: dict[str, ObjTerm], arr: ObjTerm) -> bool:
    match n:
        case ConstApp("lnArr", (m,)):
            return alpha_eq(m, arr)
        case Var(x) if x in lens:
            return alpha_eq(lens[x], arr)
    return False


def _drop(lens: dict[str, ObjTerm], x: str) -> dict[str, ObjTerm]:
    return {k: v for k, v in lens.items() if k != x and x not in free_vars(v)}


# ---------------------------------------------------------------------------
# linear inlining
# ---------------------------------------------------------------------------


def inline_linear(t: ObjTerm) -> ObjTerm:
    """Inline ``let x = M in N`` when ``x`` is used exactly once, as the
    very next thing evaluated.

    The use must be in the right-hand side of the next binding (or in the
    body when no binding follows), outside lambdas and branches, and no
    other operation may run before it, so evaluation order is unchanged.
    Only expression-shaped ``M`` (arithmetic, comparisons, array reads,
    projections) is inlined.
    """
    kids = children(t)
    if kids:
        t = rebuild(t, tuple(inline_linear(c) for c in kids))
    match t:
        case Let(x, m, n) if is_expression(m) and occurrences(n, x) == 1 and _next_use(x, n):
            return subst(n, x, m)
    return t


def _next_use(x: str, n: ObjTerm) -> bool:
    if isinstance(n, Let):
        n = n.bound
    return leads(x, n) is True


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def optimize(t: ObjTerm, strategy: Strategy | str = Strategy.NEED,
             max_rounds: int = MAX_ROUNDS) -> ObjTerm:
    """CSE, renormalisation and eta contraction to a fixed point, then linear inlining."""
    for _ in range(max_rounds):
        new, _ = normalize(cse(t), strategy)
        new = eta_contract(new)
        if alpha_eq(new, t):
            break
        t = new
    return inline_linear(t)
