"""Normalisation to a form with the subformula property.

``preprocess`` saturates constants. Phase 1 names non-value operands with
lets (A-normal form), phase 2 applies beta and commuting conversions until
none apply, and phase 3 drops unused lets (skipped for call-by-value).

Phase 2 also has administrative let rules: re-association, ``let x = M in
x``, commuting a let-bound conditional into its branches when the body
eliminates it, and writing a single-use expression back into the
constant operand that consumes it next.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .errors import NormFuelExhausted
from .terms import (
    App, CONSTANTS, Case, Const, ConstApp, Fst, If, Inl, Inr, Lam, Let, Lit,
    ObjTerm, Pair, Snd, TRUE, FALSE, UnitTerm, Var, _avoid, apps, avoid_names, children,
    free_vars, fresh, is_value, lams, occurrences, rebuild, rename, size, subst,
)

DEFAULT_FUEL = 10**6


class Strategy(enum.Enum):
    NEED = "need"
    VALUE = "value"

    @classmethod
    def parse(cls, s: "str | Strategy") -> "Strategy":
        return s if isinstance(s, Strategy) else cls(s)


@dataclass
class NormStats:
    steps: dict[int, int] = field(default_factory=lambda: {1: 0, 2: 0, 3: 0})
    rules: Counter = field(default_factory=Counter)
    fuel: int = DEFAULT_FUEL
    size: int = 0

    @property
    def total(self) -> int:
        return sum(self.steps.values())

    def tick(self, phase: int, rule: str) -> None:
        self.steps[phase] += 1
        self.rules[rule] += 1
        if self.total > self.fuel:
            raise NormFuelExhausted(
                f"normalisation exceeded {self.fuel} steps (phase {phase}, rule {rule})")


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------


def _spine(t: ObjTerm) -> tuple[ObjTerm, list[ObjTerm]]:
    args: list[ObjTerm] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


def preprocess(t: ObjTerm) -> ObjTerm:
    """Saturate every constant, eta-expanding under-applied occurrences."""
    match t:
        case App() | Const():
            head, args = _spine(t)
            if isinstance(head, Const):
                return _saturate(head.name, [preprocess(a) for a in args])
            return apps(preprocess(head), *(preprocess(a) for a in args))
    kids = children(t)
    if not kids:
        return t
    return rebuild(t, tuple(preprocess(c) for c in kids))


def _saturate(name: str, args: list[ObjTerm]) -> ObjTerm:
    k = CONSTANTS[name].arity
    if len(args) >= k:
        return apps(ConstApp(name, tuple(args[:k])), *args[k:])
    # name non-value arguments outside the new lambda so they are not re-evaluated
    binds: list[tuple[str, ObjTerm]] = []
    atoms: list[ObjTerm] = []
    for a in args:
        if is_value(a):
            atoms.append(a)
        else:
            v = fresh("m")
            binds.append((v, a))
            atoms.append(Var(v))
    xs = [fresh("c") for _ in range(k - len(args))]
    out = lams(xs, ConstApp(name, tuple(atoms) + tuple(Var(x) for x in xs)))
    for v, a in reversed(binds):
        out = Let(v, a, out)
    return out


# ---------------------------------------------------------------------------
# phase 1: let-insertion
# ---------------------------------------------------------------------------


class _Phase1:
    def __init__(self, stats: NormStats) -> None:
        self.stats = stats

    def let(self, x: str, m: ObjTerm, n: ObjTerm) -> ObjTerm:
        if isinstance(m, Let):
            # let x = (let y = L in M) in N  ~>  let y' = L in let x = M in N
            self.stats.tick(1, "let-assoc")
            y = fresh(m.binder)
            return Let(y, m.bound, self.let(x, rename(m.body, m.binder, y), n))
        return Let(x, m, n)

    def name_all(self, operands: list[ObjTerm], build: Callable[[list[ObjTerm]], ObjTerm]) -> ObjTerm:
        binds: list[tuple[str, ObjTerm]] = []
        atoms: list[ObjTerm] = []
        for op in operands:
            if is_value(op):
                atoms.append(op)
            else:
                self.stats.tick(1, "name")
                v = fresh("v")
                binds.append((v, op))
                atoms.append(Var(v))
        out = build(atoms)
        for v, op in reversed(binds):
            out = self.let(v, op, out)
        return out

    def go(self, t: ObjTerm) -> ObjTerm:
        match t:
            case Lam(x, body):
                return Lam(x, self.go(body))
            case Let(x, m, n):
                return self.let(x, self.go(m), self.go(n))
            case App(f, a):
                f2, a2 = self.go(f), self.go(a)
                if is_value(a2):
                    return App(f2, a2)
                if is_value(f2):
                    return self.name_all([a2], lambda xs: App(f2, xs[0]))
                # keep left-to-right order: the head is named before the argument
                return self.name_all([f2, a2], lambda xs: App(xs[0], xs[1]))
            case ConstApp(name, args):
                return self.name_all([self.go(a) for a in args],
                                     lambda xs: ConstApp(name, tuple(xs)))
            case Pair(a, b):
                return self.name_all([self.go(a), self.go(b)], lambda xs: Pair(xs[0], xs[1]))
            case Inl(a, annot):
                return self.name_all([self.go(a)], lambda xs: Inl(xs[0], annot))
            case Inr(a, annot):
                return self.name_all([self.go(a)], lambda xs: Inr(xs[0], annot))
            case Fst(a):
                return Fst(self.go(a))
            case Snd(a):
                return Snd(self.go(a))
            case Case(s, x, l, y, r):
                return Case(self.go(s), x, self.go(l), y, self.go(r))
            case If(c, a, b):
                return If(self.go(c), self.go(a), self.go(b))
        return t


def phase1(t: ObjTerm, stats: NormStats | None = None) -> ObjTerm:
    return _Phase1(stats or NormStats(fuel=10**12)).go(t)


# ---------------------------------------------------------------------------
# phase 2: beta and commuting conversions
# ---------------------------------------------------------------------------


def head_uses(x: str, t: ObjTerm) -> bool:
    """Does ``x`` occur free as the subject of an eliminator in ``t``?"""
    if x not in free_vars(t):
        return False
    match t:
        case App(Var(y), _) | Fst(Var(y)) | Snd(Var(y)) if y == x:
            return True
        case Case(Var(y), _, _, _, _) | If(Var(y), _, _) if y == x:
            return True
        case Lam(y, _) if y == x:
            return False
        case Let(y, m, _) if y == x:
            return head_uses(x, m)
        case Case(s, y, l, z, r):
            return (head_uses(x, s) or (y != x and head_uses(x, l))
                    or (z != x and head_uses(x, r)))
    return any(head_uses(x, c) for c in children(t))


# constants whose applications read like expressions: no loops, arrays
# built or barriers, so moving one to its single use changes nothing
EXPR_CONSTANTS = frozenset({"+", "-", "*", "/", "==", "<", "sqrt", "div", "mod", "lnArr", "ixArr"})


def is_expression(t: ObjTerm) -> bool:
    """Atoms, projections and expression constants applied to expressions."""
    match t:
        case Var() | Lit():
            return True
        case ConstApp(name, args):
            return name in EXPR_CONSTANTS and all(is_expression(a) for a in args)
        case Fst(a) | Snd(a):
            return is_expression(a)
    return False


def leads(x: str, t: ObjTerm) -> bool | None:
    """Walking ``t`` in evaluation order: True if ``x`` is reached before
    any operation runs, False if an operation (or a branch) comes first,
    None if ``t`` neither mentions ``x`` nor computes anything."""
    match t:
        case Var(y):
            return True if x == y else None
        case Lit() | UnitTerm():
            return None
        case Lam():
            return False if x in free_vars(t) else None
        case Let():
            return False
        case If(c, _, _) | Case(c, _, _, _, _):
            first = leads(x, c)
            return False if first is None else first
    for c in children(t):
        first = leads(x, c)
        if first is not None:
            return first
    if isinstance(t, (Pair, Inl, Inr)):
        return None
    return False


def _in_operand(x: str, t: ObjTerm) -> bool:
    """Is ``x`` reached from the root of ``t`` through constant operands,
    projections and conditions only?"""
    match t:
        case Var(y):
            return x == y
        case ConstApp(_, args):
            return any(_in_operand(x, a) for a in args)
        case Fst(a) | Snd(a) | If(a, _, _):
            return _in_operand(x, a)
    return False


def linear_operand(x: str, m: ObjTerm, n: ObjTerm) -> bool:
    """``let x = m in n`` where ``m`` is an expression used once, as an
    operand of the very next computation."""
    if not is_expression(m) or occurrences(n, x) != 1:
        return False
    target = n.bound if isinstance(n, Let) else n
    return _in_operand(x, target) and leads(x, target) is True


class _Phase2:
    def __init__(self, stats: NormStats) -> None:
        self.stats = stats

    def tick(self, rule: str) -> None:
        self.stats.tick(2, rule)

    def nf(self, t: ObjTerm) -> ObjTerm:
        match t:
            case Lam(x, body):
                return Lam(x, self.nf(body))
            case Let(x, m, n):
                return self.let(x, self.nf(m), n)
            case App(f, a):
                return self.app(self.nf(f), self.nf(a))
            case Fst(a):
                return self.proj(True, self.nf(a))
            case Snd(a):
                return self.proj(False, self.nf(a))
            case Case(s, x, l, y, r):
                return self.case(self.nf(s), x, l, y, r)
            case If(c, a, b):
                return self.cond(self.nf(c), a, b)
        kids = children(t)
        if not kids:
            return t
        return rebuild(t, tuple(self.nf(c) for c in kids))

    # let ----------------------------------------------------------------------

    def let(self, x: str, m: ObjTerm, n: ObjTerm) -> ObjTerm:
        """``let x = m in n`` with ``m`` normal and ``n`` not yet normalised."""
        if is_value(m):
            self.tick("beta-let")
            return self.nf(subst(n, x, m))
        if isinstance(m, Let):
            self.tick("let-assoc")
            y, body = m.binder, m.body
            if y in free_vars(n) or y == x:
                y2 = fresh(y)
                body = rename(body, y, y2)
                y = y2
            return self.mklet(y, m.bound, self.let(x, body, n))
        return self.mklet(x, m, self.nf(n))

    def mklet(self, x: str, m: ObjTerm, n: ObjTerm) -> ObjTerm:
        """``let x = m in n`` with both parts normal and ``m`` a non-value."""
        if n == Var(x):
            self.tick("let-unit")
            return m
        if linear_operand(x, m, n):
            # an expression used once, next: write it in place
            self.tick("let-linear")
            return self.nf(subst(n, x, m))
        if isinstance(m, (If, Case)) and head_uses(x, n):
            # the continuation eliminates x: move it into the branches
            self.tick("let-commute")
            match m:
                case If(c, a, b):
                    return If(c, self.let(x, a, n), self.let(x, b, n))
                case Case(s, y, a, z, b):
                    avoid = free_vars(n) | {x}
                    y, a = _avoid(y, a, avoid)
                    z, b = _avoid(z, b, avoid)
                    return Case(s, y, self.let(x, a, n), z, self.let(x, b, n))
        return Let(x, m, n)

    # eliminators --------------------------------------------------------------

    def push(self, f: ObjTerm, frame: Callable[[ObjTerm], ObjTerm],
             frame_fv: frozenset[str], rule: str) -> ObjTerm | None:
        """Commute the frame into a let, case or if; None if ``f`` is none of them."""
        match f:
            case Let(y, m, n):
                self.tick(f"kappa-let-{rule}")
                y, n = _avoid(y, n, frame_fv)
                return self.mklet(y, m, frame(n))
            case Case(s, y, l, z, r):
                self.tick(f"kappa-case-{rule}")
                y, l = _avoid(y, l, frame_fv)
                z, r = _avoid(z, r, frame_fv)
                return Case(s, y, frame(l), z, frame(r))
            case If(c, a, b):
                self.tick(f"kappa-if-{rule}")
                return If(c, frame(a), frame(b))
        return None

    def app(self, f: ObjTerm, a: ObjTerm) -> ObjTerm:
        if isinstance(f, Lam) and is_value(a):
            self.tick("beta-app")
            return self.nf(subst(f.body, f.binder, a))
        out = self.push(f, lambda g: self.app(g, a), free_vars(a), "app")
        return App(f, a) if out is None else out

    def proj(self, first: bool, a: ObjTerm) -> ObjTerm:
        if isinstance(a, Pair) and is_value(a):
            self.tick("beta-fst" if first else "beta-snd")
            return a.fst if first else a.snd
        out = self.push(a, lambda g: self.proj(first, g), frozenset(), "proj")
        if out is not None:
            return out
        return Fst(a) if first else Snd(a)

    def case(self, s: ObjTerm, x: str, l: ObjTerm, y: str, r: ObjTerm) -> ObjTerm:
        match s:
            case Inl(v) if is_value(v):
                self.tick("beta-inl")
                return self.nf(subst(l, x, v))
            case Inr(v) if is_value(v):
                self.tick("beta-inr")
                return self.nf(subst(r, y, v))
        frame_fv = (free_vars(l) - {x}) | (free_vars(r) - {y})
        out = self.push(s, lambda g: self.case(g, x, l, y, r), frame_fv, "case")
        if out is not None:
            return out
        return Case(s, x, self.nf(l), y, self.nf(r))

    def cond(self, c: ObjTerm, a: ObjTerm, b: ObjTerm) -> ObjTerm:
        if c == TRUE or c == FALSE:
            self.tick("beta-if")
            return self.nf(a if c == TRUE else b)
        out = self.push(c, lambda g: self.cond(g, a, b), free_vars(a) | free_vars(b), "if")
        if out is not None:
            return out
        return If(c, self.nf(a), self.nf(b))


def phase2(t: ObjTerm, stats: NormStats | None = None) -> ObjTerm:
    return _Phase2(stats or NormStats(fuel=10**12)).nf(t)


# ---------------------------------------------------------------------------
# phase 3: garbage collection
# ---------------------------------------------------------------------------


def phase3(t: ObjTerm, stats: NormStats | None = None) -> ObjTerm:
    stats = stats or NormStats(fuel=10**12)

    def go(t: ObjTerm) -> ObjTerm:
        kids = children(t)
        if kids:
            t = rebuild(t, tuple(go(c) for c in kids))
        if isinstance(t, Let) and t.binder not in free_vars(t.body):
            stats.tick(3, "gc")
            return t.body
        return t

    return go(t)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def phases(t: ObjTerm, strategy: Strategy | str = Strategy.NEED,
           fuel: int = DEFAULT_FUEL) -> Iterator[tuple[int, ObjTerm, NormStats]]:
    """Yield ``(phase, term, stats)`` after preprocessing (0) and each phase."""
    strategy = Strategy.parse(strategy)
    stats = NormStats(fuel=fuel)
    avoid_names(t)
    t = preprocess(t)
    yield 0, t, stats
    t = phase1(t, stats)
    yield 1, t, stats
    t = phase2(t, stats)
    yield 2, t, stats
    if strategy is Strategy.NEED:
        # dropping a dead let can expose a single-use operand, so tidy up
        # with phase 2 again until collection finds nothing more
        collected = stats.steps[3]
        t = phase3(t, stats)
        while stats.steps[3] != collected:
            collected = stats.steps[3]
            t = phase3(phase2(t, stats), stats)
        yield 3, t, stats


def normalize(t: ObjTerm, strategy: Strategy | str = Strategy.NEED,
              fuel: int = DEFAULT_FUEL) -> tuple[ObjTerm, NormStats]:
    out, stats = t, NormStats(fuel=fuel)
    for _, out, stats in phases(t, strategy, fuel):
        pass
    stats.size = size(out)
    return out, stats


def normalize_to(t: ObjTerm, phase: int, strategy: Strategy | str = Strategy.NEED,
                 fuel: int = DEFAULT_FUEL) -> ObjTerm:
    """The term after ``phase`` (0 = preprocessed input)."""
    out = t
    for p, out, _ in phases(t, strategy, fuel):
        if p == phase:
            return out
    return out


# ---------------------------------------------------------------------------
# redex scan
# ---------------------------------------------------------------------------


def redexes(t: ObjTerm) -> list[tuple[tuple[int, ...], str]]:
    """Phase-2 redexes remaining in ``t`` (empty for a phase-2 normal form)."""
    out: list[tuple[tuple[int, ...], str]] = []

    def commutable(h: ObjTerm) -> bool:
        return isinstance(h, (Let, Case, If))

    def go(t: ObjTerm, path: tuple[int, ...]) -> None:
        match t:
            case App(Lam(), a) if is_value(a):
                out.append((path, "beta-app"))
            case Let(_, m, _) if is_value(m):
                out.append((path, "beta-let"))
            case Let(x, _, Var(y)) if x == y:
                out.append((path, "let-unit"))
            case Let(x, m, n) if linear_operand(x, m, n):
                out.append((path, "let-linear"))
            case Let(_, Let(), _):
                out.append((path, "let-assoc"))
            case Fst(Pair() as p) | Snd(Pair() as p) if is_value(p):
                out.append((path, "beta-proj"))
            case Case(Inl(v) | Inr(v), _, _, _, _) if is_value(v):
                out.append((path, "beta-case"))
            case If(Lit("Bool", _), _, _):
                out.append((path, "beta-if"))
            case App(h, _) | Fst(h) | Snd(h) | Case(h, _, _, _, _) | If(h, _, _) if commutable(h):
                out.append((path, "kappa"))
        for i, c in enumerate(children(t)):
            go(c, path + (i,))

    go(t, ())
    return out
