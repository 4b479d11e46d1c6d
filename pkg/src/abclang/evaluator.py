"""Expression evaluation, predicate closure and satisfaction, substitution.

All functions here are pure.  Nondeterministic externs (enumerated
domains) draw through a `Chooser`, which either samples from a seeded
RNG (simulation) or follows a scripted index vector (exhaustive
exploration via `all_runs`).
"""
from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

from .terms import (
    And,
    Apply,
    Attr,
    AtomApply,
    Compare,
    EMPTY_SUBST,
    EnumDomain,
    Env,
    Expr,
    FALSE,
    FalsePred,
    Literal,
    Member,
    Not,
    Or,
    Predicate,
    Span,
    Subst,
    TRUE,
    TableFn,
    ThisAttr,
    TruePred,
    UNDEF,
    Update,
    UpdateSeq,
    VBool,
    VFloat,
    VInt,
    VSet,
    VStr,
    VTuple,
    VUndef,
    Value,
    Var,
    ser_value,
)


class EvalError(Exception):
    def __init__(self, message: str, span: Optional[Span] = None):
        super().__init__(message)
        self.span = span

    def __str__(self):
        base = super().__str__()
        return f"{self.span}: {base}" if self.span else base


# ---------------------------------------------------------------------------
# choice reification


class Chooser:
    def choose(self, options: Sequence[Value]) -> Value:
        raise NotImplementedError


class RandomChooser(Chooser):
    def __init__(self, rng):
        self.rng = rng

    def choose(self, options):
        return options[self.rng.randrange(len(options))]


class ScriptedChooser(Chooser):
    """Follows a prefix of choice indices, then picks index 0.

    Records (index, domain size) for every draw so a caller can
    enumerate the remaining alternatives.
    """

    def __init__(self, prefix: Tuple[int, ...] = ()):
        self.prefix = prefix
        self.trace: List[Tuple[int, int]] = []

    def choose(self, options):
        pos = len(self.trace)
        idx = self.prefix[pos] if pos < len(self.prefix) else 0
        self.trace.append((idx, len(options)))
        return options[idx]


T = TypeVar("T")


def all_runs(fn: Callable[[Chooser], T]) -> List[T]:
    """Runs `fn` once per combination of extern draws it can make.

    `fn` must be deterministic given the chooser's answers.  Later draw
    domains may depend on earlier draws; every leaf of the resulting
    choice tree is visited exactly once, in a deterministic order.
    """
    results: List[T] = []
    pending: List[Tuple[int, ...]] = [()]
    while pending:
        prefix = pending.pop(0)
        ch = ScriptedChooser(prefix)
        results.append(fn(ch))
        for pos in range(len(prefix), len(ch.trace)):
            base = tuple(idx for idx, _ in ch.trace[:pos])
            size = ch.trace[pos][1]
            for alt in range(1, size):
                pending.append(base + (alt,))
    return results


# ---------------------------------------------------------------------------
# built-in operators


def _num(v: Value, span=None) -> float:
    if isinstance(v, VInt) or isinstance(v, VFloat):
        return v.v
    raise EvalError(f"expected a number, got {ser_value(v)}", span)


def _arith(op: str, a: Value, b: Value, span=None) -> Value:
    x, y = _num(a, span), _num(b, span)
    if op == "+":
        r = x + y
    elif op == "-":
        r = x - y
    elif op == "*":
        r = x * y
    elif op == "/":
        if y == 0:
            raise EvalError("division by zero", span)
        return VFloat(x / y)
    else:
        raise EvalError(f"unknown operator {op}", span)
    if isinstance(a, VInt) and isinstance(b, VInt):
        return VInt(int(r))
    return VFloat(float(r))


def values_equal(a: Value, b: Value) -> bool:
    """Equality used by `=`, `!=` and set membership.

    Structural, except that integers and doubles compare by numeric
    value.  UNDEF equals only UNDEF.
    """
    if isinstance(a, (VInt, VFloat)) and isinstance(b, (VInt, VFloat)):
        return float(a.v) == float(b.v)
    return a == b


def compare_values(op: str, a: Value, b: Value, span=None) -> bool:
    if op == "=":
        return values_equal(a, b)
    if op == "!=":
        return not values_equal(a, b)
    if isinstance(a, VUndef) or isinstance(b, VUndef):
        raise EvalError("ordered comparison with undef", span)
    if isinstance(a, (VInt, VFloat)) and isinstance(b, (VInt, VFloat)):
        x, y = float(a.v), float(b.v)
    elif isinstance(a, VStr) and isinstance(b, VStr):
        x, y = a.v, b.v
    else:
        raise EvalError(
            f"ordered comparison between {ser_value(a)} and {ser_value(b)}", span
        )
    return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op]


def _member(elem: Value, coll: Value, span=None) -> bool:
    if isinstance(coll, VSet):
        return any(values_equal(elem, x) for x in coll.items)
    if isinstance(coll, VTuple):
        return any(values_equal(elem, x) for x in coll.items)
    raise EvalError(f"membership test on non-set {ser_value(coll)}", span)


def apply_builtin(fn: str, args: List[Value], span=None) -> Value:
    if fn in ("+", "-", "*", "/"):
        if len(args) != 2:
            raise EvalError(f"{fn} takes two arguments", span)
        return _arith(fn, args[0], args[1], span)
    if fn == "neg":
        if len(args) != 1:
            raise EvalError("neg takes one argument", span)
        v = args[0]
        if isinstance(v, VInt):
            return VInt(-v.v)
        return VFloat(-_num(v, span))
    if fn in ("=", "!=", "<", "<=", ">", ">="):
        if len(args) != 2:
            raise EvalError(f"{fn} takes two arguments", span)
        return VBool(compare_values(fn, args[0], args[1], span))
    if fn == "in":
        if len(args) != 2:
            raise EvalError("in takes two arguments", span)
        return VBool(_member(args[0], args[1], span))
    if fn == "diff":
        if len(args) != 2:
            raise EvalError("diff takes two arguments", span)
        x, y = _num(args[0], span), _num(args[1], span)
        r = abs(x - y)
        if isinstance(args[0], VInt) and isinstance(args[1], VInt):
            return VInt(int(r))
        return VFloat(r)
    if fn == "tuple":
        return VTuple(tuple(args))
    if fn == "proj":
        if len(args) != 2 or not isinstance(args[1], VInt):
            raise EvalError("proj takes (tuple, int)", span)
        t = args[0]
        if not isinstance(t, VTuple):
            raise EvalError("proj of a non-tuple", span)
        i = args[1].v
        if not 0 <= i < len(t.items):
            raise EvalError(f"proj index {i} out of range", span)
        return t.items[i]
    raise EvalError(f"unknown function {fn}", span)


BUILTIN_NAMES = frozenset(
    ["+", "-", "*", "/", "neg", "=", "!=", "<", "<=", ">", ">=", "in", "diff", "tuple", "proj"]
)


# ---------------------------------------------------------------------------
# expression evaluation


def evaluate(
    e: Expr,
    env: Env,
    subst: Subst = EMPTY_SUBST,
    externs: Optional[Dict] = None,
    chooser: Optional[Chooser] = None,
) -> Value:
    """Local evaluation: both `a` and `this.a` read the own environment.

    A missing attribute or unbound variable is a hard error here; the
    lenient absent-attribute rule applies only inside `satisfies`.
    """
    externs = externs or {}
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, Var):
        v = subst.get(e.name)
        if v is None:
            raise EvalError(f"unbound variable {e.name}", e.span)
        return v
    if isinstance(e, (Attr, ThisAttr)):
        if isinstance(e, Attr) and not e.index:
            v = subst.get(e.name)
            if v is not None:
                return v
        idx = tuple(evaluate(i, env, subst, externs, chooser) for i in e.index)
        v = env.lookup(e.name, idx)
        if v is None:
            shown = e.name + (f"[{','.join(ser_value(i) for i in idx)}]" if idx else "")
            raise EvalError(f"attribute {shown} is not set", e.span)
        return v
    if isinstance(e, Apply):
        ext = externs.get(e.fn)
        if isinstance(ext, EnumDomain):
            if e.args:
                raise EvalError(f"extern {e.fn} takes no arguments", e.span)
            if chooser is None:
                raise EvalError(f"extern {e.fn} drawn without a chooser", e.span)
            return chooser.choose(ext.values)
        args = [evaluate(a, env, subst, externs, chooser) for a in e.args]
        if isinstance(ext, TableFn):
            r = ext.lookup(tuple(args))
            if r is None:
                shown = ",".join(ser_value(a) for a in args)
                raise EvalError(f"extern {e.fn} has no entry for ({shown})", e.span)
            return r
        return apply_builtin(e.fn, args, e.span)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# substitution


def substitute_expr(e: Expr, subst: Subst) -> Expr:
    if isinstance(e, Literal):
        return e
    if isinstance(e, Var):
        v = subst.get(e.name)
        return Literal(v, e.span) if v is not None else e
    if isinstance(e, Attr):
        if not e.index:
            v = subst.get(e.name)
            if v is not None:
                return Literal(v, e.span)
            return e
        return Attr(e.name, tuple(substitute_expr(i, subst) for i in e.index), e.span)
    if isinstance(e, ThisAttr):
        if not e.index:
            return e
        return ThisAttr(e.name, tuple(substitute_expr(i, subst) for i in e.index), e.span)
    if isinstance(e, Apply):
        return Apply(e.fn, tuple(substitute_expr(a, subst) for a in e.args), e.span)
    raise TypeError(f"not an expression: {e!r}")


def substitute(p: Predicate, subst: Subst) -> Predicate:
    """Capture-free replacement of variables by value literals.

    Unbound variables stay symbolic.  Bare unindexed attribute nodes
    whose name is bound are treated as variable occurrences: bound
    variables and attributes share the identifier namespace in source
    text, and validation rejects shadowing.
    """
    if not subst.pairs:
        return p
    if isinstance(p, (TruePred, FalsePred)):
        return p
    if isinstance(p, Compare):
        return Compare(p.op, substitute_expr(p.lhs, subst), substitute_expr(p.rhs, subst), p.span)
    if isinstance(p, Member):
        return Member(substitute_expr(p.elem, subst), substitute_expr(p.set, subst), p.span)
    if isinstance(p, AtomApply):
        return AtomApply(p.name, tuple(substitute_expr(a, subst) for a in p.args), p.span)
    if isinstance(p, And):
        return And(substitute(p.lhs, subst), substitute(p.rhs, subst), p.span)
    if isinstance(p, Or):
        return Or(substitute(p.lhs, subst), substitute(p.rhs, subst), p.span)
    if isinstance(p, Not):
        return Not(substitute(p.inner, subst), p.span)
    raise TypeError(f"not a predicate: {p!r}")


def substitute_useq(u: UpdateSeq, subst: Subst) -> UpdateSeq:
    ups = tuple(
        Update(
            up.name,
            tuple(substitute_expr(i, subst) for i in up.index),
            substitute_expr(up.rhs, subst),
            up.span,
        )
        for up in u.updates
    )
    return UpdateSeq(ups, substitute_proc(u.then, subst))


def substitute_proc(p, subst: Subst):
    """Substitution over process terms.  Input binders shadow; a call
    captures the substitution in its closure so the definition body sees
    the bindings of its own call site when unfolded."""
    from .terms import Aware, Call, Choice, Inact, Input, Output, Par

    if not subst.pairs:
        return p
    if isinstance(p, Inact):
        return p
    if isinstance(p, Input):
        inner = subst.without(p.binders)
        return Input(substitute(p.guard, inner), p.binders, substitute_useq(p.cont, inner), p.span)
    if isinstance(p, Output):
        return Output(
            tuple(substitute_expr(e, subst) for e in p.payload),
            substitute(p.target, subst),
            substitute_useq(p.cont, subst),
            p.span,
        )
    if isinstance(p, Aware):
        return Aware(substitute(p.guard, subst), substitute_proc(p.body, subst), p.span)
    if isinstance(p, Choice):
        return Choice(substitute_proc(p.left, subst), substitute_proc(p.right, subst), p.span)
    if isinstance(p, Par):
        return Par(substitute_proc(p.left, subst), substitute_proc(p.right, subst), p.span)
    if isinstance(p, Call):
        merged = dict(subst.pairs)
        merged.update(p.closure.pairs)  # call-site bindings already captured win
        return Call(p.name, Subst.of(merged), p.span)
    raise TypeError(f"not a process: {p!r}")


# ---------------------------------------------------------------------------
# predicate closure


def close_expr(e: Expr, env: Env, subst: Subst, externs=None, chooser=None) -> Expr:
    """Freezes `this.a` and bound variables to literals; keeps bare
    attribute references symbolic (they name the judging party's state)."""
    if isinstance(e, Literal):
        return e
    if isinstance(e, Var):
        v = subst.get(e.name)
        if v is None:
            raise EvalError(f"unbound variable {e.name} in predicate closure", e.span)
        return Literal(v, e.span)
    if isinstance(e, ThisAttr):
        idx = tuple(evaluate(i, env, subst, externs, chooser) for i in e.index)
        v = env.lookup(e.name, idx)
        if v is None:
            raise EvalError(f"attribute {e.name} is not set (predicate closure)", e.span)
        return Literal(v, e.span)
    if isinstance(e, Attr):
        if not e.index:
            v = subst.get(e.name)
            if v is not None:
                return Literal(v, e.span)
            return e
        return Attr(e.name, tuple(close_expr(i, env, subst, externs, chooser) for i in e.index), e.span)
    if isinstance(e, Apply):
        return Apply(e.fn, tuple(close_expr(a, env, subst, externs, chooser) for a in e.args), e.span)
    raise TypeError(f"not an expression: {e!r}")


def close(p: Predicate, env: Env, subst: Subst = EMPTY_SUBST, externs=None, chooser=None) -> Predicate:
    if isinstance(p, (TruePred, FalsePred)):
        return p
    if isinstance(p, Compare):
        return Compare(
            p.op,
            close_expr(p.lhs, env, subst, externs, chooser),
            close_expr(p.rhs, env, subst, externs, chooser),
            p.span,
        )
    if isinstance(p, Member):
        return Member(
            close_expr(p.elem, env, subst, externs, chooser),
            close_expr(p.set, env, subst, externs, chooser),
            p.span,
        )
    if isinstance(p, AtomApply):
        return AtomApply(
            p.name, tuple(close_expr(a, env, subst, externs, chooser) for a in p.args), p.span
        )
    if isinstance(p, And):
        return And(close(p.lhs, env, subst, externs, chooser), close(p.rhs, env, subst, externs, chooser), p.span)
    if isinstance(p, Or):
        return Or(close(p.lhs, env, subst, externs, chooser), close(p.rhs, env, subst, externs, chooser), p.span)
    if isinstance(p, Not):
        return Not(close(p.inner, env, subst, externs, chooser), p.span)
    raise TypeError(f"not a predicate: {p!r}")


def _expr_closed(e: Expr) -> bool:
    if isinstance(e, Literal):
        return True
    if isinstance(e, (Var, ThisAttr)):
        return False
    if isinstance(e, Attr):
        return all(_expr_closed(i) for i in e.index)
    if isinstance(e, Apply):
        return all(_expr_closed(a) for a in e.args)
    return False


def is_closed(p: Predicate) -> bool:
    """True when the predicate contains no this-reference and no variable."""
    if isinstance(p, (TruePred, FalsePred)):
        return True
    if isinstance(p, Compare):
        return _expr_closed(p.lhs) and _expr_closed(p.rhs)
    if isinstance(p, Member):
        return _expr_closed(p.elem) and _expr_closed(p.set)
    if isinstance(p, AtomApply):
        return all(_expr_closed(a) for a in p.args)
    if isinstance(p, (And, Or)):
        return is_closed(p.lhs) and is_closed(p.rhs)
    if isinstance(p, Not):
        return is_closed(p.inner)
    raise TypeError(f"not a predicate: {p!r}")


# ---------------------------------------------------------------------------
# satisfaction


def satisfies(env: Env, p: Predicate, externs=None, chooser=None) -> bool:
    """Judges a closed predicate against an environment.

    Bare attribute references resolve in `env`.  An atomic predicate
    that cannot be evaluated — absent attribute, type error, ordered
    comparison with undef — counts as false rather than failing, which
    keeps satisfaction total (a component lacking an attribute silently
    falls outside the addressed group).
    """
    if isinstance(p, TruePred):
        return True
    if isinstance(p, FalsePred):
        return False
    if isinstance(p, And):
        return satisfies(env, p.lhs, externs, chooser) and satisfies(env, p.rhs, externs, chooser)
    if isinstance(p, Or):
        return satisfies(env, p.lhs, externs, chooser) or satisfies(env, p.rhs, externs, chooser)
    if isinstance(p, Not):
        return not satisfies(env, p.inner, externs, chooser)
    try:
        if isinstance(p, Compare):
            a = evaluate(p.lhs, env, EMPTY_SUBST, externs, chooser)
            b = evaluate(p.rhs, env, EMPTY_SUBST, externs, chooser)
            return compare_values(p.op, a, b, p.span)
        if isinstance(p, Member):
            a = evaluate(p.elem, env, EMPTY_SUBST, externs, chooser)
            b = evaluate(p.set, env, EMPTY_SUBST, externs, chooser)
            return _member(a, b, p.span)
        if isinstance(p, AtomApply):
            args = [evaluate(a, env, EMPTY_SUBST, externs, chooser) for a in p.args]
            ext = (externs or {}).get(p.name)
            if isinstance(ext, TableFn):
                r = ext.lookup(tuple(args))
                return isinstance(r, VBool) and r.v
            r = apply_builtin(p.name, args, p.span)
            return isinstance(r, VBool) and r.v
    except EvalError:
        return False
    raise TypeError(f"not a predicate: {p!r}")


# ---------------------------------------------------------------------------
# environment restriction and updates


def restrict(env: Env, interface) -> Env:
    return env.restricted(interface)


def apply_updates(
    env: Env,
    updates: Tuple[Update, ...],
    subst: Subst = EMPTY_SUBST,
    externs=None,
    chooser=None,
) -> Env:
    """Applies assignments left to right; each right-hand side and index
    sees the effect of the previous assignments.  New keys may be
    created."""
    for up in updates:
        idx = tuple(evaluate(i, env, subst, externs, chooser) for i in up.index)
        val = evaluate(up.rhs, env, subst, externs, chooser)
        env = env.updated(up.name, idx, val)
    return env
