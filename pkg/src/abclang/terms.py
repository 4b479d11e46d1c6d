"""Core value, expression, predicate and process types.

Everything in this module is immutable after construction and safe to
share between threads.  Source spans are carried on AST nodes but are
excluded from equality and hashing, so structurally identical terms
parsed from different places compare equal.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple, Union


# ---------------------------------------------------------------------------
# source spans


@dataclass(frozen=True)
class Span:
    file: str
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self):
        return f"{self.file}:{self.line}:{self.col}"


def _span_field():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# values


@dataclass(frozen=True)
class VInt:
    v: int


@dataclass(frozen=True)
class VFloat:
    v: float


@dataclass(frozen=True)
class VBool:
    v: bool


@dataclass(frozen=True)
class VStr:
    v: str


@dataclass(frozen=True)
class VTuple:
    items: Tuple["Value", ...]


@dataclass(frozen=True)
class VSet:
    """Finite set of values; construction deduplicates structurally."""

    items: frozenset

    @staticmethod
    def of(values) -> "VSet":
        return VSet(frozenset(values))


@dataclass(frozen=True)
class VUndef:
    pass


UNDEF = VUndef()

Value = Union[VInt, VFloat, VBool, VStr, VTuple, VSet, VUndef]

TRUE = VBool(True)
FALSE = VBool(False)


def ser_value(v: Value) -> str:
    """Canonical text form, used for ordering, hashing and set layout."""
    if isinstance(v, VInt):
        return "i%d" % v.v
    if isinstance(v, VFloat):
        return "f%r" % v.v
    if isinstance(v, VBool):
        return "b1" if v.v else "b0"
    if isinstance(v, VStr):
        return "s" + repr(v.v)
    if isinstance(v, VTuple):
        return "(" + ",".join(ser_value(x) for x in v.items) + ")"
    if isinstance(v, VSet):
        return "{" + ",".join(sorted(ser_value(x) for x in v.items)) + "}"
    if isinstance(v, VUndef):
        return "u"
    raise TypeError(f"not a value: {v!r}")


# ---------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class Literal:
    value: Value
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Var:
    """Explicit bound-variable reference.

    The parser emits `Attr` for bare identifiers (attributes and bound
    variables share one namespace in source text); `Var` exists for
    programmatic construction and for substitution results.
    """

    name: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Attr:
    name: str
    index: Tuple["Expr", ...] = ()
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ThisAttr:
    name: str
    index: Tuple["Expr", ...] = ()
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Apply:
    fn: str
    args: Tuple["Expr", ...]
    span: Optional[Span] = _span_field()


Expr = Union[Literal, Var, Attr, ThisAttr, Apply]


# ---------------------------------------------------------------------------
# predicates


@dataclass(frozen=True)
class TruePred:
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class FalsePred:
    span: Optional[Span] = _span_field()


COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Compare:
    op: str
    lhs: Expr
    rhs: Expr
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Member:
    elem: Expr
    set: Expr
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class AtomApply:
    name: str
    args: Tuple[Expr, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class And:
    lhs: "Predicate"
    rhs: "Predicate"
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Or:
    lhs: "Predicate"
    rhs: "Predicate"
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Not:
    inner: "Predicate"
    span: Optional[Span] = _span_field()


Predicate = Union[TruePred, FalsePred, Compare, Member, AtomApply, And, Or, Not]


# ---------------------------------------------------------------------------
# substitutions


@dataclass(frozen=True)
class Subst:
    """Immutable map from variable name to Value, stored sorted."""

    pairs: Tuple[Tuple[str, Value], ...] = ()

    @staticmethod
    def of(mapping) -> "Subst":
        return Subst(tuple(sorted(mapping.items())))

    def get(self, name: str) -> Optional[Value]:
        for n, v in self.pairs:
            if n == name:
                return v
        return None

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self.pairs)

    def domain(self):
        return frozenset(n for n, _ in self.pairs)

    def extended(self, bindings) -> "Subst":
        """New bindings shadow existing ones."""
        d = dict(self.pairs)
        d.update(bindings)
        return Subst.of(d)

    def without(self, names) -> "Subst":
        return Subst(tuple((n, v) for n, v in self.pairs if n not in names))

    def as_dict(self):
        return dict(self.pairs)


EMPTY_SUBST = Subst()


# ---------------------------------------------------------------------------
# processes


@dataclass(frozen=True)
class Update:
    """One attribute assignment  name[index...] := rhs."""

    name: str
    index: Tuple[Expr, ...]
    rhs: Expr
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class UpdateSeq:
    updates: Tuple[Update, ...]
    then: "ProcessTerm"


@dataclass(frozen=True)
class Inact:
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Input:
    guard: Predicate
    binders: Tuple[str, ...]
    cont: UpdateSeq
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Output:
    payload: Tuple[Expr, ...]
    target: Predicate
    cont: UpdateSeq
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Aware:
    guard: Predicate
    body: "ProcessTerm"
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Choice:
    left: "ProcessTerm"
    right: "ProcessTerm"
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Par:
    left: "ProcessTerm"
    right: "ProcessTerm"
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Call:
    """Reference to a named process definition.

    `closure` carries the bindings that were in scope where the call
    occurred; they are applied to the definition body on unfolding, so
    concurrent sessions of the same definition keep distinct bindings.
    """

    name: str
    closure: Subst = EMPTY_SUBST
    span: Optional[Span] = _span_field()


ProcessTerm = Union[Inact, Input, Output, Aware, Choice, Par, Call]


ZERO = Inact()


# ---------------------------------------------------------------------------
# canonical serialization (total term order + stable hashing)


def ser_expr(e: Expr) -> str:
    if isinstance(e, Literal):
        return "L" + ser_value(e.value)
    if isinstance(e, Var):
        return "V" + e.name
    if isinstance(e, Attr):
        return "A" + e.name + "[" + ",".join(ser_expr(i) for i in e.index) + "]"
    if isinstance(e, ThisAttr):
        return "T" + e.name + "[" + ",".join(ser_expr(i) for i in e.index) + "]"
    if isinstance(e, Apply):
        return "F" + e.fn + "(" + ",".join(ser_expr(a) for a in e.args) + ")"
    raise TypeError(f"not an expression: {e!r}")


def ser_pred(p: Predicate) -> str:
    if isinstance(p, TruePred):
        return "tt"
    if isinstance(p, FalsePred):
        return "ff"
    if isinstance(p, Compare):
        return "C" + p.op + "(" + ser_expr(p.lhs) + "," + ser_expr(p.rhs) + ")"
    if isinstance(p, Member):
        return "M(" + ser_expr(p.elem) + "," + ser_expr(p.set) + ")"
    if isinstance(p, AtomApply):
        return "P" + p.name + "(" + ",".join(ser_expr(a) for a in p.args) + ")"
    if isinstance(p, And):
        return "&(" + ser_pred(p.lhs) + "," + ser_pred(p.rhs) + ")"
    if isinstance(p, Or):
        return "|(" + ser_pred(p.lhs) + "," + ser_pred(p.rhs) + ")"
    if isinstance(p, Not):
        return "!(" + ser_pred(p.inner) + ")"
    raise TypeError(f"not a predicate: {p!r}")


def _ser_useq(u: UpdateSeq) -> str:
    ups = ";".join(
        f"{up.name}[{','.join(ser_expr(i) for i in up.index)}]:={ser_expr(up.rhs)}"
        for up in u.updates
    )
    return "[" + ups + "]" + ser_proc(u.then)


@lru_cache(maxsize=None)
def ser_proc(p: ProcessTerm) -> str:
    if isinstance(p, Inact):
        return "0"
    if isinstance(p, Input):
        return "in(" + ser_pred(p.guard) + ")(" + ",".join(p.binders) + ")." + _ser_useq(p.cont)
    if isinstance(p, Output):
        return (
            "out("
            + ",".join(ser_expr(e) for e in p.payload)
            + ")@("
            + ser_pred(p.target)
            + ")."
            + _ser_useq(p.cont)
        )
    if isinstance(p, Aware):
        return "<" + ser_pred(p.guard) + ">" + ser_proc(p.body)
    if isinstance(p, Choice):
        return "+(" + ser_proc(p.left) + "," + ser_proc(p.right) + ")"
    if isinstance(p, Par):
        return "|(" + ser_proc(p.left) + "," + ser_proc(p.right) + ")"
    if isinstance(p, Call):
        cl = ",".join(f"{n}={ser_value(v)}" for n, v in p.closure.pairs)
        return "K" + p.name + "{" + cl + "}"
    raise TypeError(f"not a process: {p!r}")


def _flatten(p: ProcessTerm, kind) -> list:
    if isinstance(p, kind):
        return _flatten(p.left, kind) + _flatten(p.right, kind)
    return [p]


@lru_cache(maxsize=None)
def canonicalize(p: ProcessTerm) -> ProcessTerm:
    """Normal form under commutativity/associativity of `|` and `+`.

    Nested parallel and choice chains are flattened, the operands sorted
    under the total term order, and the chain rebuilt right-nested.  No
    operands are dropped, only reordered, so the result is
    behaviour-equivalent by construction.  Idempotent.
    """
    if isinstance(p, (Inact, Call)):
        return p
    if isinstance(p, Input):
        return Input(p.guard, p.binders, UpdateSeq(p.cont.updates, canonicalize(p.cont.then)))
    if isinstance(p, Output):
        return Output(p.payload, p.target, UpdateSeq(p.cont.updates, canonicalize(p.cont.then)))
    if isinstance(p, Aware):
        return Aware(p.guard, canonicalize(p.body))
    if isinstance(p, (Choice, Par)):
        kind = type(p)
        parts = []
        for q in _flatten(p, kind):
            q = canonicalize(q)
            parts.extend(_flatten(q, kind))
        parts.sort(key=ser_proc)
        out = parts[-1]
        for q in reversed(parts[:-1]):
            out = kind(q, out)
        return out
    raise TypeError(f"not a process: {p!r}")


# ---------------------------------------------------------------------------
# attribute environments


AttrKey = Tuple[str, Tuple[Value, ...]]


@dataclass(frozen=True)
class Env:
    """Partial map from (attribute name, index tuple) to Value.

    An absent key is distinguishable from a stored UNDEF.  Entries are
    kept sorted, so equal environments have equal representations.
    """

    entries: Tuple[Tuple[AttrKey, Value], ...] = ()

    @staticmethod
    def of(mapping) -> "Env":
        norm = {}
        for k, v in mapping.items():
            if isinstance(k, str):
                k = (k, ())
            norm[k] = v
        return Env(tuple(sorted(norm.items(), key=lambda kv: _key_order(kv[0]))))

    def lookup(self, name: str, index: Tuple[Value, ...] = ()) -> Optional[Value]:
        """Value stored under the key, or None when absent."""
        for k, v in self.entries:
            if k == (name, index):
                return v
        return None

    def has(self, name: str, index: Tuple[Value, ...] = ()) -> bool:
        return any(k == (name, index) for k, _ in self.entries)

    def updated(self, name: str, index: Tuple[Value, ...], value: Value) -> "Env":
        d = dict(self.entries)
        d[(name, index)] = value
        return Env(tuple(sorted(d.items(), key=lambda kv: _key_order(kv[0]))))

    def names(self) -> frozenset:
        return frozenset(k[0] for k, _ in self.entries)

    def restricted(self, names) -> "Env":
        return Env(tuple((k, v) for k, v in self.entries if k[0] in names))

    def as_dict(self):
        return dict(self.entries)

    def __len__(self):
        return len(self.entries)


def _key_order(k: AttrKey):
    return (k[0], tuple(ser_value(v) for v in k[1]))


EMPTY_ENV = Env()


def ser_env(env: Env) -> str:
    return ";".join(
        f"{k[0]}[{','.join(ser_value(i) for i in k[1])}]={ser_value(v)}"
        for k, v in env.entries
    )


# ---------------------------------------------------------------------------
# externs


@dataclass(frozen=True)
class EnumDomain:
    """Nondeterministic external choice over a finite, non-empty domain."""

    values: Tuple[Value, ...]

    @staticmethod
    def of(values) -> "EnumDomain":
        uniq = {ser_value(v): v for v in values}
        return EnumDomain(tuple(uniq[k] for k in sorted(uniq)))


@dataclass(frozen=True)
class TableFn:
    """Deterministic function given by explicit argument/result rows."""

    rows: Tuple[Tuple[Tuple[Value, ...], Value], ...]

    @staticmethod
    def of(mapping) -> "TableFn":
        return TableFn(
            tuple(sorted(mapping.items(), key=lambda kv: tuple(ser_value(v) for v in kv[0])))
        )

    def lookup(self, args: Tuple[Value, ...]) -> Optional[Value]:
        for a, r in self.rows:
            if a == args:
                return r
        return None


ExternDecl = Union[EnumDomain, TableFn]


# ---------------------------------------------------------------------------
# components / systems


@dataclass(frozen=True)
class ComponentState:
    name: str
    env: Env
    interface: frozenset
    proc: ProcessTerm
    subst: Subst = EMPTY_SUBST


SystemState = Tuple[ComponentState, ...]


def canonical_component(c: ComponentState) -> ComponentState:
    return ComponentState(c.name, c.env, c.interface, canonicalize(c.proc), c.subst)


def ser_component(c: ComponentState) -> str:
    return (
        c.name
        + "{"
        + ser_env(c.env)
        + "}"
        + "σ{"
        + ",".join(f"{n}={ser_value(v)}" for n, v in c.subst.pairs)
        + "}"
        + ser_proc(canonicalize(c.proc))
    )


def state_key(s: SystemState) -> Tuple[str, ...]:
    return tuple(ser_component(c) for c in s)


def state_hash(s: SystemState) -> str:
    h = hashlib.sha256("∥".join(state_key(s)).encode("utf-8"))
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class BroadcastEvent:
    """One system transition: a broadcast with its delivery outcome."""

    sender: int
    message: Tuple[Value, ...]
    sent_pred: Predicate
    exposed_env: Env
    receivers: frozenset  # of (component index, branch ordinal)
    discarded: frozenset  # of component index

    def tag(self) -> Optional[str]:
        if self.message and isinstance(self.message[0], VStr):
            return self.message[0].v
        return None


# ---------------------------------------------------------------------------
# properties


@dataclass(frozen=True)
class Sent:
    component: str  # component name or "*"
    tag: str


@dataclass(frozen=True)
class Received:
    component: str
    tag: str


Event = Union[Sent, Received]


@dataclass(frozen=True)
class STrue:
    pass


@dataclass(frozen=True)
class SFalse:
    pass


@dataclass(frozen=True)
class SCompare:
    component: str  # name or "*"
    attr: str
    index: Tuple[Value, ...]
    op: str
    value: Value


@dataclass(frozen=True)
class SAnd:
    lhs: "StateExpr"
    rhs: "StateExpr"


@dataclass(frozen=True)
class SOr:
    lhs: "StateExpr"
    rhs: "StateExpr"


@dataclass(frozen=True)
class SNot:
    inner: "StateExpr"


StateExpr = Union[STrue, SFalse, SCompare, SAnd, SOr, SNot]


@dataclass(frozen=True)
class Reachable:
    target: Union[Event, StateExpr]


@dataclass(frozen=True)
class Invariant:
    expr: StateExpr


@dataclass(frozen=True)
class LeadsTo:
    trigger: Event
    goals: Tuple[Event, ...]  # disjunctive


Property = Union[Reachable, Invariant, LeadsTo]


# ---------------------------------------------------------------------------
# parsed specifications


@dataclass(frozen=True)
class ComponentDecl:
    name: str
    attrs: Tuple[Tuple[AttrKey, Value], ...]
    interface: Tuple[str, ...]
    proc: ProcessTerm
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class SystemSpec:
    components: Tuple[ComponentDecl, ...]
    proc_defs: Tuple[Tuple[str, ProcessTerm], ...]
    externs: Tuple[Tuple[str, ExternDecl], ...]
    properties: Tuple[Tuple[str, Property], ...]

    def defs_map(self):
        return dict(self.proc_defs)

    def externs_map(self):
        return dict(self.externs)

    def properties_map(self):
        return dict(self.properties)

    def initial_state(self) -> SystemState:
        comps = []
        for d in self.components:
            comps.append(
                ComponentState(d.name, Env.of(dict(d.attrs)), frozenset(d.interface), d.proc)
            )
        return tuple(comps)

    def component_names(self) -> Tuple[str, ...]:
        return tuple(d.name for d in self.components)
