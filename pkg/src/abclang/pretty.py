"""Deterministic pretty-printing of specs, processes, predicates, values.

The layout is canonical: printing a parsed spec and re-parsing the
result yields a structurally equal AST.  Parenthesisation preserves the
shape of `|` and `+` chains exactly.
"""
from __future__ import annotations

import json

from .terms import (
    And,
    Apply,
    Attr,
    AtomApply,
    Aware,
    Call,
    Choice,
    Compare,
    ComponentDecl,
    EnumDomain,
    FalsePred,
    Inact,
    Input,
    Invariant,
    LeadsTo,
    Literal,
    Member,
    Not,
    Or,
    Output,
    Par,
    Reachable,
    Received,
    SAnd,
    SCompare,
    SFalse,
    SNot,
    SOr,
    STrue,
    Sent,
    SystemSpec,
    TableFn,
    ThisAttr,
    TruePred,
    UNDEF,
    UpdateSeq,
    VBool,
    VFloat,
    VInt,
    VSet,
    VStr,
    VTuple,
    VUndef,
    ser_value,
)


def pp_value(v) -> str:
    if isinstance(v, VInt):
        return str(v.v)
    if isinstance(v, VFloat):
        return repr(v.v)
    if isinstance(v, VBool):
        return "true" if v.v else "false"
    if isinstance(v, VStr):
        return json.dumps(v.v)
    if isinstance(v, VUndef):
        return "undef"
    if isinstance(v, VSet):
        items = sorted(v.items, key=ser_value)
        return "{" + ", ".join(pp_value(x) for x in items) + "}"
    if isinstance(v, VTuple):
        return "(" + ", ".join(pp_value(x) for x in v.items) + ")"
    raise TypeError(f"not a value: {v!r}")


# expression precedence: 0 additive, 1 multiplicative, 2 unary, 3 atom
def pp_expr(e, level: int = 0) -> str:
    if isinstance(e, Literal):
        return pp_value(e.value)
    if isinstance(e, Attr):
        return e.name + _pp_index(e.index)
    if isinstance(e, ThisAttr):
        return "this." + e.name + _pp_index(e.index)
    if isinstance(e, Apply):
        if e.fn in ("+", "-") and len(e.args) == 2:
            s = f"{pp_expr(e.args[0], 0)} {e.fn} {pp_expr(e.args[1], 1)}"
            return f"({s})" if level > 0 else s
        if e.fn in ("*", "/") and len(e.args) == 2:
            s = f"{pp_expr(e.args[0], 1)} {e.fn} {pp_expr(e.args[1], 2)}"
            return f"({s})" if level > 1 else s
        if e.fn == "neg" and len(e.args) == 1:
            return "-" + pp_expr(e.args[0], 2)
        return e.fn + "(" + ", ".join(pp_expr(a, 0) for a in e.args) + ")"
    # Var nodes only arise in programmatic ASTs; print bare.
    return e.name


def _pp_index(index) -> str:
    if not index:
        return ""
    return "[" + ", ".join(pp_expr(i, 0) for i in index) + "]"


# predicate precedence: 0 or, 1 and, 2 atom
def pp_pred(p, level: int = 0) -> str:
    if isinstance(p, TruePred):
        return "tt"
    if isinstance(p, FalsePred):
        return "ff"
    if isinstance(p, Or):
        s = f"{pp_pred(p.lhs, 1)} || {pp_pred(p.rhs, 0)}"
        return f"({s})" if level > 0 else s
    if isinstance(p, And):
        s = f"{pp_pred(p.lhs, 2)} && {pp_pred(p.rhs, 1)}"
        return f"({s})" if level > 1 else s
    if isinstance(p, Not):
        return "!(" + pp_pred(p.inner, 0) + ")"
    if isinstance(p, Compare):
        return f"{pp_expr(p.lhs, 1)} {p.op} {pp_expr(p.rhs, 1)}"
    if isinstance(p, Member):
        return f"{pp_expr(p.elem, 1)} in {pp_expr(p.set, 1)}"
    if isinstance(p, AtomApply):
        return p.name + "(" + ", ".join(pp_expr(a, 0) for a in p.args) + ")"
    raise TypeError(f"not a predicate: {p!r}")


# process precedence: 0 par, 1 choice, 2 prefixed
def pp_proc(p, level: int = 0) -> str:
    if isinstance(p, Inact):
        return "0"
    if isinstance(p, Call):
        return p.name
    if isinstance(p, Par):
        s = f"{pp_proc(p.left, 1)} | {pp_proc(p.right, 0)}"
        return f"({s})" if level > 0 else s
    if isinstance(p, Choice):
        s = f"{pp_proc(p.left, 2)} + {pp_proc(p.right, 1)}"
        return f"({s})" if level > 1 else s
    if isinstance(p, Aware):
        return f"<{pp_pred(p.guard)}> {pp_proc(p.body, 2)}"
    if isinstance(p, Output):
        payload = ", ".join(pp_expr(e, 0) for e in p.payload)
        return f"({payload})@({pp_pred(p.target)}).{_pp_cont(p.cont)}"
    if isinstance(p, Input):
        binders = ", ".join(p.binders)
        return f"({pp_pred(p.guard)})({binders}).{_pp_cont(p.cont)}"
    raise TypeError(f"not a process: {p!r}")


def _pp_cont(cont: UpdateSeq) -> str:
    parts = []
    if cont.updates:
        ups = ", ".join(
            f"{u.name}{_pp_index(u.index)} := {pp_expr(u.rhs, 0)}" for u in cont.updates
        )
        parts.append(f"[{ups}] ")
    parts.append(pp_proc(cont.then, 2))
    return "".join(parts)


def pp_event(e) -> str:
    kw = "sent" if isinstance(e, Sent) else "received"
    return f'{kw}({e.component}, {json.dumps(e.tag)})'


# state expression precedence: 0 or, 1 and, 2 atom
def pp_state_expr(e, level: int = 0) -> str:
    if isinstance(e, STrue):
        return "tt"
    if isinstance(e, SFalse):
        return "ff"
    if isinstance(e, SOr):
        s = f"{pp_state_expr(e.lhs, 1)} || {pp_state_expr(e.rhs, 0)}"
        return f"({s})" if level > 0 else s
    if isinstance(e, SAnd):
        s = f"{pp_state_expr(e.lhs, 2)} && {pp_state_expr(e.rhs, 1)}"
        return f"({s})" if level > 1 else s
    if isinstance(e, SNot):
        return "!(" + pp_state_expr(e.inner, 0) + ")"
    if isinstance(e, SCompare):
        idx = "[" + ", ".join(pp_value(v) for v in e.index) + "]" if e.index else ""
        return f"{e.component}.{e.attr}{idx} {e.op} {pp_value(e.value)}"
    raise TypeError(f"not a state expression: {e!r}")


def pp_property(p) -> str:
    if isinstance(p, Reachable):
        if isinstance(p.target, (Sent, Received)):
            return "reachable " + pp_event(p.target)
        return "reachable " + pp_state_expr(p.target)
    if isinstance(p, Invariant):
        return "invariant " + pp_state_expr(p.expr)
    if isinstance(p, LeadsTo):
        goals = " || ".join(pp_event(g) for g in p.goals)
        if len(p.goals) > 1:
            goals = f"({goals})"
        return f"{pp_event(p.trigger)} leadsto {goals}"
    raise TypeError(f"not a property: {p!r}")


def pp_spec(spec: SystemSpec) -> str:
    """Canonical textual layout; empty specs print as empty text."""
    lines = []
    for name, decl in spec.externs:
        if isinstance(decl, EnumDomain):
            vals = ", ".join(pp_value(v) for v in decl.values)
            lines.append(f"extern {name} : {{{vals}}}")
        elif isinstance(decl, TableFn):
            rows = ", ".join(
                "(" + ", ".join(pp_value(a) for a in args) + ") -> " + pp_value(res)
                for args, res in decl.rows
            )
            lines.append(f"extern {name} : map {{{rows}}}")
    if lines and (spec.proc_defs or spec.components or spec.properties):
        lines.append("")
    for name, proc in spec.proc_defs:
        lines.append(f"proc {name} = {pp_proc(proc)}")
    if spec.proc_defs and (spec.components or spec.properties):
        lines.append("")
    for comp in spec.components:
        lines.append(f"component {comp.name} {{")
        lines.append("  attrs {")
        for (aname, index), value in comp.attrs:
            idx = "[" + ", ".join(pp_value(v) for v in index) + "]" if index else ""
            lines.append(f"    {aname}{idx} = {pp_value(value)};")
        lines.append("  }")
        lines.append("  interface { " + ", ".join(comp.interface) + " }")
        lines.append(f"  run {pp_proc(comp.proc)}")
        lines.append("}")
    for name, prop in spec.properties:
        lines.append(f"property {name} = {pp_property(prop)}")
    return "\n".join(lines) + ("\n" if lines else "")
