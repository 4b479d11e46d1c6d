"""Recursive-descent parser for the `.abc` system specification DSL.

Syntax overview (see README for the full grammar):

    extern get_day : {5}
    extern diff : map {("rome", "rome") -> 0}
    proc F = <send> ()@(ff).[day := get_day()] F
    component Cust1 {
      attrs { id = "c1"; send = true; }
      interface { id }
      run F | A
    }
    property booked = sent(Cust1, "book") leadsto received(Cust1, "confirm")

`#` starts a line comment.  Identifier references in expressions parse
as attribute references; whether a name is actually a bound variable is
resolved by substitution at run time, and validation rejects binders
that shadow declared attributes so the two can never collide.
"""
from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

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
    FALSE,
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
    Predicate,
    ProcessTerm,
    Property,
    Reachable,
    Received,
    SAnd,
    SCompare,
    SFalse,
    SNot,
    SOr,
    STrue,
    Sent,
    Span,
    StateExpr,
    SystemSpec,
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
    Value,
    ser_value,
)
from .evaluator import BUILTIN_NAMES

KEYWORDS = frozenset(
    [
        "extern", "proc", "component", "attrs", "interface", "run", "map",
        "property", "reachable", "invariant", "leadsto", "sent", "received",
        "this", "tt", "ff", "true", "false", "undef", "in",
    ]
)

PUNCT = [
    ":=", "->", "!=", "<=", ">=", "&&", "||",
    "{", "}", "(", ")", "[", "]", ",", ";", ".", "=", "<", ">",
    "!", "+", "-", "*", "/", "@", ":", "|",
]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    span: Optional[Span]
    message: str
    code: str

    def render(self, color: Optional[bool] = None) -> str:
        loc = str(self.span) if self.span else "<spec>"
        sev = self.severity
        if color is None:
            color = sys.stderr.isatty() and os.environ.get("ABC_COLOR", "1") != "0"
        if color:
            tint = "\x1b[31m" if sev == "error" else "\x1b[33m"
            sev = f"{tint}{sev}\x1b[0m"
        return f"{loc}: {sev}[{self.code}]: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.render(color=False))
        self.diagnostic = diagnostic


@dataclass
class Token:
    kind: str  # "ident" | "kw" | "int" | "float" | "string" | "punct" | "eof"
    text: str
    line: int
    col: int


def _lex(src: str, filename: str) -> List[Token]:
    tokens: List[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = i + 1
            buf = []
            while j < n and src[j] != '"':
                if src[j] == "\\" and j + 1 < n:
                    esc = src[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                elif src[j] == "\n":
                    break
                else:
                    buf.append(src[j])
                    j += 1
            if j >= n or src[j] != '"':
                raise ParseError(
                    Diagnostic("error", Span(filename, line, col, line, col),
                               "unterminated string literal", "E-LEX")
                )
            tokens.append(Token("string", "".join(buf), line, col))
            col += j - i + 1
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            is_float = False
            if j < n and src[j] == "." and j + 1 < n and src[j + 1].isdigit():
                is_float = True
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    is_float = True
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            tokens.append(Token("float" if is_float else "int", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            word = src[i:j]
            tokens.append(Token("kw" if word in KEYWORDS else "ident", word, line, col))
            col += j - i
            i = j
            continue
        for p in PUNCT:
            if src.startswith(p, i):
                tokens.append(Token("punct", p, line, col))
                col += len(p)
                i += len(p)
                break
        else:
            raise ParseError(
                Diagnostic("error", Span(filename, line, col, line, col),
                           f"unexpected character {c!r}", "E-LEX")
            )
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: List[Token], filename: str):
        self.toks = tokens
        self.pos = 0
        self.filename = filename

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        if self.at(kind, text):
            return self.next()
        t = self.peek()
        want = text if text is not None else kind
        raise self.error(f"expected {want!r}, found {t.text!r}" if t.text else f"expected {want!r}, found end of input")

    def span_here(self) -> Span:
        t = self.peek()
        return Span(self.filename, t.line, t.col, t.line, t.col + max(len(t.text), 1))

    def span_from(self, start: Span) -> Span:
        prev = self.toks[max(self.pos - 1, 0)]
        return Span(self.filename, start.line, start.col, prev.line, prev.col + len(prev.text))

    def error(self, message: str, code: str = "E-PARSE") -> ParseError:
        return ParseError(Diagnostic("error", self.span_here(), message, code))

    # -- values -------------------------------------------------------------

    def parse_value(self) -> Value:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return VInt(int(t.text))
        if t.kind == "float":
            self.next()
            return VFloat(float(t.text))
        if t.kind == "punct" and t.text == "-":
            self.next()
            inner = self.parse_value()
            if isinstance(inner, VInt):
                return VInt(-inner.v)
            if isinstance(inner, VFloat):
                return VFloat(-inner.v)
            raise self.error("'-' applies only to numeric literals")
        if t.kind == "string":
            self.next()
            return VStr(t.text)
        if t.kind == "kw" and t.text in ("true", "false"):
            self.next()
            return VBool(t.text == "true")
        if t.kind == "kw" and t.text == "undef":
            self.next()
            return UNDEF
        if t.kind == "punct" and t.text == "{":
            self.next()
            items = []
            if not self.at("punct", "}"):
                items.append(self.parse_value())
                while self.accept("punct", ","):
                    items.append(self.parse_value())
            self.expect("punct", "}")
            return VSet.of(items)
        if t.kind == "punct" and t.text == "(":
            self.next()
            items = [self.parse_value()]
            self.expect("punct", ",")
            items.append(self.parse_value())
            while self.accept("punct", ","):
                items.append(self.parse_value())
            self.expect("punct", ")")
            return VTuple(tuple(items))
        raise self.error(f"expected a value, found {t.text!r}")

    # -- expressions ---------------------------------------------------------

    def parse_expr(self):
        return self._expr_add()

    def _expr_add(self):
        start = self.span_here()
        e = self._expr_mul()
        while self.at("punct", "+") or self.at("punct", "-"):
            op = self.next().text
            rhs = self._expr_mul()
            e = Apply(op, (e, rhs), self.span_from(start))
        return e

    def _expr_mul(self):
        start = self.span_here()
        e = self._expr_unary()
        while self.at("punct", "*") or self.at("punct", "/"):
            op = self.next().text
            rhs = self._expr_unary()
            e = Apply(op, (e, rhs), self.span_from(start))
        return e

    def _expr_unary(self):
        if self.at("punct", "-"):
            start = self.span_here()
            self.next()
            inner = self._expr_unary()
            if isinstance(inner, Literal) and isinstance(inner.value, (VInt, VFloat)):
                neg = VInt(-inner.value.v) if isinstance(inner.value, VInt) else VFloat(-inner.value.v)
                return Literal(neg, self.span_from(start))
            return Apply("neg", (inner,), self.span_from(start))
        return self._expr_atom()

    def _expr_atom(self):
        t = self.peek()
        start = self.span_here()
        if t.kind in ("int", "float", "string") or (
            t.kind == "kw" and t.text in ("true", "false", "undef")
        ) or (t.kind == "punct" and t.text == "{"):
            return Literal(self.parse_value(), self.span_from(start))
        if t.kind == "kw" and t.text == "this":
            self.next()
            self.expect("punct", ".")
            name = self.expect("ident").text
            index = self._parse_index()
            return ThisAttr(name, index, self.span_from(start))
        if t.kind == "ident":
            name = self.next().text
            if self.at("punct", "("):
                self.next()
                args = []
                if not self.at("punct", ")"):
                    args.append(self.parse_expr())
                    while self.accept("punct", ","):
                        args.append(self.parse_expr())
                self.expect("punct", ")")
                return Apply(name, tuple(args), self.span_from(start))
            index = self._parse_index()
            return Attr(name, index, self.span_from(start))
        if t.kind == "punct" and t.text == "(":
            self.next()
            first = self.parse_expr()
            if self.at("punct", ","):
                # tuple literal / construction
                items = [first]
                while self.accept("punct", ","):
                    items.append(self.parse_expr())
                self.expect("punct", ")")
                if all(isinstance(e, Literal) for e in items):
                    return Literal(VTuple(tuple(e.value for e in items)), self.span_from(start))
                return Apply("tuple", tuple(items), self.span_from(start))
            self.expect("punct", ")")
            return first
        raise self.error(f"expected an expression, found {t.text!r}")

    def _parse_index(self) -> Tuple:
        if not self.at("punct", "["):
            return ()
        self.next()
        idx = [self.parse_expr()]
        while self.accept("punct", ","):
            idx.append(self.parse_expr())
        self.expect("punct", "]")
        return tuple(idx)

    # -- predicates ----------------------------------------------------------

    def parse_pred(self) -> Predicate:
        return self._pred_or()

    def _pred_or(self) -> Predicate:
        start = self.span_here()
        p = self._pred_and()
        while self.accept("punct", "||"):
            rhs = self._pred_and()
            p = Or(p, rhs, self.span_from(start))
        return p

    def _pred_and(self) -> Predicate:
        start = self.span_here()
        p = self._pred_unary()
        while self.accept("punct", "&&"):
            rhs = self._pred_unary()
            p = And(p, rhs, self.span_from(start))
        return p

    def _pred_unary(self) -> Predicate:
        start = self.span_here()
        if self.accept("punct", "!"):
            inner = self._pred_unary()
            return Not(inner, self.span_from(start))
        return self._pred_atom()

    def _pred_atom(self) -> Predicate:
        start = self.span_here()
        if self.accept("kw", "tt"):
            return TruePred(self.span_from(start))
        if self.accept("kw", "ff"):
            return FalsePred(self.span_from(start))
        if self.at("punct", "("):
            # Either a parenthesised predicate or a parenthesised
            # expression opening a comparison: try the predicate reading
            # and fall back when the suffix proves it was an expression.
            mark = self.pos
            pred_result = pred_end = None
            try:
                self.next()
                p = self._pred_or()
                self.expect("punct", ")")
                nxt = self.peek()
                if not (
                    nxt.kind == "punct" and nxt.text in ("=", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/")
                    or (nxt.kind == "kw" and nxt.text == "in")
                ):
                    return p
                # a suffix like '>' may still belong to the surrounding
                # construct (e.g. the close of an awareness guard), so
                # keep the predicate reading as a fallback
                pred_result, pred_end = p, self.pos
            except ParseError:
                pass
            self.pos = mark
            try:
                return self._pred_comparison()
            except ParseError:
                if pred_result is not None:
                    self.pos = pred_end
                    return pred_result
                raise
        return self._pred_comparison()

    def _pred_comparison(self) -> Predicate:
        start = self.span_here()
        lhs = self.parse_expr()
        t = self.peek()
        if t.kind == "punct" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            op = self.next().text
            rhs = self.parse_expr()
            return Compare(op, lhs, rhs, self.span_from(start))
        if t.kind == "kw" and t.text == "in":
            self.next()
            rhs = self.parse_expr()
            return Member(lhs, rhs, self.span_from(start))
        if isinstance(lhs, Apply):
            return AtomApply(lhs.fn, lhs.args, self.span_from(start))
        raise self.error("expected a comparison operator or 'in'")

    # -- processes -----------------------------------------------------------

    def parse_process(self) -> ProcessTerm:
        start = self.span_here()
        left = self._proc_choice()
        if self.accept("punct", "|"):
            right = self.parse_process()
            return Par(left, right, self.span_from(start))
        return left

    def _proc_choice(self) -> ProcessTerm:
        start = self.span_here()
        left = self._proc_prefixed()
        if self.accept("punct", "+"):
            right = self._proc_choice()
            return Choice(left, right, self.span_from(start))
        return left

    def _proc_prefixed(self) -> ProcessTerm:
        start = self.span_here()
        t = self.peek()
        if t.kind == "int" and t.text == "0":
            self.next()
            return Inact(self.span_from(start))
        if t.kind == "ident":
            name = self.next().text
            return Call(name, span=self.span_from(start))
        if t.kind == "punct" and t.text == "<":
            self.next()
            guard = self.parse_pred()
            self.expect("punct", ">")
            body = self._proc_prefixed()
            return Aware(guard, body, self.span_from(start))
        if t.kind == "punct" and t.text == "(":
            after = self._after_matching_paren()
            if after == "@":
                return self._proc_output(start)
            if after == "(":
                return self._proc_input(start)
            self.next()
            inner = self.parse_process()
            self.expect("punct", ")")
            return inner
        raise self.error(f"expected a process, found {t.text!r}")

    def _after_matching_paren(self) -> str:
        """Text of the token following the parenthesised group starting
        at the current position (used to tell outputs, inputs and
        grouping apart)."""
        depth = 0
        i = self.pos
        while i < len(self.toks):
            t = self.toks[i]
            if t.kind == "punct" and t.text in ("(", "[", "{"):
                depth += 1
            elif t.kind == "punct" and t.text in (")", "]", "}"):
                depth -= 1
                if depth == 0:
                    nxt = self.toks[i + 1] if i + 1 < len(self.toks) else None
                    return nxt.text if nxt else ""
            elif t.kind == "eof":
                break
            i += 1
        return ""

    def _proc_output(self, start: Span) -> ProcessTerm:
        self.expect("punct", "(")
        payload = []
        if not self.at("punct", ")"):
            payload.append(self.parse_expr())
            while self.accept("punct", ","):
                payload.append(self.parse_expr())
        self.expect("punct", ")")
        self.expect("punct", "@")
        self.expect("punct", "(")
        target = self.parse_pred()
        self.expect("punct", ")")
        self.expect("punct", ".")
        cont = self._parse_updproc()
        return Output(tuple(payload), target, cont, self.span_from(start))

    def _proc_input(self, start: Span) -> ProcessTerm:
        self.expect("punct", "(")
        guard = self.parse_pred()
        self.expect("punct", ")")
        self.expect("punct", "(")
        binders = []
        if not self.at("punct", ")"):
            binders.append(self.expect("ident").text)
            while self.accept("punct", ","):
                binders.append(self.expect("ident").text)
        self.expect("punct", ")")
        self.expect("punct", ".")
        cont = self._parse_updproc()
        return Input(guard, tuple(binders), cont, self.span_from(start))

    def _parse_updproc(self) -> UpdateSeq:
        updates: List[Update] = []
        while self.at("punct", "["):
            self.next()
            updates.append(self._parse_update())
            while self.accept("punct", ","):
                updates.append(self._parse_update())
            self.expect("punct", "]")
        # '.' binds tightest: the continuation is a single prefixed
        # process; parenthesise to continue with a parallel or a choice.
        proc = self._proc_prefixed()
        return UpdateSeq(tuple(updates), proc)

    def _parse_update(self) -> Update:
        start = self.span_here()
        name = self.expect("ident").text
        index = self._parse_index()
        self.expect("punct", ":=")
        rhs = self.parse_expr()
        return Update(name, index, rhs, self.span_from(start))

    # -- properties ----------------------------------------------------------

    def _parse_event(self):
        t = self.peek()
        if t.kind == "kw" and t.text in ("sent", "received"):
            self.next()
            self.expect("punct", "(")
            if self.accept("punct", "*"):
                comp = "*"
            else:
                comp = self.expect("ident").text
            self.expect("punct", ",")
            tag = self.expect("string").text
            self.expect("punct", ")")
            return Sent(comp, tag) if t.text == "sent" else Received(comp, tag)
        raise self.error("expected 'sent' or 'received'")

    def _parse_goal_events(self) -> Tuple:
        if self.accept("punct", "("):
            goals = [self._parse_event()]
            while self.accept("punct", "||"):
                goals.append(self._parse_event())
            self.expect("punct", ")")
            return tuple(goals)
        goals = [self._parse_event()]
        while self.accept("punct", "||"):
            goals.append(self._parse_event())
        return tuple(goals)

    def _parse_state_expr(self) -> StateExpr:
        return self._sexpr_or()

    def _sexpr_or(self) -> StateExpr:
        e = self._sexpr_and()
        while self.accept("punct", "||"):
            e = SOr(e, self._sexpr_and())
        return e

    def _sexpr_and(self) -> StateExpr:
        e = self._sexpr_unary()
        while self.accept("punct", "&&"):
            e = SAnd(e, self._sexpr_unary())
        return e

    def _sexpr_unary(self) -> StateExpr:
        if self.accept("punct", "!"):
            return SNot(self._sexpr_unary())
        if self.accept("kw", "tt"):
            return STrue()
        if self.accept("kw", "ff"):
            return SFalse()
        if self.accept("punct", "("):
            e = self._sexpr_or()
            self.expect("punct", ")")
            return e
        if self.accept("punct", "*"):
            comp = "*"
        else:
            comp = self.expect("ident").text
        self.expect("punct", ".")
        attr = self.expect("ident").text
        index: Tuple[Value, ...] = ()
        if self.accept("punct", "["):
            idx = [self.parse_value()]
            while self.accept("punct", ","):
                idx.append(self.parse_value())
            self.expect("punct", "]")
            index = tuple(idx)
        t = self.peek()
        if not (t.kind == "punct" and t.text in ("=", "!=", "<", "<=", ">", ">=")):
            raise self.error("expected a comparison operator")
        op = self.next().text
        value = self.parse_value()
        return SCompare(comp, attr, index, op, value)

    def _parse_property(self) -> Property:
        if self.accept("kw", "reachable"):
            t = self.peek()
            if t.kind == "kw" and t.text in ("sent", "received"):
                return Reachable(self._parse_event())
            return Reachable(self._parse_state_expr())
        if self.accept("kw", "invariant"):
            return Invariant(self._parse_state_expr())
        trigger = self._parse_event()
        self.expect("kw", "leadsto")
        goals = self._parse_goal_events()
        return LeadsTo(trigger, goals)

    # -- declarations ----------------------------------------------------------

    def parse_spec(self) -> SystemSpec:
        components: List[ComponentDecl] = []
        procs: List[Tuple[str, ProcessTerm]] = []
        externs: List[Tuple[str, object]] = []
        props: List[Tuple[str, Property]] = []
        while not self.at("eof"):
            if self.at("kw", "extern"):
                externs.append(self._parse_extern())
            elif self.at("kw", "proc"):
                self.next()
                name = self.expect("ident").text
                self.expect("punct", "=")
                procs.append((name, self.parse_process()))
            elif self.at("kw", "component"):
                components.append(self._parse_component())
            elif self.at("kw", "property"):
                self.next()
                name = self.expect("ident").text
                self.expect("punct", "=")
                props.append((name, self._parse_property()))
            else:
                raise self.error(
                    f"expected a declaration, found {self.peek().text!r}"
                )
        return SystemSpec(tuple(components), tuple(procs), tuple(externs), tuple(props))

    def _parse_extern(self):
        self.expect("kw", "extern")
        name = self.expect("ident").text
        self.expect("punct", ":")
        if self.accept("kw", "map"):
            self.expect("punct", "{")
            rows = {}
            while True:
                self.expect("punct", "(")
                args = [self.parse_value()]
                while self.accept("punct", ","):
                    args.append(self.parse_value())
                self.expect("punct", ")")
                self.expect("punct", "->")
                rows[tuple(args)] = self.parse_value()
                if not self.accept("punct", ","):
                    break
            self.expect("punct", "}")
            return (name, TableFn.of(rows))
        self.expect("punct", "{")
        values = [self.parse_value()]
        while self.accept("punct", ","):
            values.append(self.parse_value())
        self.expect("punct", "}")
        return (name, EnumDomain.of(values))

    def _parse_component(self) -> ComponentDecl:
        start = self.span_here()
        self.expect("kw", "component")
        name = self.expect("ident").text
        self.expect("punct", "{")
        self.expect("kw", "attrs")
        self.expect("punct", "{")
        attrs = {}
        while not self.at("punct", "}"):
            aname = self.expect("ident").text
            index: Tuple[Value, ...] = ()
            if self.accept("punct", "["):
                idx = [self.parse_value()]
                while self.accept("punct", ","):
                    idx.append(self.parse_value())
                self.expect("punct", "]")
                index = tuple(idx)
            self.expect("punct", "=")
            attrs[(aname, index)] = self.parse_value()
            self.expect("punct", ";")
        self.expect("punct", "}")
        self.expect("kw", "interface")
        self.expect("punct", "{")
        iface: List[str] = []
        if self.at("ident"):
            iface.append(self.next().text)
            while self.accept("punct", ","):
                iface.append(self.expect("ident").text)
        self.expect("punct", "}")
        self.expect("kw", "run")
        proc = self.parse_process()
        self.expect("punct", "}")
        sorted_attrs = tuple(
            sorted(attrs.items(), key=lambda kv: (kv[0][0], tuple(ser_value(v) for v in kv[0][1])))
        )
        return ComponentDecl(name, sorted_attrs, tuple(iface), proc, self.span_from(start))


def parse_spec(source: str, filename: str = "<spec>"):
    """Parses a full specification.

    Returns (spec, diagnostics); on error spec is None and the list is
    non-empty.
    """
    try:
        tokens = _lex(source, filename)
        parser = _Parser(tokens, filename)
        spec = parser.parse_spec()
        return spec, []
    except ParseError as e:
        return None, [e.diagnostic]


def parse_process_str(source: str, filename: str = "<proc>") -> ProcessTerm:
    p = _Parser(_lex(source, filename), filename)
    proc = p.parse_process()
    p.expect("eof")
    return proc


def parse_pred_str(source: str, filename: str = "<pred>") -> Predicate:
    p = _Parser(_lex(source, filename), filename)
    pred = p.parse_pred()
    p.expect("eof")
    return pred


def parse_expr_str(source: str, filename: str = "<expr>"):
    p = _Parser(_lex(source, filename), filename)
    e = p.parse_expr()
    p.expect("eof")
    return e
