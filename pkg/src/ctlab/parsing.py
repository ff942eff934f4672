"""Parsers for the three text formats: programs (.sct), graphs (.cfg),
input specs (.spec).

All parse errors carry a line:column position.  Identifiers starting with
two underscores are reserved for compiler-introduced temporaries and are
rejected on input.  ``#`` starts a comment that runs to end of line.

Negative integer literals are folded during parsing, so ``-5`` is the
constant -5 rather than a negation node; printers emit negative constants
the same way, which keeps print/parse round trips structural.
"""

from __future__ import annotations

import re

from .lang import Const, Op, Var, wrap_int
from .structured import Assign, If, Load, NIL, Nil, Seq, Store, While, seq, seq_all
from .cfg import BranchNode, CfgProgram, InstrNode, validate_cfg
from .inputs import (
    InputSpec,
    MemoryInit,
    MemoryInput,
    RegisterInput,
    PUBLIC,
    SECRET,
)


class ParseError(Exception):
    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


KEYWORDS = {
    "if", "else", "while", "skip", "load", "store", "mux", "true", "false",
    "cfg", "entry", "exit", "br", "nop", "input", "mem", "init",
    "public", "secret",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|==|!=|<=|&&|\|\||\.\.|->|[-+*<!(){}\[\];:?,])
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(text: str, keep_newlines: bool = False) -> "list[Token]":
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            if keep_newlines:
                tokens.append(Token("nl", s, line, col))
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(s)
        else:
            tokens.append(Token(kind, s, line, col))
            col += len(s)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Cursor:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, message: str):
        t = self.peek()
        raise ParseError(t.line, t.col, message)

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text or t.kind == "eof":
            self.error(f"expected {text!r}, found {t.text!r}" if t.text else f"expected {text!r}")
        return self.next()

    def take_ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident" or t.text in KEYWORDS:
            self.error(f"expected {what}, found {t.text!r}" if t.text else f"expected {what}")
        if t.text.startswith("__"):
            self.error(
                f"identifier {t.text!r} is reserved (double underscore prefix)"
            )
        return self.next()


# ---------------------------------------------------------------------------
# Expressions

def _parse_int(cur: _Cursor) -> int:
    t = cur.next()
    v = wrap_int(int(t.text))
    return v


def _primary(cur: _Cursor):
    t = cur.peek()
    if t.kind == "num":
        return Const(_parse_int(cur))
    if t.text == "true":
        cur.next()
        return Const(True)
    if t.text == "false":
        cur.next()
        return Const(False)
    if t.text == "mux":
        cur.next()
        cur.expect("(")
        a = _expr(cur)
        cur.expect(",")
        b = _expr(cur)
        cur.expect(",")
        c = _expr(cur)
        cur.expect(")")
        return Op("mux", (a, b, c))
    if t.text == "(":
        cur.next()
        e = _expr(cur)
        cur.expect(")")
        return e
    if t.kind == "ident":
        return Var(cur.take_ident().text)
    cur.error(f"expected an expression, found {t.text!r}" if t.text else "expected an expression")


def _unary(cur: _Cursor):
    t = cur.peek()
    if t.text == "-":
        cur.next()
        if cur.peek().kind == "num":
            return Const(wrap_int(-_parse_int(cur)))
        return Op("neg", (_unary(cur),))
    if t.text == "!":
        cur.next()
        return Op("not", (_unary(cur),))
    return _primary(cur)


def _mul(cur: _Cursor):
    e = _unary(cur)
    while cur.peek().text == "*":
        cur.next()
        e = Op("*", (e, _unary(cur)))
    return e


def _add(cur: _Cursor):
    e = _mul(cur)
    while cur.peek().text in ("+", "-"):
        op = cur.next().text
        e = Op(op, (e, _mul(cur)))
    return e


def _cmp(cur: _Cursor):
    e = _add(cur)
    if cur.peek().text in ("==", "!=", "<", "<="):
        op = cur.next().text
        e = Op(op, (e, _add(cur)))
    return e


def _and(cur: _Cursor):
    e = _cmp(cur)
    while cur.peek().text == "&&":
        cur.next()
        e = Op("&&", (e, _cmp(cur)))
    return e


def _expr(cur: _Cursor):
    e = _and(cur)
    while cur.peek().text == "||":
        cur.next()
        e = Op("||", (e, _and(cur)))
    return e


def parse_expr(text: str):
    cur = _Cursor(tokenize(text))
    e = _expr(cur)
    if cur.peek().kind != "eof":
        cur.error(f"trailing input after expression: {cur.peek().text!r}")
    return e


# ---------------------------------------------------------------------------
# Structured programs

def _block(cur: _Cursor):
    cur.expect("{")
    stmts = []
    while cur.peek().text != "}":
        stmts.append(_stmt(cur))
    cur.expect("}")
    return seq_all(stmts)


def _stmt(cur: _Cursor):
    t = cur.peek()
    if t.kind == "eof":
        cur.error("expected a statement")
    if t.text == "skip":
        cur.next()
        cur.expect(";")
        return NIL
    if t.text == "if":
        cur.next()
        cur.expect("(")
        cond = _expr(cur)
        cur.expect(")")
        then = _block(cur)
        orelse = NIL
        if cur.peek().text == "else":
            cur.next()
            orelse = _block(cur)
        return If(cond, then, orelse)
    if t.text == "while":
        cur.next()
        cur.expect("(")
        cond = _expr(cur)
        cur.expect(")")
        return While(cond, _block(cur))
    if t.text == "store":
        cur.next()
        cur.expect("[")
        addr = _expr(cur)
        cur.expect("]")
        cur.expect(":=")
        var = cur.take_ident("a variable (store values must be variables)")
        cur.expect(";")
        return Store(addr, var.text)
    name = cur.take_ident("a variable")
    cur.expect(":=")
    if cur.peek().text == "load":
        cur.next()
        cur.expect("[")
        addr = _expr(cur)
        cur.expect("]")
        cur.expect(";")
        return Load(name.text, addr)
    e = _expr(cur)
    cur.expect(";")
    return Assign(name.text, e)


def parse_structured(text: str):
    """Parse a structured program into its right-nested normal form."""
    cur = _Cursor(tokenize(text))
    stmts = []
    while cur.peek().kind != "eof":
        stmts.append(_stmt(cur))
    return seq_all(stmts)


# ---------------------------------------------------------------------------
# CFG programs

def _label(cur: _Cursor) -> str:
    return cur.take_ident("a label").text


def parse_cfg(text: str) -> CfgProgram:
    """Parse a graph program; validates the result before returning it."""
    cur = _Cursor(tokenize(text, keep_newlines=True))

    def skip_nl():
        while cur.peek().kind == "nl":
            cur.next()

    skip_nl()
    cur.expect("cfg")
    skip_nl()
    cur.expect("entry")
    entry = _label(cur)
    skip_nl()
    cur.expect("exit")
    exit_label = _label(cur)
    skip_nl()
    nodes = []
    while cur.peek().kind != "eof":
        label = _label(cur)
        cur.expect(":")
        t = cur.peek()
        if t.text == "br":
            cur.next()
            cond = _expr(cur)
            cur.expect("?")
            st = _label(cur)
            cur.expect(":")
            sf = _label(cur)
            nodes.append(BranchNode(label, cond, st, sf))
        elif t.text == "nop":
            cur.next()
            cur.expect("->")
            nodes.append(InstrNode(label, None, _label(cur)))
        elif t.text == "store":
            cur.next()
            cur.expect("[")
            addr = _expr(cur)
            cur.expect("]")
            cur.expect(":=")
            var = cur.take_ident("a variable (store values must be variables)")
            cur.expect("->")
            nodes.append(InstrNode(label, Store(addr, var.text), _label(cur)))
        else:
            name = cur.take_ident("a variable")
            cur.expect(":=")
            if cur.peek().text == "load":
                cur.next()
                cur.expect("[")
                addr = _expr(cur)
                cur.expect("]")
                cur.expect("->")
                nodes.append(InstrNode(label, Load(name.text, addr), _label(cur)))
            else:
                e = _expr(cur)
                cur.expect("->")
                nodes.append(InstrNode(label, Assign(name.text, e), _label(cur)))
        if cur.peek().kind not in ("nl", "eof"):
            cur.error(f"expected end of line, found {cur.peek().text!r}")
        skip_nl()
    g = CfgProgram(tuple(nodes), entry, exit_label)
    validate_cfg(g)
    return g


# ---------------------------------------------------------------------------
# Input specs

def _spec_int(cur: _Cursor) -> int:
    neg = False
    if cur.peek().text == "-":
        cur.next()
        neg = True
    t = cur.peek()
    if t.kind != "num":
        cur.error(f"expected an integer, found {t.text!r}" if t.text else "expected an integer")
    cur.next()
    v = int(t.text)
    return wrap_int(-v if neg else v)


def _visibility(cur: _Cursor) -> str:
    t = cur.peek()
    if t.text == PUBLIC:
        cur.next()
        return PUBLIC
    if t.text == SECRET:
        cur.next()
        return SECRET
    cur.error(f"expected 'public' or 'secret', found {t.text!r}")


def _range(cur: _Cursor):
    lo = _spec_int(cur)
    cur.expect("..")
    hi = _spec_int(cur)
    return lo, hi


def parse_spec(text: str, max_range=None, max_domain=None) -> InputSpec:
    cur = _Cursor(tokenize(text, keep_newlines=True))
    registers = []
    memory = []
    inits = []

    def skip_nl():
        while cur.peek().kind == "nl":
            cur.next()

    skip_nl()
    while cur.peek().kind != "eof":
        t = cur.peek()
        if t.text == "input":
            cur.next()
            name = cur.take_ident("a register name").text
            vis = _visibility(cur)
            lo, hi = _range(cur)
            registers.append(RegisterInput(name, vis, lo, hi))
        elif t.text == "mem":
            cur.next()
            addr = _spec_int(cur)
            if cur.peek().text == "init":
                cur.next()
                inits.append(MemoryInit(addr, _spec_int(cur)))
            else:
                vis = _visibility(cur)
                lo, hi = _range(cur)
                memory.append(MemoryInput(addr, vis, lo, hi))
        else:
            cur.error(f"expected 'input' or 'mem', found {t.text!r}")
        if cur.peek().kind not in ("nl", "eof"):
            cur.error(f"expected end of line, found {cur.peek().text!r}")
        skip_nl()
    kwargs = {}
    if max_range is not None:
        kwargs["max_range"] = max_range
    if max_domain is not None:
        kwargs["max_domain"] = max_domain
    return InputSpec(tuple(registers), tuple(memory), tuple(inits), **kwargs)
