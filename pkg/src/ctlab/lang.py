"""Values, expressions, and leakage observations.

Both interpreters (structured commands and control-flow graphs) share one
expression language.  Values are signed 64-bit integers with wrap-around
arithmetic, or booleans; the two are strictly separate, there is no implicit
conversion in either direction.  Expressions are pure and leak nothing when
evaluated: all leakage in this package is attached to memory accesses and
branches, never to arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

INT_BITS = 64
_INT_MIN = -(1 << (INT_BITS - 1))
_INT_MOD = 1 << INT_BITS

Value = Union[int, bool]


def wrap_int(n: int) -> int:
    """Reduce an unbounded integer to signed 64-bit two's complement."""
    return (n - _INT_MIN) % _INT_MOD + _INT_MIN


class LangError(Exception):
    """Base class for language-level errors."""


class ExprTypeError(LangError):
    """An operator was applied to operands of the wrong kind.

    Carries the offending subexpression so error messages can point at it.
    """

    def __init__(self, expr: "Expr", message: str):
        self.expr = expr
        super().__init__(f"{message}: {format_expr(expr)}")


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Op:
    kind: str
    args: "tuple[Expr, ...]"

    def __post_init__(self):
        arity = OP_ARITY.get(self.kind)
        if arity is None:
            raise ValueError(f"unknown operator {self.kind!r}")
        if len(self.args) != arity:
            raise ValueError(
                f"operator {self.kind!r} expects {arity} operands, got {len(self.args)}"
            )


Expr = Union[Const, Var, Op]

# mux is the branchless select: it evaluates all three operands and leaks
# nothing, unlike a conditional branch.
OP_ARITY = {
    "neg": 1,
    "not": 1,
    "+": 2,
    "-": 2,
    "*": 2,
    "==": 2,
    "!=": 2,
    "<": 2,
    "<=": 2,
    "&&": 2,
    "||": 2,
    "mux": 3,
}


def _want_int(v: Value, e: Expr) -> int:
    # bool is a subclass of int in Python, so the bool check must come first
    if isinstance(v, bool) or not isinstance(v, int):
        raise ExprTypeError(e, "expected an integer operand")
    return v


def _want_bool(v: Value, e: Expr) -> bool:
    if not isinstance(v, bool):
        raise ExprTypeError(e, "expected a boolean operand")
    return v


def eval_expr(e: Expr, regs: "dict[str, Value]") -> Value:
    """Evaluate a pure expression against a total register map.

    Unknown registers read as 0.  Raises ExprTypeError when an operator
    meets operands of the wrong kind; the error names the subexpression.
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return regs.get(e.name, 0)
    if isinstance(e, Op):
        k = e.kind
        if k == "neg":
            return wrap_int(-_want_int(eval_expr(e.args[0], regs), e))
        if k == "not":
            return not _want_bool(eval_expr(e.args[0], regs), e)
        if k in ("+", "-", "*"):
            a = _want_int(eval_expr(e.args[0], regs), e)
            b = _want_int(eval_expr(e.args[1], regs), e)
            if k == "+":
                return wrap_int(a + b)
            if k == "-":
                return wrap_int(a - b)
            return wrap_int(a * b)
        if k in ("==", "!="):
            a = eval_expr(e.args[0], regs)
            b = eval_expr(e.args[1], regs)
            if isinstance(a, bool) != isinstance(b, bool):
                raise ExprTypeError(e, "comparison of integer against boolean")
            return (a == b) if k == "==" else (a != b)
        if k in ("<", "<="):
            a = _want_int(eval_expr(e.args[0], regs), e)
            b = _want_int(eval_expr(e.args[1], regs), e)
            return (a < b) if k == "<" else (a <= b)
        if k in ("&&", "||"):
            a = _want_bool(eval_expr(e.args[0], regs), e)
            b = _want_bool(eval_expr(e.args[1], regs), e)
            return (a and b) if k == "&&" else (a or b)
        if k == "mux":
            c = _want_bool(eval_expr(e.args[0], regs), e)
            a = eval_expr(e.args[1], regs)
            b = eval_expr(e.args[2], regs)
            if isinstance(a, bool) != isinstance(b, bool):
                raise ExprTypeError(e, "mux arms must have the same kind")
            return a if c else b
    raise ExprTypeError(e, "not an expression")


def eval_addr(e: Expr, regs: "dict[str, Value]") -> int:
    """Evaluate an address expression; booleans are not addresses."""
    a = eval_expr(e, regs)
    if isinstance(a, bool) or not isinstance(a, int):
        raise ExprTypeError(e, "memory address must be an integer")
    return a


def eval_cond(e: Expr, regs: "dict[str, Value]") -> bool:
    """Evaluate a branch condition; integers are not conditions."""
    b = eval_expr(e, regs)
    if not isinstance(b, bool):
        raise ExprTypeError(e, "branch condition must be a boolean")
    return b


def expr_vars(e: Expr) -> "frozenset[str]":
    """The set of register names an expression reads."""
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Op):
        out: frozenset = frozenset()
        for a in e.args:
            out |= expr_vars(a)
        return out
    return frozenset()


# ---------------------------------------------------------------------------
# Observations

class Observation(NamedTuple):
    """One leaked event: nothing, a memory address, or a branch direction."""

    kind: str  # "none" | "addr" | "branch"
    value: object = None


OBS_NONE = Observation("none")


def obs_addr(a: int) -> Observation:
    return Observation("addr", a)


def obs_branch(b: bool) -> Observation:
    return Observation("branch", b)


Trace = "tuple[Observation, ...]"


def format_observation(o: Observation) -> str:
    if o.kind == "none":
        return "."
    if o.kind == "addr":
        return f"addr({o.value})"
    if o.kind == "branch":
        return f"branch({'true' if o.value else 'false'})"
    return repr(o)


def format_trace(trace) -> str:
    return "[" + ", ".join(format_observation(o) for o in trace) + "]"


# ---------------------------------------------------------------------------
# Expression printing

_BIN_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 3, "<=": 3,
             "+": 4, "-": 4, "*": 5}


def k_nonassoc(kind: str) -> bool:
    return kind in ("==", "!=", "<", "<=")


def format_expr(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Op):
        if e.kind == "neg":
            return f"-{format_expr(e.args[0], 6)}"
        if e.kind == "not":
            return f"!{format_expr(e.args[0], 6)}"
        if e.kind == "mux":
            parts = ", ".join(format_expr(a, 0) for a in e.args)
            return f"mux({parts})"
        prec = _BIN_PREC[e.kind]
        # comparisons are non-associative in the grammar, so a comparison
        # operand of a comparison needs parentheses on either side
        left_prec = prec + 1 if k_nonassoc(e.kind) else prec
        left = format_expr(e.args[0], left_prec)
        right = format_expr(e.args[1], prec + 1)
        s = f"{left} {e.kind} {right}"
        if prec < parent_prec:
            s = f"({s})"
        return s
    raise TypeError(f"not an expression: {e!r}")
