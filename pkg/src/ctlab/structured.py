"""The structured while-language and its small-step leakage semantics.

Commands form a monoid under sequencing with the empty program as neutral
element; we keep every command in a right-nested normal form where the left
component of a sequence is never itself a sequence or the empty program.
Equality of commands is equality of normal forms, ignoring analysis
annotations.

A state is (remaining command, registers, memory).  Each step emits exactly
one observation: assignments emit nothing, loads and stores leak the
evaluated address, conditionals and loop tests leak the branch direction.
Expression evaluation itself never leaks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Union

from .lang import (
    Expr,
    LangError,
    OBS_NONE,
    Observation,
    eval_addr,
    eval_cond,
    eval_expr,
    expr_vars,
    format_expr,
    obs_addr,
    obs_branch,
)


@dataclass(frozen=True)
class Nil:
    ann: object = field(default=None, compare=False)


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr
    ann: object = field(default=None, compare=False)


@dataclass(frozen=True)
class Load:
    var: str
    addr: Expr
    ann: object = field(default=None, compare=False)


@dataclass(frozen=True)
class Store:
    addr: Expr
    var: str
    ann: object = field(default=None, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Cmd"
    orelse: "Cmd"
    ann: object = field(default=None, compare=False)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: "Cmd"
    ann: object = field(default=None, compare=False)


@dataclass(frozen=True)
class Seq:
    head: "Cmd"  # never a Seq or Nil
    tail: "Cmd"


Cmd = Union[Nil, Assign, Load, Store, If, While, Seq]
AtomicCmd = (Assign, Load, Store)

NIL = Nil()


def seq(a: Cmd, b: Cmd) -> Cmd:
    """Sequence two commands, keeping the right-nested normal form."""
    if isinstance(a, Nil):
        return b
    if isinstance(b, Nil):
        return a
    if isinstance(a, Seq):
        return seq(a.head, seq(a.tail, b))
    return Seq(a, b)


def seq_all(cmds) -> Cmd:
    out: Cmd = NIL
    for c in reversed(list(cmds)):
        out = seq(c, out)
    return out


def split_head(c: Cmd) -> "tuple[Cmd, Cmd]":
    """Split a non-empty command into its first node and the rest."""
    if isinstance(c, Seq):
        return c.head, c.tail
    return c, NIL


def cmd_vars(c: Cmd) -> "frozenset[str]":
    """All register names a command mentions (read or written)."""
    if isinstance(c, Nil):
        return frozenset()
    if isinstance(c, Assign):
        return frozenset((c.var,)) | expr_vars(c.expr)
    if isinstance(c, Load):
        return frozenset((c.var,)) | expr_vars(c.addr)
    if isinstance(c, Store):
        return frozenset((c.var,)) | expr_vars(c.addr)
    if isinstance(c, If):
        return expr_vars(c.cond) | cmd_vars(c.then) | cmd_vars(c.orelse)
    if isinstance(c, While):
        return expr_vars(c.cond) | cmd_vars(c.body)
    if isinstance(c, Seq):
        return cmd_vars(c.head) | cmd_vars(c.tail)
    raise TypeError(f"not a command: {c!r}")


def cmd_size(c: Cmd) -> int:
    """Number of command nodes, not counting sequencing or the empty program."""
    if isinstance(c, Nil):
        return 0
    if isinstance(c, Seq):
        return cmd_size(c.head) + cmd_size(c.tail)
    if isinstance(c, If):
        return 1 + cmd_size(c.then) + cmd_size(c.orelse)
    if isinstance(c, While):
        return 1 + cmd_size(c.body)
    return 1


# ---------------------------------------------------------------------------
# Small-step semantics

class StructState(NamedTuple):
    code: Cmd
    regs: dict
    mem: dict


class StepError(LangError):
    """Stepping failed: final state, or a dynamic type error."""


def is_final(state: StructState) -> bool:
    return isinstance(state.code, Nil)


def step(state: StructState) -> "tuple[Observation, StructState]":
    """Execute one atomic action, branch test, or loop test."""
    code, regs, mem = state
    if isinstance(code, Nil):
        raise StepError("cannot step a final state")
    head, rest = split_head(code)
    if isinstance(head, Assign):
        v = eval_expr(head.expr, regs)
        return OBS_NONE, StructState(rest, {**regs, head.var: v}, mem)
    if isinstance(head, Load):
        a = eval_addr(head.addr, regs)
        v = mem.get(a, 0)
        return obs_addr(a), StructState(rest, {**regs, head.var: v}, mem)
    if isinstance(head, Store):
        a = eval_addr(head.addr, regs)
        v = regs.get(head.var, 0)
        return obs_addr(a), StructState(rest, regs, {**mem, a: v})
    if isinstance(head, If):
        b = eval_cond(head.cond, regs)
        branch = head.then if b else head.orelse
        return obs_branch(b), StructState(seq(branch, rest), regs, mem)
    if isinstance(head, While):
        b = eval_cond(head.cond, regs)
        if b:
            cont = seq(head.body, seq(head, rest))
            return obs_branch(True), StructState(cont, regs, mem)
        return obs_branch(False), StructState(rest, regs, mem)
    raise StepError(f"cannot step head {head!r}")


class RunError(LangError):
    """A step error raised during a run, tagged with the step index."""

    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"error at step {index}: {cause}")


class RunResult(NamedTuple):
    trace: "tuple[Observation, ...]"
    final: bool  # True when the end state is final, False when fuel ran out
    state: object


def run(state, stepper, finalizer, fuel: int):
    """Drive a state with a step function for at most ``fuel`` steps."""
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    trace = []
    for i in range(fuel):
        if finalizer(state):
            return RunResult(tuple(trace), True, state)
        try:
            obs, state = stepper(state)
        except LangError as err:
            raise RunError(i, err) from err
        trace.append(obs)
    return RunResult(tuple(trace), finalizer(state), state)


def initial_state(prog: Cmd, inp) -> StructState:
    """Build the start state for a concrete input; everything else is 0."""
    return StructState(prog, dict(inp.regs), dict(inp.mem))


def run_struct(prog: Cmd, inp, fuel: int = 10000) -> RunResult:
    return run(initial_state(prog, inp), step, is_final, fuel)


def behavior(prog: Cmd, inp, fuel: int = 10000) -> RunResult:
    """The maximal trace reachable within the fuel budget.

    Semantically the behavior of a deterministic program is the prefix
    closure of this trace; comparing maximal traces (plus whether the runs
    terminated) compares behaviors.
    """
    return run_struct(prog, inp, fuel)


# ---------------------------------------------------------------------------
# Printing

def format_cmd(c: Cmd, indent: int = 0) -> str:
    pad = "    " * indent
    if isinstance(c, Nil):
        return ""
    if isinstance(c, Seq):
        return format_cmd(c.head, indent) + format_cmd(c.tail, indent)
    if isinstance(c, Assign):
        return f"{pad}{c.var} := {format_expr(c.expr)};\n"
    if isinstance(c, Load):
        return f"{pad}{c.var} := load[{format_expr(c.addr)}];\n"
    if isinstance(c, Store):
        return f"{pad}store[{format_expr(c.addr)}] := {c.var};\n"
    if isinstance(c, If):
        then = format_cmd(c.then, indent + 1)
        orelse = format_cmd(c.orelse, indent + 1)
        return (
            f"{pad}if ({format_expr(c.cond)}) {{\n{then}{pad}}} else {{\n"
            f"{orelse}{pad}}}\n"
        )
    if isinstance(c, While):
        body = format_cmd(c.body, indent + 1)
        return f"{pad}while ({format_expr(c.cond)}) {{\n{body}{pad}}}\n"
    raise TypeError(f"not a command: {c!r}")
