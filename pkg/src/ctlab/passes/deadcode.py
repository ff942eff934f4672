"""Dead code removal passes over structured programs.

Dead branch elimination folds conditionals whose condition is a boolean
literal, dropping the untaken arm and the branch observation with it.

Liveness analysis annotates every node with the set of registers that are
dead at that program point (immediately before the node).  A register is
dead when no continuation of the program reads it before writing it; the
values of all registers at program exit count as observable, so a register
that survives to the end untouched is live throughout.  Memory is never
considered dead.  Dead assignment elimination then removes assignments
whose target is dead immediately afterwards; dead load elimination does the
same for loads, which also removes their address observation.

Dead store elimination is deliberately narrow: it removes a store that
writes a just-loaded value straight back to the address it came from.
"""

from __future__ import annotations

from ..lang import Const, expr_vars
from ..structured import (
    Assign,
    Cmd,
    If,
    Load,
    NIL,
    Nil,
    Seq,
    Store,
    While,
    cmd_vars,
    seq,
    split_head,
)
from .substitute import PassError


def dead_branch_eliminate(c: Cmd) -> Cmd:
    """Fold conditionals with literal conditions; recurse everywhere else."""
    if isinstance(c, Seq):
        return seq(dead_branch_eliminate(c.head), dead_branch_eliminate(c.tail))
    if isinstance(c, If):
        b = _literal_bool(c)
        if b is not None:
            return dead_branch_eliminate(c.then if b else c.orelse)
        return If(c.cond, dead_branch_eliminate(c.then),
                  dead_branch_eliminate(c.orelse), c.ann)
    if isinstance(c, While):
        return While(c.cond, dead_branch_eliminate(c.body), c.ann)
    return c


def _literal_bool(c: Cmd):
    """The literal condition of a dead conditional node, else None."""
    if isinstance(c, If) and isinstance(c.cond, Const) and isinstance(c.cond.value, bool):
        return c.cond.value
    return None


# ---------------------------------------------------------------------------
# Liveness

def liveness_analyze(c: Cmd, live_at_exit=None) -> Cmd:
    """Annotate each node with its dead set (a frozenset of register names).

    ``live_at_exit`` defaults to every register the program mentions, which
    makes final register contents observable and keeps every pass built on
    this analysis state-preserving at exit.
    """
    universe = cmd_vars(c)
    exit_live = universe if live_at_exit is None else frozenset(live_at_exit)
    annotated, _ = _live(c, exit_live, universe)
    return annotated


def _live(c: Cmd, out: "frozenset[str]", universe: "frozenset[str]"):
    """Return (annotated command, live-before set)."""
    if isinstance(c, Nil):
        return Nil(ann=universe - out), out
    if isinstance(c, Seq):
        tail, mid = _live(c.tail, out, universe)
        head, live_in = _live(c.head, mid, universe)
        return seq_keep(head, tail), live_in
    if isinstance(c, Assign):
        live_in = (out - {c.var}) | expr_vars(c.expr)
        return Assign(c.var, c.expr, universe - live_in), live_in
    if isinstance(c, Load):
        live_in = (out - {c.var}) | expr_vars(c.addr)
        return Load(c.var, c.addr, universe - live_in), live_in
    if isinstance(c, Store):
        live_in = out | expr_vars(c.addr) | {c.var}
        return Store(c.addr, c.var, universe - live_in), live_in
    if isinstance(c, If):
        then, lt = _live(c.then, out, universe)
        orelse, lf = _live(c.orelse, out, universe)
        live_in = expr_vars(c.cond) | lt | lf
        return If(c.cond, then, orelse, universe - live_in), live_in
    if isinstance(c, While):
        fix = out | expr_vars(c.cond)
        while True:
            body, lb = _live(c.body, fix, universe)
            nxt = out | expr_vars(c.cond) | lb
            if nxt == fix:
                return While(c.cond, body, universe - fix), fix
            fix = nxt
    raise PassError(f"not a command: {c!r}")


def seq_keep(a: Cmd, b: Cmd) -> Cmd:
    """Like seq, but keeps an annotated empty program when both are empty."""
    if isinstance(a, Nil) and isinstance(b, Nil):
        return a
    return seq(a, b)


def node_ann(c: Cmd):
    head, _ = split_head(c)
    return head.ann


def dead_after(rest: Cmd, exit_dead: "frozenset[str]"):
    """The dead set at the program point where ``rest`` starts.

    An empty continuation means the context's exit point."""
    if isinstance(rest, Nil):
        return exit_dead
    head, _ = split_head(rest)
    ann = head.ann
    if ann is None:
        raise PassError("liveness annotations missing; run liveness_analyze first")
    return ann


def _eliminate(c: Cmd, after: "frozenset[str]", removable) -> Cmd:
    """Shared recursion for dead assignment and dead load elimination.

    ``after`` is the dead set at the point following ``c`` in its context.
    Elimination decisions are taken against the source annotations.
    """
    if isinstance(c, Nil):
        return NIL
    head, rest = split_head(c)
    head_after = dead_after(rest, after)
    if isinstance(head, If):
        new_head: Cmd = If(head.cond, _eliminate(head.then, head_after, removable),
                           _eliminate(head.orelse, head_after, removable))
    elif isinstance(head, While):
        if head.ann is None:
            raise PassError("liveness annotations missing; run liveness_analyze first")
        new_head = While(head.cond, _eliminate(head.body, head.ann, removable))
    elif removable(head, head_after):
        new_head = NIL
    else:
        new_head = _strip(head)
    if isinstance(rest, Nil):
        return new_head
    return seq(new_head, _eliminate(rest, after, removable))


def _strip(c: Cmd) -> Cmd:
    if isinstance(c, Assign):
        return Assign(c.var, c.expr)
    if isinstance(c, Load):
        return Load(c.var, c.addr)
    if isinstance(c, Store):
        return Store(c.addr, c.var)
    raise PassError(f"not an atomic command: {c!r}")


def is_dead_assign(head: Cmd, after: "frozenset[str]") -> bool:
    return isinstance(head, Assign) and head.var in after


def is_dead_load(head: Cmd, after: "frozenset[str]") -> bool:
    return isinstance(head, Load) and head.var in after


def dead_assignment_eliminate(annotated: Cmd) -> Cmd:
    """Drop assignments to registers that are dead immediately afterwards."""
    return _eliminate(annotated, frozenset(), is_dead_assign)


def dead_load_eliminate(annotated: Cmd) -> Cmd:
    """Drop loads into registers that are dead immediately afterwards."""
    return _eliminate(annotated, frozenset(), is_dead_load)


# ---------------------------------------------------------------------------
# Dead stores

def self_store_head(c: Cmd) -> bool:
    """Whether ``c`` starts with a load immediately undone by a store.

    The pattern is exact: ``y := load[e]`` directly followed by
    ``store[e] := y`` with a structurally equal address that does not
    mention ``y``, so the store provably rewrites the freshly loaded value
    to the address it came from.
    """
    if isinstance(c, Nil):
        return False
    head, rest = split_head(c)
    if not isinstance(head, Load) or isinstance(rest, Nil):
        return False
    nxt, _ = split_head(rest)
    return (
        isinstance(nxt, Store)
        and nxt.addr == head.addr
        and nxt.var == head.var
        and head.var not in expr_vars(head.addr)
    )


def dead_store_eliminate(c: Cmd) -> Cmd:
    """Remove stores that write a just-loaded value back where it came from."""
    if isinstance(c, Nil):
        return NIL
    head, rest = split_head(c)
    if self_store_head(c):
        _, after = split_head(rest)
        return seq(head, dead_store_eliminate(after))
    if isinstance(head, If):
        head = If(head.cond, dead_store_eliminate(head.then),
                  dead_store_eliminate(head.orelse), head.ann)
    elif isinstance(head, While):
        head = While(head.cond, dead_store_eliminate(head.body), head.ann)
    return seq(head, dead_store_eliminate(rest)) if not isinstance(rest, Nil) else head
