"""Branch-shape passes: if conversion, its inverse, and branch coalescing.

If conversion turns a two-armed conditional whose arms are single
assignments to the same register into one straight-line assignment of a
three-operand select, removing the branch observation.  The inverse pass
undoes exactly that shape and is the one transformation here that can
introduce a leak that was not present before.  Branch coalescing collapses
conditionals whose arms are structurally identical; its graph counterpart
rewrites two-way branches with equal successors into a nop node.
"""

from __future__ import annotations

from ..lang import Op
from ..structured import Assign, Cmd, If, Nil, Seq, While, seq
from ..cfg import BranchNode, CfgProgram, InstrNode
from .substitute import PassError


def _single_assign(c: Cmd):
    """The node when a command is exactly one assignment, else None."""
    return c if isinstance(c, Assign) else None


def convertible_if(c) -> bool:
    """Whether a node is a conditional with single same-register assign arms."""
    if not isinstance(c, If):
        return False
    then = _single_assign(c.then)
    orelse = _single_assign(c.orelse)
    return then is not None and orelse is not None and then.var == orelse.var


def if_convert(c: Cmd) -> Cmd:
    """Rewrite ``if (e) { x := a } else { x := b }`` to ``x := mux(e, a, b)``."""
    if isinstance(c, Seq):
        return seq(if_convert(c.head), if_convert(c.tail))
    if isinstance(c, While):
        return While(c.cond, if_convert(c.body), c.ann)
    if isinstance(c, If):
        if convertible_if(c):
            return Assign(c.then.var,
                          Op("mux", (c.cond, c.then.expr, c.orelse.expr)))
        return If(c.cond, if_convert(c.then), if_convert(c.orelse), c.ann)
    return c


def inverse_if_convert(c: Cmd) -> Cmd:
    """Rewrite ``x := mux(e, a, b)`` back into a two-armed conditional."""
    if isinstance(c, Seq):
        return seq(inverse_if_convert(c.head), inverse_if_convert(c.tail))
    if isinstance(c, While):
        return While(c.cond, inverse_if_convert(c.body), c.ann)
    if isinstance(c, If):
        return If(c.cond, inverse_if_convert(c.then),
                  inverse_if_convert(c.orelse), c.ann)
    if isinstance(c, Assign) and isinstance(c.expr, Op) and c.expr.kind == "mux":
        cond, a, b = c.expr.args
        return If(cond, Assign(c.var, a), Assign(c.var, b))
    return c


def branch_coalesce(c: Cmd) -> Cmd:
    """Collapse conditionals whose transformed arms are structurally equal.

    Arms are rewritten bottom-up first, so nested coalescing can make outer
    arms equal.  Equality is equality of normal forms and ignores analysis
    annotations.
    """
    if isinstance(c, Seq):
        return seq(branch_coalesce(c.head), branch_coalesce(c.tail))
    if isinstance(c, While):
        return While(c.cond, branch_coalesce(c.body), c.ann)
    if isinstance(c, If):
        then = branch_coalesce(c.then)
        orelse = branch_coalesce(c.orelse)
        if then == orelse:
            return then
        return If(c.cond, then, orelse, c.ann)
    return c


def cfg_empty_branch_coalesce(g: CfgProgram) -> CfgProgram:
    """Replace branch nodes with equal successors by nop instruction nodes."""
    nodes = []
    for n in g.nodes:
        if isinstance(n, BranchNode) and n.succ_true == n.succ_false:
            nodes.append(InstrNode(n.label, None, n.succ_true))
        else:
            nodes.append(n)
    return CfgProgram(tuple(nodes), g.entry, g.exit)
