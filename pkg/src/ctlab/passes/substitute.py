"""Expression substitution and the two annotation strategies built on it.

A substitution annotation on a command node is a tuple of pairs
``(e_from, e_to)``; applying the node rewrites every occurrence of
``e_from`` inside the node's own expression to ``e_to``.  The soundness
obligation is semantic: whenever execution reaches the annotated node,
``e_from`` and ``e_to`` must evaluate to the same value.  Constant folding
discharges it statically (the replaced expression has no variables);
untiling relies on the annotated node running straight after the feeding
assignment.
"""

from __future__ import annotations

from ..lang import Const, Expr, LangError, Op, Var, eval_expr, expr_vars, format_expr
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
    seq,
    split_head,
)


class PassError(LangError):
    """A pass precondition failed; the program is returned unchanged never."""


SubstPairs = "tuple[tuple[Expr, Expr], ...]"


def subst_expr(e: Expr, old: Expr, new: Expr) -> Expr:
    """Replace every occurrence of ``old`` in ``e`` by ``new`` (outermost first)."""
    if e == old:
        return new
    if isinstance(e, Op):
        return Op(e.kind, tuple(subst_expr(a, old, new) for a in e.args))
    return e


def apply_pairs(e: Expr, pairs) -> Expr:
    for old, new in pairs:
        e = subst_expr(e, old, new)
    return e


def _node_expr(c: Cmd):
    """The single expression a node evaluates, or None."""
    if isinstance(c, Assign):
        return c.expr
    if isinstance(c, (Load, Store)):
        return c.addr
    if isinstance(c, (If, While)):
        return c.cond
    return None


def _with_expr(c: Cmd, e: Expr, ann) -> Cmd:
    if isinstance(c, Assign):
        return Assign(c.var, e, ann)
    if isinstance(c, Load):
        return Load(c.var, e, ann)
    if isinstance(c, Store):
        return Store(e, c.var, ann)
    if isinstance(c, If):
        return If(e, c.then, c.orelse, ann)
    if isinstance(c, While):
        return While(e, c.body, ann)
    raise PassError(f"node has no expression: {c!r}")


def expr_substitute(c: Cmd) -> Cmd:
    """Apply and consume all substitution annotations; structure is unchanged."""
    if isinstance(c, Nil):
        return NIL
    if isinstance(c, Seq):
        return seq(expr_substitute(c.head), expr_substitute(c.tail))
    pairs = c.ann if isinstance(c.ann, tuple) else ()
    e = _node_expr(c)
    new_e = apply_pairs(e, pairs) if e is not None else None
    if isinstance(c, If):
        return If(new_e, expr_substitute(c.then), expr_substitute(c.orelse))
    if isinstance(c, While):
        return While(new_e, expr_substitute(c.body))
    return _with_expr(c, new_e, None)


# ---------------------------------------------------------------------------
# Constant folding

def _maximal_constant_subexprs(e: Expr):
    """Topmost variable-free subexpressions that are not already constants."""
    if not expr_vars(e):
        return [] if isinstance(e, Const) else [e]
    if isinstance(e, Op):
        out = []
        for a in e.args:
            for s in _maximal_constant_subexprs(a):
                if s not in out:
                    out.append(s)
        return out
    return []


def _const_fold_pairs(e: Expr):
    pairs = []
    for s in _maximal_constant_subexprs(e):
        try:
            v = eval_expr(s, {})
        except LangError:
            continue  # ill-kinded constant expression; leave it to run time
        pairs.append((s, Const(v)))
    return tuple(pairs)


# ---------------------------------------------------------------------------
# Untiling

def _untile_target(head: Cmd, x: str) -> bool:
    """May the defining assignment be folded into this next node?

    Loop conditions re-evaluate on every iteration, so they are excluded;
    every other node kind evaluates its expression exactly once, directly
    after the feeding assignment.
    """
    if isinstance(head, While):
        return False
    e = _node_expr(head)
    return e is not None and x in expr_vars(e)


def annotate_substitutions(c: Cmd, strategy: str) -> Cmd:
    """Attach substitution annotations using one of the two strategies.

    ``const-fold`` annotates every maximal variable-free subexpression with
    its value.  ``untile`` annotates adjacent definition-use pairs
    ``x := e0 ; <node using x>`` with (x, e0), provided e0 does not read x.
    """
    if strategy == "const-fold":
        return _annotate_const_fold(c)
    if strategy == "untile":
        return _annotate_untile(c)
    raise PassError(f"unknown annotation strategy {strategy!r}")


def _annotate_const_fold(c: Cmd) -> Cmd:
    if isinstance(c, Nil):
        return NIL
    if isinstance(c, Seq):
        return seq(_annotate_const_fold(c.head), _annotate_const_fold(c.tail))
    e = _node_expr(c)
    pairs = _const_fold_pairs(e) if e is not None else ()
    ann = pairs if pairs else None
    if isinstance(c, If):
        return If(c.cond, _annotate_const_fold(c.then),
                  _annotate_const_fold(c.orelse), ann)
    if isinstance(c, While):
        return While(c.cond, _annotate_const_fold(c.body), ann)
    return _with_expr(c, e, ann)


def _annotate_untile(c: Cmd) -> Cmd:
    if isinstance(c, Nil):
        return NIL
    head, rest = split_head(c)
    if isinstance(head, If):
        head = If(head.cond, _annotate_untile(head.then),
                  _annotate_untile(head.orelse), head.ann)
    elif isinstance(head, While):
        head = While(head.cond, _annotate_untile(head.body), head.ann)
    if isinstance(rest, Nil):
        return head
    next_head, _ = split_head(rest)
    if (
        isinstance(head, Assign)
        and head.var not in expr_vars(head.expr)
        and _untile_target(next_head, head.var)
    ):
        pairs = (next_head.ann or ()) + ((Var(head.var), head.expr),)
        annotated = _with_expr(next_head, _node_expr(next_head), pairs)
        _, after = split_head(rest)
        return seq(head, _annotate_untile(seq(annotated, after)))
    return seq(head, _annotate_untile(rest))
