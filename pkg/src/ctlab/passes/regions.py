"""Structural analysis: recover structured programs from reducible graphs.

The analysis annotates every branch node with one of two region shapes and
then folds the graph into a structured command:

* a loop region: the branch is the loop test, its body is a set of labels
  that is strongly connected, entered only through the test, and left only
  through the test's false edge;
* a conditional region: the two arms are disjoint label sets entered only
  through their respective branch edges, and both run into one join label.

Any branch that fits neither shape, any cycle without a loop test, and any
pair of regions that overlap without nesting is rejected as irreducible.

The fold walks labels to commands: instruction nodes prepend their action,
loop tests become while commands over the folded body, conditional tests
become two-armed conditionals followed by the fold of the join.  A partial
fold starting at an arbitrary label (used by the simulation relation) peels
enclosing loop regions from the inside out, which mirrors how the
structured semantics unrolls loops.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..structured import Cmd, If, NIL, While, seq
from ..cfg import (
    BranchNode,
    CfgProgram,
    InstrNode,
    node_map,
    reachable_from,
    postdominators,
    immediate_postdominator,
    strongly_connected_components,
    successors,
    validate_cfg,
)
from .substitute import PassError


@dataclass(frozen=True)
class LoopRegion:
    head: str                  # the branch node that tests the loop condition
    body: "frozenset[str]"     # all labels of the loop, head included


@dataclass(frozen=True)
class CondRegion:
    head: str
    true_region: "frozenset[str]"
    false_region: "frozenset[str]"
    join: str


Region = LoopRegion | CondRegion


class IrreducibleError(PassError):
    """No region annotation fits; the graph is not structurable."""


def _in_cycle(g: CfgProgram, label: str) -> bool:
    nodes = node_map(g)
    for s in successors(nodes[label]):
        if label in reachable_from(g, s):
            return True
    return False


def _check_loop_region(g, sg, label, body):
    nodes = node_map(g)
    n = nodes[label]
    exits = {(u, v) for (u, v) in sg.edges if u in body and v not in body}
    if exits != {(label, n.succ_false)}:
        raise IrreducibleError(
            f"irreducible control flow at {label}: loop region has exits "
            f"{sorted(exits)} instead of the single false edge"
        )
    entries = {(u, v) for (u, v) in sg.edges if u not in body and v in body}
    for (_, v) in entries:
        if v != label:
            raise IrreducibleError(
                f"irreducible control flow at {label}: loop region entered at {v}"
            )
    outside = frozenset(sg.labels) - body
    for member in body:
        if member != label and label not in reachable_from(g, member, avoid=outside):
            raise IrreducibleError(
                f"irreducible control flow at {label}: {member} cannot reach the loop test"
            )


def _loop_region(g, sg, label):
    """The loop region for a branch inside a cycle, or an error."""
    nodes = node_map(g)
    n = nodes[label]
    body = frozenset((label,)) | reachable_from(
        g, n.succ_true, avoid=frozenset((label,))
    )
    if n.succ_false in body:
        raise IrreducibleError(
            f"irreducible control flow at {label}: false edge stays inside the loop"
        )
    _check_loop_region(g, sg, label, body)
    return LoopRegion(label, body)


def _cond_region(g, sg, label, pdom):
    nodes = node_map(g)
    n = nodes[label]
    join = immediate_postdominator(pdom, label)
    if join is None:
        raise IrreducibleError(
            f"irreducible control flow at {label}: branch has no join"
        )
    arms = []
    for arm_entry in (n.succ_true, n.succ_false):
        if arm_entry == join:
            arms.append(frozenset())
            continue
        region = reachable_from(g, arm_entry, avoid=frozenset((join,)))
        if label in region:
            raise IrreducibleError(
                f"irreducible control flow at {label}: arm reaches its own test"
            )
        entries = {(u, v) for (u, v) in sg.edges if u not in region and v in region}
        if entries != {(label, arm_entry)}:
            raise IrreducibleError(
                f"irreducible control flow at {label}: arm {arm_entry} entered at "
                f"{sorted(v for _, v in entries if v != arm_entry)}"
            )
        exits = {(u, v) for (u, v) in sg.edges if u in region and v not in region}
        if any(v != join for (_, v) in exits):
            raise IrreducibleError(
                f"irreducible control flow at {label}: arm {arm_entry} exits to "
                f"{sorted(v for _, v in exits if v != join)}"
            )
        arms.append(region)
    true_region, false_region = arms
    if true_region & false_region:
        raise IrreducibleError(
            f"irreducible control flow at {label}: arms overlap on "
            f"{sorted(true_region & false_region)}"
        )
    return CondRegion(label, true_region, false_region, join)


def _check_well_nested(regions):
    sets = []
    for r in regions.values():
        if isinstance(r, LoopRegion):
            sets.append((r.head, r.body))
        else:
            sets.append((r.head, r.true_region))
            sets.append((r.head, r.false_region))
    for i, (la, a) in enumerate(sets):
        for (lb, b) in sets[i + 1:]:
            if a & b and not (a <= b or b <= a):
                raise IrreducibleError(
                    f"irreducible control flow: regions at {la} and {lb} overlap "
                    "without nesting"
                )


def annotate_regions(g: CfgProgram) -> "dict[str, Region]":
    """Compute the region annotation for every branch node.

    Returns a dict keyed by branch label, in sorted label order.  Raises
    IrreducibleError when some branch fits neither region shape or regions
    fail to nest.
    """
    sg = validate_cfg(g)
    pdom = postdominators(g)
    regions: dict = {}
    for n in sorted(g.nodes, key=lambda n: n.label):
        if not isinstance(n, BranchNode):
            continue
        # Prefer the loop shape: a genuine loop test never passes the
        # conditional checks (its true arm runs back into the test), and a
        # conditional inside a loop flunks the loop checks on its entries.
        try:
            regions[n.label] = _loop_region(g, sg, n.label)
        except IrreducibleError as loop_err:
            try:
                regions[n.label] = _cond_region(g, sg, n.label, pdom)
            except IrreducibleError as cond_err:
                raise loop_err if _in_cycle(g, n.label) else cond_err
    _check_well_nested(regions)
    _check_cycles_covered(g, regions)
    return regions


def _check_cycles_covered(g, regions):
    loop_heads = {l for l, r in regions.items() if isinstance(r, LoopRegion)}
    edges = validate_cfg(g).edges
    for comp in strongly_connected_components(g):
        nontrivial = len(comp) > 1 or any((l, l) in edges for l in comp)
        if nontrivial and not (comp & loop_heads):
            raise IrreducibleError(
                f"irreducible control flow: cycle {sorted(comp)} has no loop test"
            )


# ---------------------------------------------------------------------------
# Folding

def _atom_cmd(n: InstrNode) -> Cmd:
    if n.op is None:
        raise PassError(
            f"nop node {n.label} has no structured counterpart; "
            "structuring supports graphs without nops"
        )
    return n.op


def fold_from(g: CfgProgram, regions, region: "frozenset[str]", exit_label: str,
              start: str) -> Cmd:
    """Fold the walk from ``start`` to ``exit_label`` inside ``region``."""
    nodes = node_map(g)
    out = []
    cur = start
    visited = set()
    while cur != exit_label:
        if cur in visited:
            raise IrreducibleError(
                f"irreducible control flow: walk from {start} revisits {cur}"
            )
        visited.add(cur)
        if cur not in region:
            raise IrreducibleError(
                f"irreducible control flow: walk from {start} escapes to {cur}"
            )
        n = nodes.get(cur)
        if n is None:
            raise IrreducibleError(
                f"irreducible control flow: walk from {start} falls off at {cur}"
            )
        if isinstance(n, InstrNode):
            out.append(_atom_cmd(n))
            cur = n.succ
            continue
        r = regions.get(cur)
        if r is None:
            raise IrreducibleError(
                f"irreducible control flow: branch {cur} has no region annotation"
            )
        if isinstance(r, LoopRegion):
            body = fold_from(g, regions, r.body, cur, n.succ_true)
            out.append(While(n.cond, body))
            cur = n.succ_false
        else:
            then = fold_from(g, regions, r.true_region | {r.join}, r.join,
                             n.succ_true)
            orelse = fold_from(g, regions, r.false_region | {r.join}, r.join,
                               n.succ_false)
            out.append(If(n.cond, then, orelse))
            cur = r.join
    cmd = NIL
    for c in reversed(out):
        cmd = seq(c, cmd)
    return cmd


def structure_cfg(g: CfgProgram, regions=None) -> Cmd:
    """Fold a whole annotated graph into a structured program."""
    if regions is None:
        regions = annotate_regions(g)
    sg = validate_cfg(g)
    return fold_from(g, regions, sg.labels, g.exit, g.entry)


def label_translation(g: CfgProgram, regions=None):
    """A map from every label to the structured program left to run there.

    At a label inside loop bodies, the translation is the fold of the rest
    of the current iteration, then the loop itself, then whatever follows:
    exactly the shape the structured semantics produces by unrolling.
    """
    if regions is None:
        regions = annotate_regions(g)
    sg = validate_cfg(g)
    loops = sorted(
        (r for r in regions.values() if isinstance(r, LoopRegion)),
        key=lambda r: len(r.body),
    )
    memo: dict = {}

    def star(label: str) -> Cmd:
        if label in memo:
            return memo[label]
        if label == g.exit:
            memo[label] = NIL
            return NIL
        enclosing = next(
            (r for r in loops if label in r.body and r.head != label), None
        )
        if enclosing is not None:
            out = seq(
                fold_from(g, regions, enclosing.body, enclosing.head, label),
                seq(While(node_map(g)[enclosing.head].cond,
                          fold_from(g, regions, enclosing.body, enclosing.head,
                                    node_map(g)[enclosing.head].succ_true)),
                    star(node_map(g)[enclosing.head].succ_false)),
            )
        else:
            out = fold_from(g, regions, sg.labels, g.exit, label)
        memo[label] = out
        return out

    return star
