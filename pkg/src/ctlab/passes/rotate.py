"""Loop rotation for graph programs.

Rotation peels the loop header: the unique edge entering the loop is
redirected to a fresh copy of the header node, and the copy keeps the
header's successors.  The original header remains the target of the back
edge, so after the first iteration control flows exactly as before.  Both
versions of the header emit the same observation, which is what makes the
pass leakage-neutral.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..cfg import (
    BranchNode,
    CfgProgram,
    InstrNode,
    node_map,
    strongly_connected_components,
    validate_cfg,
)
from .substitute import PassError


@dataclass(frozen=True)
class LoopSpec:
    before: str                # instruction node whose succ enters the loop
    entry: str                 # the header: only node entered from outside
    body: "frozenset[str]"     # the loop's strongly connected component


def detect_loops(g: CfgProgram) -> "list[LoopSpec]":
    """Rotatable loops: maximal cycles entered by one instruction edge.

    Every nontrivial strongly connected component must be entered through
    exactly one edge whose source is an instruction node; anything else is
    reported, since rotation has no unique place to put the header copy.
    """
    sg = validate_cfg(g)
    nodes = node_map(g)
    loops = []
    for comp in strongly_connected_components(g):
        if len(comp) == 1 and not any((l, l) in sg.edges for l in comp):
            continue
        if g.entry in comp:
            raise PassError(
                f"loop {sorted(comp)} starts at the program entry; "
                "rotation needs an edge to redirect"
            )
        entries = sorted(
            (u, v) for (u, v) in sg.edges if u not in comp and v in comp
        )
        if len(entries) != 1:
            raise PassError(
                f"loop {sorted(comp)} has entry edges {entries}; rotation "
                "needs exactly one"
            )
        before, entry = entries[0]
        if not isinstance(nodes[before], InstrNode):
            raise PassError(
                f"loop at {entry} is entered from branch {before}; rotation "
                "would duplicate the header on one arm only"
            )
        loops.append(LoopSpec(before, entry, comp))
    return loops


def _fresh_label(taken, base: str) -> str:
    cand = base + "__copy"
    k = 2
    while cand in taken:
        cand = f"{base}__copy{k}"
        k += 1
    return cand


def rotate_loop(g: CfgProgram, loop: LoopSpec) -> "tuple[CfgProgram, str]":
    """Rotate one loop; returns the new graph and the header copy's label."""
    nodes = node_map(g)
    header = nodes[loop.entry]
    copy_label = _fresh_label(set(nodes) | {g.exit}, loop.entry)
    copy = replace(header, label=copy_label)
    out = []
    for n in g.nodes:
        if n.label == loop.before:
            out.append(replace(n, succ=copy_label))
        else:
            out.append(n)
        if n.label == loop.before:
            out.append(copy)
    return CfgProgram(tuple(out), g.entry, g.exit), copy_label


def loop_rotate(g: CfgProgram) -> CfgProgram:
    """Rotate every detected loop.  Nested loops share one maximal cycle,
    so each cycle's header is peeled once."""
    loops = detect_loops(g)
    if not loops:
        raise PassError("no rotatable loop in the graph")
    for loop in loops:
        g, _ = rotate_loop(g, loop)
    validate_cfg(g)
    return g


def rotation_pairs(g: CfgProgram) -> "dict[str, str]":
    """Map each loop header to the label its copy will get."""
    taken = {n.label for n in g.nodes} | {g.exit}
    pairs = {}
    for loop in detect_loops(g):
        lbl = _fresh_label(taken, loop.entry)
        pairs[loop.entry] = lbl
        taken.add(lbl)
    return pairs
