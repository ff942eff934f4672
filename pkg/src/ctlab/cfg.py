"""Control-flow-graph programs and their leakage semantics.

A CFG program is a set of labelled nodes: instruction nodes carry one atomic
action (assignment, load, store, or nop) and one successor; branch nodes
carry a condition and two successors.  Execution starts at a distinguished
entry label and is final exactly at the distinguished exit label, which has
no node of its own.  The observation discipline matches the structured
language: loads and stores leak the evaluated address, branches leak the
taken direction, assignments and nops leak nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

from .lang import (
    LangError,
    eval_addr,
    eval_cond,
    OBS_NONE,
    Observation,
    eval_expr,
    expr_vars,
    format_expr,
    obs_addr,
    obs_branch,
)
from .structured import Assign, Load, RunResult, Store, run


@dataclass(frozen=True)
class InstrNode:
    label: str
    op: object  # Assign | Load | Store | None (nop)
    succ: str


@dataclass(frozen=True)
class BranchNode:
    label: str
    cond: object
    succ_true: str
    succ_false: str


Node = Union[InstrNode, BranchNode]


@dataclass(frozen=True)
class CfgProgram:
    nodes: "tuple[Node, ...]"
    entry: str
    exit: str


class CfgError(LangError):
    """A malformed graph: duplicate labels, dangling successors, and so on."""


class SuccessorGraph(NamedTuple):
    labels: "frozenset[str]"  # node labels plus the exit label
    edges: "frozenset[tuple[str, str]]"


def node_map(g: CfgProgram) -> "dict[str, Node]":
    return {n.label: n for n in g.nodes}


def successors(n: Node) -> "tuple[str, ...]":
    if isinstance(n, InstrNode):
        return (n.succ,)
    return (n.succ_true, n.succ_false)


def validate_cfg(g: CfgProgram) -> SuccessorGraph:
    """Check well-formedness and return the successor graph.

    The exit label must not name a node (it is a sink), every successor and
    the entry must resolve to a node or the exit, and labels are unique.
    """
    seen = set()
    for n in g.nodes:
        if n.label in seen:
            raise CfgError(f"duplicate label {n.label}")
        seen.add(n.label)
    if g.exit in seen:
        raise CfgError(f"exit label {g.exit} must not name a node")
    known = seen | {g.exit}
    if g.entry not in known:
        raise CfgError(f"entry label {g.entry} names no node")
    edges = set()
    for n in g.nodes:
        for s in successors(n):
            if s not in known:
                raise CfgError(f"successor {s} of {n.label} names no node")
            edges.add((n.label, s))
    return SuccessorGraph(frozenset(known), frozenset(edges))


def cfg_vars(g: CfgProgram) -> "frozenset[str]":
    out: frozenset = frozenset()
    for n in g.nodes:
        if isinstance(n, BranchNode):
            out |= expr_vars(n.cond)
        elif n.op is not None:
            a = n.op
            if isinstance(a, Assign):
                out |= frozenset((a.var,)) | expr_vars(a.expr)
            elif isinstance(a, (Load, Store)):
                out |= frozenset((a.var,)) | expr_vars(a.addr)
    return out


# ---------------------------------------------------------------------------
# Semantics

class CfgState(NamedTuple):
    label: str
    regs: dict
    mem: dict


class CfgStepError(LangError):
    pass


def is_final_cfg(g: CfgProgram, state: CfgState) -> bool:
    return state.label == g.exit


def step_cfg(g: CfgProgram, state: CfgState, nodes=None):
    """Execute the node at the current label; the exit label is final."""
    label, regs, mem = state
    if label == g.exit:
        raise CfgStepError("cannot step a final state")
    n = (nodes or node_map(g)).get(label)
    if n is None:
        raise CfgStepError(f"label {label} names no node")
    if isinstance(n, BranchNode):
        b = eval_cond(n.cond, regs)
        return obs_branch(b), CfgState(n.succ_true if b else n.succ_false, regs, mem)
    a = n.op
    if a is None:  # nop
        return OBS_NONE, CfgState(n.succ, regs, mem)
    if isinstance(a, Assign):
        v = eval_expr(a.expr, regs)
        return OBS_NONE, CfgState(n.succ, {**regs, a.var: v}, mem)
    if isinstance(a, Load):
        ad = eval_addr(a.addr, regs)
        return obs_addr(ad), CfgState(n.succ, {**regs, a.var: mem.get(ad, 0)}, mem)
    if isinstance(a, Store):
        ad = eval_addr(a.addr, regs)
        return obs_addr(ad), CfgState(n.succ, regs, {**mem, ad: regs.get(a.var, 0)})
    raise CfgStepError(f"bad instruction payload at {label}: {a!r}")


def initial_state_cfg(g: CfgProgram, inp) -> CfgState:
    return CfgState(g.entry, dict(inp.regs), dict(inp.mem))


def run_cfg(g: CfgProgram, inp, fuel: int = 10000) -> RunResult:
    validate_cfg(g)
    nodes = node_map(g)
    return run(
        initial_state_cfg(g, inp),
        lambda s: step_cfg(g, s, nodes),
        lambda s: is_final_cfg(g, s),
        fuel,
    )


# ---------------------------------------------------------------------------
# Graph helpers (deterministic, label-ordered)

def predecessor_map(g: CfgProgram) -> "dict[str, list[str]]":
    preds: dict = {n.label: [] for n in g.nodes}
    preds[g.exit] = []
    for n in g.nodes:
        for s in successors(n):
            preds[s].append(n.label)
    return preds


def reachable_from(g: CfgProgram, start: str, avoid=frozenset()) -> "frozenset[str]":
    """Labels reachable from ``start`` (inclusive) without entering ``avoid``."""
    nodes = node_map(g)
    if start in avoid:
        return frozenset()
    seen = {start}
    work = [start]
    while work:
        cur = work.pop()
        n = nodes.get(cur)
        if n is None:
            continue
        for s in successors(n):
            if s not in seen and s not in avoid:
                seen.add(s)
                work.append(s)
    return frozenset(seen)


def strongly_connected_components(g: CfgProgram) -> "list[frozenset[str]]":
    """Maximal SCCs of the successor graph, iterative Tarjan, sorted output."""
    nodes = node_map(g)
    order = sorted(nodes)
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    sccs = []
    counter = [0]

    for root in order:
        if root in index:
            continue
        work = [(root, iter(successors(nodes[root])) if root in nodes else iter(()))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in nodes:  # the exit sink has no successors
                    if w not in index:
                        index[w] = low[w] = counter[0]
                        counter[0] += 1
                        sccs.append(frozenset((w,)))
                    continue
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(nodes[w]))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                sccs.append(frozenset(comp))
    return sorted(sccs, key=lambda c: min(c))


def postdominators(g: CfgProgram) -> "dict[str, frozenset[str]]":
    """Postdominator sets over the successor graph, exit included."""
    sg = validate_cfg(g)
    labels = sorted(sg.labels)
    nodes = node_map(g)
    full = frozenset(labels)
    pdom = {l: (frozenset((l,)) if l == g.exit else full) for l in labels}
    changed = True
    while changed:
        changed = False
        for l in labels:
            if l == g.exit or l not in nodes:
                continue
            succs = successors(nodes[l])
            inter = pdom[succs[0]]
            for s in succs[1:]:
                inter = inter & pdom[s]
            new = inter | frozenset((l,))
            if new != pdom[l]:
                pdom[l] = new
                changed = True
    return pdom


def immediate_postdominator(pdom: "dict[str, frozenset[str]]", label: str):
    """The nearest strict postdominator, or None when unreachable from it."""
    strict = pdom[label] - frozenset((label,))
    for p in strict:
        if pdom[p] == strict:
            return p
    return None


# ---------------------------------------------------------------------------
# Printing

def format_node(n: Node) -> str:
    if isinstance(n, BranchNode):
        return (
            f"{n.label}: br {format_expr(n.cond)} ? {n.succ_true} : {n.succ_false}"
        )
    a = n.op
    if a is None:
        body = "nop"
    elif isinstance(a, Assign):
        body = f"{a.var} := {format_expr(a.expr)}"
    elif isinstance(a, Load):
        body = f"{a.var} := load[{format_expr(a.addr)}]"
    elif isinstance(a, Store):
        body = f"store[{format_expr(a.addr)}] := {a.var}"
    else:
        raise TypeError(f"bad instruction payload: {a!r}")
    return f"{n.label}: {body} -> {n.succ}"


def format_cfg(g: CfgProgram) -> str:
    lines = ["cfg", f"entry {g.entry}", f"exit {g.exit}"]
    lines.extend(format_node(n) for n in g.nodes)
    return "\n".join(lines) + "\n"
