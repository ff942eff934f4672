"""Random program generation for the differential test suites.

The generator is seeded and fully deterministic: one ``random.Random``
drives every choice, so a (seed, size bound, feature mask) triple always
produces the same stream of (program, input spec) pairs.

Loops are only ever emitted in the canonical bounded shape

    i := 0; while (i < k) { ...body...; i := i + 1; }

with k <= 4 and a reserved counter the body never writes, so every
generated program terminates well within the default fuel.  Input specs
keep their domains at 64 concrete inputs or fewer, which lets the checkers
enumerate them exactly.

Feature names gate which constructs appear; the per-pass suites add the
material their pass rewrites (constant subexpressions, shadowed writes,
spill slots, and so on) and drop programs the pass leaves unchanged.
"""

from __future__ import annotations

import random

from .lang import Const, Op, Var, expr_vars
from .structured import (
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
    seq_all,
)
from .cfg import BranchNode, CfgProgram, InstrNode, validate_cfg
from .inputs import (
    InputSpec,
    MemoryInit,
    MemoryInput,
    PUBLIC,
    RegisterInput,
    SECRET,
)
from .passes import PassError, apply_pass

# Everything the generator knows how to emit.  The four plain features
# control ordinary statements; the rest inject material for one pass each.
FEATURES = frozenset({
    "if", "while", "load", "store",
    "const-expr", "untile-pair", "dead-branch", "dead-assign",
    "dead-load", "self-store", "convertible-if", "identical-arms",
    "mux-assign", "empty-if", "spill-form",
})

DEFAULT_FEATURES = frozenset({"if", "while", "load", "store"})

_VARS = ("a", "b", "c", "d", "t")
_COUNTERS = ("i", "j")
_SP = "sp"
_SPILL_OFFSETS = (0, 8, 16)
_MEM_BASE = 100


def cmd_size(c: Cmd) -> int:
    """Statement nodes in a command; sequencing and nil are free."""
    if isinstance(c, Nil):
        return 0
    if isinstance(c, Seq):
        return cmd_size(c.head) + cmd_size(c.tail)
    if isinstance(c, If):
        return 1 + cmd_size(c.then) + cmd_size(c.orelse)
    if isinstance(c, While):
        return 1 + cmd_size(c.body)
    return 1


class _Gen:
    def __init__(self, rng: random.Random, size_bound: int, features):
        bad = set(features) - FEATURES
        if bad:
            raise ValueError(f"unknown generator features: {sorted(bad)}")
        self.rng = rng
        self.features = frozenset(features)
        self.budget = rng.randint(3, max(3, min(12, size_bound)))
        self.spill = "spill-form" in features

    def has(self, name: str) -> bool:
        return name in self.features

    # -- expressions --------------------------------------------------

    def int_expr(self, depth: int = 0):
        r = self.rng
        if depth >= 2 or r.random() < 0.45:
            if r.random() < 0.5:
                return Const(r.randint(0, 4))
            return Var(r.choice(_VARS))
        kind = r.choice(("+", "+", "-", "*"))
        return Op(kind, (self.int_expr(depth + 1), self.int_expr(depth + 1)))

    def bool_expr(self, depth: int = 0):
        r = self.rng
        if depth < 1 and r.random() < 0.2:
            kind = r.choice(("&&", "||"))
            return Op(kind, (self.bool_expr(depth + 1),
                             self.bool_expr(depth + 1)))
        kind = r.choice(("==", "!=", "<", "<="))
        return Op(kind, (self.int_expr(1), self.int_expr(1)))

    def addr_expr(self):
        r = self.rng
        if self.spill:
            return Op("+", (Var(_SP), Const(r.choice(_SPILL_OFFSETS))))
        base = Const(_MEM_BASE + r.randint(0, 3))
        if r.random() < 0.5:
            return base
        return Op("+", (base, Var(r.choice(_VARS))))

    # -- statements ---------------------------------------------------

    def atom(self):
        r = self.rng
        choices = ["assign"]
        if self.has("load") or self.spill:
            choices.append("load")
        if self.has("store") or self.spill:
            choices.append("store")
        pick = r.choice(choices)
        if pick == "load":
            return Load(r.choice(_VARS), self.addr_expr())
        if pick == "store":
            return Store(self.addr_expr(), r.choice(_VARS))
        return Assign(r.choice(_VARS), self.int_expr())

    def site(self):
        """One statement of pass-specific material, if any feature asks."""
        r = self.rng
        kinds = [f for f in (
            "const-expr", "untile-pair", "dead-branch", "dead-assign",
            "dead-load", "self-store", "convertible-if", "identical-arms",
            "mux-assign", "empty-if") if self.has(f)]
        if not kinds:
            return None
        kind = r.choice(kinds)
        v = r.choice(_VARS)
        if kind == "const-expr":
            folded = Op(r.choice(("+", "*")),
                        (Const(r.randint(1, 4)), Const(r.randint(1, 4))))
            e = folded if r.random() < 0.4 else Op("+", (Var(v), folded))
            return Assign(r.choice(_VARS), e)
        if kind == "untile-pair":
            w = r.choice([x for x in _VARS if x != v])
            feed = Assign(v, Op("+", (Var(w), Const(r.randint(0, 4)))))
            use = Assign(w, Op("*", (Var(v), Const(r.randint(1, 3)))))
            return seq(feed, use)
        if kind == "dead-branch":
            return If(Const(r.random() < 0.5), self.block(1), self.block(1))
        if kind == "dead-assign":
            return seq(Assign(v, self.int_expr()), Assign(v, self.int_expr()))
        if kind == "dead-load":
            return seq(Load(v, self.addr_expr()), Assign(v, self.int_expr()))
        if kind == "self-store":
            addr = self.addr_expr()
            w = r.choice([x for x in _VARS if x not in expr_vars(addr)])
            return seq(Load(w, addr), Store(addr, w))
        if kind == "convertible-if":
            return If(self.bool_expr(),
                      Assign(v, self.int_expr(1)), Assign(v, self.int_expr(1)))
        if kind == "identical-arms":
            arm = self.block(1)
            if isinstance(arm, Nil):
                arm = Assign(v, self.int_expr(1))
            return If(self.bool_expr(), arm, arm)
        if kind == "mux-assign":
            return Assign(v, Op("mux", (self.bool_expr(),
                                        self.int_expr(1), self.int_expr(1))))
        return If(self.bool_expr(), NIL, NIL)  # empty-if

    def loop(self, depth: int) -> Cmd:
        r = self.rng
        counter = _COUNTERS[depth] if depth < len(_COUNTERS) else None
        if counter is None:
            return self.atom()
        k = r.randint(1, 4)
        body = self.block(depth + 1, in_loop=counter)
        step = Assign(counter, Op("+", (Var(counter), Const(1))))
        return seq_all([
            Assign(counter, Const(0)),
            While(Op("<", (Var(counter), Const(k))), seq(body, step)),
        ])

    def block(self, depth: int, in_loop=None) -> Cmd:
        r = self.rng
        stmts = []
        want = r.randint(1, 3) if depth else r.randint(2, 4)
        while len(stmts) < want and self.budget > 0:
            roll = r.random()
            if roll < 0.3:
                made = self.site()
                if made is not None:
                    self.budget -= cmd_size(made)
                    stmts.append(made)
                    continue
            if roll < 0.45 and self.has("if") and depth < 2 and self.budget >= 3:
                self.budget -= 1
                stmts.append(If(self.bool_expr(),
                                self.block(depth + 1, in_loop),
                                self.block(depth + 1, in_loop)))
                continue
            if roll < 0.6 and self.has("while") and depth < 2 and self.budget >= 4:
                self.budget -= 3
                stmts.append(self.loop(depth))
                continue
            made = self.atom()
            self.budget -= 1
            stmts.append(made)
        return seq_all(stmts)


def _spec_candidates(c: Cmd) -> "frozenset[str]":
    """Register names the program reads somewhere (input value can matter)."""
    if isinstance(c, Nil):
        return frozenset()
    if isinstance(c, Seq):
        return _spec_candidates(c.head) | _spec_candidates(c.tail)
    if isinstance(c, Assign):
        return expr_vars(c.expr)
    if isinstance(c, Load):
        return expr_vars(c.addr)
    if isinstance(c, Store):
        return expr_vars(c.addr) | frozenset((c.var,))
    if isinstance(c, If):
        return (expr_vars(c.cond) | _spec_candidates(c.then)
                | _spec_candidates(c.orelse))
    return expr_vars(c.cond) | _spec_candidates(c.body)


def _gen_spec(rng: random.Random, prog: Cmd, max_domain: int = 64) -> InputSpec:
    names = sorted(_spec_candidates(prog) - set(_COUNTERS) - {_SP})
    rng.shuffle(names)
    registers = []
    domain = 1
    for name in names[:3]:
        hi = rng.choice((1, 1, 3))
        if domain * (hi + 1) > max_domain:
            continue
        domain *= hi + 1
        vis = SECRET if rng.random() < 0.5 else PUBLIC
        registers.append(RegisterInput(name, vis, 0, hi))
    if registers and all(r.visibility == PUBLIC for r in registers) \
            and rng.random() < 0.8:
        k = rng.randrange(len(registers))
        r = registers[k]
        registers[k] = RegisterInput(r.name, SECRET, r.lo, r.hi)
    memory = []
    inits = []
    if rng.random() < 0.4 and domain * 2 <= max_domain:
        vis = SECRET if rng.random() < 0.5 else PUBLIC
        memory.append(MemoryInput(_MEM_BASE + rng.randint(0, 3), vis, 0, 1))
        domain *= 2
    if rng.random() < 0.3:
        addr = _MEM_BASE + rng.randint(4, 7)
        inits.append(MemoryInit(addr, rng.randint(0, 9)))
    return InputSpec(tuple(registers), tuple(memory), tuple(inits))


def random_partitions(spec: InputSpec, seed: int, count: int):
    """Variants of a spec with re-randomized public/secret assignments."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        regs = tuple(
            RegisterInput(r.name, rng.choice((PUBLIC, SECRET)), r.lo, r.hi)
            for r in spec.registers)
        mems = tuple(
            MemoryInput(m.addr, rng.choice((PUBLIC, SECRET)), m.lo, m.hi)
            for m in spec.memory)
        out.append(InputSpec(regs, mems, spec.inits,
                             spec.max_range, spec.max_domain))
    return out


def generate_programs(seed: int, size_bound: int = 40,
                      features=DEFAULT_FEATURES, count=None):
    """Deterministic stream of (program, input spec) pairs.

    Yields forever unless ``count`` is given.  Programs stay within
    ``size_bound`` statement nodes and every spec enumerates to at most
    64 concrete inputs.
    """
    rng = random.Random(seed)
    produced = 0
    while count is None or produced < count:
        g = _Gen(rng, size_bound, features)
        prog = g.block(0)
        if isinstance(prog, Nil) or cmd_size(prog) > size_bound:
            continue
        yield prog, _gen_spec(rng, prog)
        produced += 1


# ---------------------------------------------------------------------------
# Lowering structured programs to graphs

def lower_to_cfg(c: Cmd, exit_label: str = "end") -> CfgProgram:
    """Translate a structured program into an equivalent graph program.

    Steps correspond one to one: each atom becomes an instruction node and
    each conditional or loop test becomes a branch node, so the lowered
    graph emits the same observation trace as the source.
    """
    nodes = []
    counter = [0]

    def fresh():
        label = f"n{counter[0]}"
        counter[0] += 1
        return label

    def go(cmd: Cmd, succ: str) -> str:
        if isinstance(cmd, Nil):
            return succ
        if isinstance(cmd, Seq):
            return go(cmd.head, go(cmd.tail, succ))
        if isinstance(cmd, Assign):
            label = fresh()
            nodes.append(InstrNode(label, Assign(cmd.var, cmd.expr), succ))
            return label
        if isinstance(cmd, Load):
            label = fresh()
            nodes.append(InstrNode(label, Load(cmd.var, cmd.addr), succ))
            return label
        if isinstance(cmd, Store):
            label = fresh()
            nodes.append(InstrNode(label, Store(cmd.addr, cmd.var), succ))
            return label
        if isinstance(cmd, If):
            label = fresh()
            on_true = go(cmd.then, succ)
            on_false = go(cmd.orelse, succ)
            nodes.append(BranchNode(label, cmd.cond, on_true, on_false))
            return label
        if isinstance(cmd, While):
            label = fresh()
            body = go(cmd.body, label)
            nodes.append(BranchNode(label, cmd.cond, body, succ))
            return label
        raise PassError(f"cannot lower {cmd!r}")

    entry = go(c, exit_label)
    g = CfgProgram(tuple(reversed(nodes)), entry, exit_label)
    validate_cfg(g)
    return g


# ---------------------------------------------------------------------------
# Per-pass suites

_BASE = frozenset({"if", "load", "store"})

SUITE_FEATURES = {
    "const-fold": _BASE | {"while", "const-expr"},
    "untile": _BASE | {"while", "untile-pair"},
    "dbe": _BASE | {"while", "dead-branch"},
    "dae": _BASE | {"while", "dead-assign"},
    "unspill": frozenset({"if", "while", "spill-form"}),
    "structure": frozenset({"if", "while", "load", "store"}),
    "loop-rotate": frozenset({"if", "while", "load", "store"}),
    "empty-branch-coalesce": frozenset({"if", "empty-if", "load", "store"}),
    "if-convert": _BASE | {"convertible-if"},
    "inv-if-convert": _BASE | {"mux-assign"},
    "branch-coalesce": _BASE | {"identical-arms"},
    "dead-load-elim": _BASE | {"while", "dead-load"},
    "dead-store-elim": _BASE | {"while", "self-store"},
}

_CFG_SUITES = ("structure", "loop-rotate", "empty-branch-coalesce")


def _contains_while(c: Cmd) -> bool:
    if isinstance(c, Seq):
        return _contains_while(c.head) or _contains_while(c.tail)
    if isinstance(c, If):
        return _contains_while(c.then) or _contains_while(c.orelse)
    return isinstance(c, While)


def generate_suite(pass_name: str, count: int, seed: int):
    """Programs on which the named pass actually rewrites something.

    Returns a list of (program, spec, language) triples in the pass's
    source language; graph passes receive lowered programs.
    """
    features = SUITE_FEATURES.get(pass_name)
    if features is None:
        raise PassError(f"no generation suite for pass {pass_name!r}")
    language = "cfg" if pass_name in _CFG_SUITES else "structured"
    out = []
    stream = generate_programs(seed, features=features)
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 80 * count:
            raise PassError(
                f"suite for {pass_name} kept too few programs "
                f"({len(out)} of {count})")
        prog, spec = next(stream)
        if pass_name == "loop-rotate" and not _contains_while(prog):
            continue
        program = lower_to_cfg(prog) if language == "cfg" else prog
        try:
            transformed, _ = apply_pass(pass_name, program, language)
        except PassError:
            continue
        if pass_name != "structure" and transformed == program:
            continue
        out.append((program, spec, language))
    return out
