"""Input domains and the public-input indistinguishability relation.

An InputSpec declares which registers and memory cells a program reads as
input, each with an inclusive integer range and a public/secret marking,
plus fixed memory initializations.  Enumerating a spec yields every concrete
input in a deterministic lexicographic order; two inputs are related when
all their public entries agree.  That relation is the policy the CT checker
quantifies over.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

DEFAULT_MAX_RANGE = 16
DEFAULT_MAX_DOMAIN = 4096

PUBLIC = "public"
SECRET = "secret"


class SpecError(Exception):
    """An InputSpec violates its bounds or well-formedness rules."""


@dataclass(frozen=True)
class RegisterInput:
    name: str
    visibility: str  # PUBLIC or SECRET
    lo: int
    hi: int


@dataclass(frozen=True)
class MemoryInput:
    addr: int
    visibility: str
    lo: int
    hi: int


@dataclass(frozen=True)
class MemoryInit:
    addr: int
    value: int


@dataclass(frozen=True)
class InputSpec:
    registers: "tuple[RegisterInput, ...]" = ()
    memory: "tuple[MemoryInput, ...]" = ()
    inits: "tuple[MemoryInit, ...]" = ()
    max_range: int = DEFAULT_MAX_RANGE
    max_domain: int = DEFAULT_MAX_DOMAIN

    def __post_init__(self):
        names = [r.name for r in self.registers]
        if len(names) != len(set(names)):
            raise SpecError("duplicate register name in input spec")
        addrs = [m.addr for m in self.memory] + [i.addr for i in self.inits]
        if len(addrs) != len(set(addrs)):
            raise SpecError("duplicate memory address in input spec")
        domain = 1
        for entry in (*self.registers, *self.memory):
            if entry.visibility not in (PUBLIC, SECRET):
                raise SpecError(f"bad visibility {entry.visibility!r}")
            size = entry.hi - entry.lo + 1
            if size < 1:
                raise SpecError(f"empty range {entry.lo}..{entry.hi}")
            if size > self.max_range:
                raise SpecError(
                    f"range {entry.lo}..{entry.hi} exceeds bound {self.max_range}"
                )
            domain *= size
        if domain > self.max_domain:
            raise SpecError(
                f"domain size {domain} exceeds bound {self.max_domain}"
            )

    @property
    def domain_size(self) -> int:
        n = 1
        for entry in (*self.registers, *self.memory):
            n *= entry.hi - entry.lo + 1
        return n


class ConcreteInput(NamedTuple):
    """One point of the input domain: register values and memory contents.

    Fixed initializations are baked into ``mem`` so an input alone suffices
    to build an initial state.
    """

    regs: "tuple[tuple[str, int], ...]"
    mem: "tuple[tuple[int, int], ...]"


def enumerate_inputs(spec: InputSpec) -> "list[ConcreteInput]":
    """All concrete inputs of a spec, in lexicographic order.

    The order runs over declared registers first and memory cells second,
    with the last declared entry varying fastest.
    """
    entries = [*spec.registers, *spec.memory]
    ranges = [range(e.lo, e.hi + 1) for e in entries]
    n_regs = len(spec.registers)
    fixed = tuple((i.addr, i.value) for i in spec.inits)
    out = []
    for values in itertools.product(*ranges):
        regs = tuple(
            (spec.registers[i].name, values[i]) for i in range(n_regs)
        )
        mem = tuple(
            (spec.memory[i - n_regs].addr, values[i])
            for i in range(n_regs, len(entries))
        )
        out.append(ConcreteInput(regs, mem + fixed))
    return out


def public_projection(spec: InputSpec, inp: ConcreteInput) -> tuple:
    """The tuple of public entry values, in declaration order."""
    reg_vals = dict(inp.regs)
    mem_vals = dict(inp.mem)
    proj = []
    for r in spec.registers:
        if r.visibility == PUBLIC:
            proj.append(reg_vals[r.name])
    for m in spec.memory:
        if m.visibility == PUBLIC:
            proj.append(mem_vals[m.addr])
    return tuple(proj)


def related(spec: InputSpec, a: ConcreteInput, b: ConcreteInput) -> bool:
    """Whether two inputs agree on every public entry."""
    return public_projection(spec, a) == public_projection(spec, b)


def format_spec(spec: InputSpec) -> str:
    lines = []
    for r in spec.registers:
        lines.append(f"input {r.name} {r.visibility} {r.lo}..{r.hi}")
    for m in spec.memory:
        lines.append(f"mem {m.addr} {m.visibility} {m.lo}..{m.hi}")
    for i in spec.inits:
        lines.append(f"mem {i.addr} init {i.value}")
    return "\n".join(lines) + ("\n" if lines else "")
