"""Constant-time checking by exhaustive input enumeration.

A program is constant-time for an input policy when every pair of inputs
that agree on the public part produces the same observation trace.  The
semantics here are deterministic, so it suffices to compare the maximal
trace of each run.  Runs are fuel bounded; the checker reports a definite
verdict whenever the bounded prefixes already decide it:

* two traces that disagree at some produced index differ for good;
* a terminated run whose complete trace is a strict prefix of another
  run's trace differs for good, even when the longer run was cut;
* only pairs with equal prefixes where at least one run was cut are
  undecided, and they make the overall verdict budget limited.

Witness selection is deterministic: inputs are enumerated in a fixed
order and the first conclusively differing pair (ordered by input index,
then by partner index) is reported.
"""

from __future__ import annotations

from dataclasses import dataclass

from .structured import (
    Cmd,
    initial_state,
    is_final,
    run,
    step,
)
from .cfg import (
    CfgProgram,
    initial_state_cfg,
    is_final_cfg,
    node_map,
    step_cfg,
    validate_cfg,
)
from .inputs import InputSpec, enumerate_inputs, public_projection

DEFAULT_FUEL = 10000

CT = "ct"
NOT_CT = "not-ct"
BUDGET_LIMITED = "budget-limited"


class Semantics:
    """A uniform driver facade over the two program languages.

    ``point`` names the control location of a state: the remaining code
    for structured programs, the label for graph programs.  Simulation
    checking keys its bookkeeping on these points.
    """

    def __init__(self, language, program, make_initial, stepper, finalizer,
                 pointer):
        self.language = language
        self.program = program
        self._initial = make_initial
        self.step = stepper
        self.is_final = finalizer
        self.point = pointer

    def initial(self, inp):
        return self._initial(inp)

    def run(self, inp, fuel=DEFAULT_FUEL):
        return run(self._initial(inp), self.step, self.is_final, fuel)


def struct_semantics(prog: Cmd) -> Semantics:
    return Semantics(
        "structured",
        prog,
        lambda inp: initial_state(prog, inp),
        step,
        is_final,
        lambda state: state.code,
    )


def cfg_semantics(g: CfgProgram) -> Semantics:
    validate_cfg(g)
    nodes = node_map(g)
    return Semantics(
        "cfg",
        g,
        lambda inp: initial_state_cfg(g, inp),
        lambda state: step_cfg(g, state, nodes),
        lambda state: is_final_cfg(g, state),
        lambda state: state.label,
    )


def semantics_for(program, language: str) -> Semantics:
    if language == "structured":
        return struct_semantics(program)
    if language == "cfg":
        return cfg_semantics(program)
    raise ValueError(f"unknown language {language!r}")


def coerce_semantics(program) -> Semantics:
    """Accept a Semantics, a graph program, or a structured command."""
    if isinstance(program, Semantics):
        return program
    if isinstance(program, CfgProgram):
        return cfg_semantics(program)
    return struct_semantics(program)


@dataclass(frozen=True)
class CtWitness:
    """A pair of related inputs whose observation traces differ.

    ``step`` is the first index where the traces disagree; an observation
    of None means that run had already terminated with the shorter trace.
    """

    index_a: int
    index_b: int
    input_a: object
    input_b: object
    step: int
    obs_a: object
    obs_b: object
    trace_a: tuple
    trace_b: tuple


@dataclass(frozen=True)
class CtVerdict:
    status: str
    witness: "CtWitness | None"
    inputs_total: int
    groups_total: int
    pairs_undecided: int
    fuel: int

    @property
    def conclusive(self) -> bool:
        return self.status != BUDGET_LIMITED


def _first_difference(ra, rb):
    """Classify a pair of runs: ('differs', k), ('equal', None), or
    ('undecided', None)."""
    ta, tb = ra.trace, rb.trace
    n = min(len(ta), len(tb))
    for k in range(n):
        if ta[k] != tb[k]:
            return "differs", k
    if len(ta) != len(tb):
        shorter = ra if len(ta) < len(tb) else rb
        if shorter.final:
            return "differs", n
        return "undecided", None
    if ra.final and rb.final:
        return "equal", None
    if ra.final != rb.final:
        return "differs", n
    return "undecided", None


def _obs_at(run_result, k, sem, inp, fuel):
    """The observation a run produces at index k, or None when the run has
    terminated before k.  A cut run is extended by one step on demand."""
    if k < len(run_result.trace):
        return run_result.trace[k]
    if run_result.final:
        return None
    extended = sem.run(inp, fuel + 1)
    return extended.trace[k] if k < len(extended.trace) else None


def check_ct(prog, spec: InputSpec, fuel: int = DEFAULT_FUEL) -> CtVerdict:
    """Decide constant-time for a program under an input policy.

    ``prog`` may be a structured command, a graph program, or a prepared
    Semantics driver.
    """
    sem = coerce_semantics(prog)
    inputs = enumerate_inputs(spec)
    runs = [sem.run(inp, fuel) for inp in inputs]

    groups: dict = {}
    for idx, inp in enumerate(inputs):
        groups.setdefault(public_projection(spec, inp), []).append(idx)

    best = None  # (index_a, index_b, step)
    undecided = 0
    for members in groups.values():
        if len(members) == 1:
            continue
        keys = {(runs[i].trace, runs[i].final) for i in members}
        if len(keys) == 1:
            trace, final = next(iter(keys))
            if not final:
                undecided += len(members) * (len(members) - 1) // 2
            continue
        found = False
        for pos, i in enumerate(members):
            for j in members[pos + 1:]:
                kind, k = _first_difference(runs[i], runs[j])
                if kind == "differs":
                    if best is None or (i, j) < best[:2]:
                        best = (i, j, k)
                    found = True
                    break
                if kind == "undecided":
                    undecided += 1
            if found:
                break

    if best is not None:
        i, j, k = best
        witness = CtWitness(
            i, j, inputs[i], inputs[j], k,
            _obs_at(runs[i], k, sem, inputs[i], fuel),
            _obs_at(runs[j], k, sem, inputs[j], fuel),
            runs[i].trace, runs[j].trace,
        )
        return CtVerdict(NOT_CT, witness, len(inputs), len(groups), undecided, fuel)
    if undecided:
        return CtVerdict(BUDGET_LIMITED, None, len(inputs), len(groups),
                         undecided, fuel)
    return CtVerdict(CT, None, len(inputs), len(groups), 0, fuel)


# ---------------------------------------------------------------------------
# Transparency

HOLDS = "holds"
FAILS = "fails"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class TransparencyReport:
    """How a transformation relates the two constant-time verdicts.

    Reflection: if the transformed program is constant-time, so is the
    original.  Preservation: the other way around.  Either direction can
    fail, hold, or stay unknown when a verdict was budget limited.
    The optional certificate fields are filled in by callers that also run
    a simulation check for the pass.
    """

    source: CtVerdict
    target: CtVerdict
    reflection: str
    preservation: str
    pass_name: str = ""
    simulation: object = None   # SimulationReport, when one was run
    injectivity: object = None  # InjectivityReport, when one was run

    @property
    def transparent(self) -> str:
        if self.reflection == FAILS or self.preservation == FAILS:
            return FAILS
        if self.reflection == HOLDS and self.preservation == HOLDS:
            return HOLDS
        return UNKNOWN


def _direction(premise: CtVerdict, conclusion: CtVerdict) -> str:
    """Status of 'premise CT implies conclusion CT' on this policy."""
    if premise.status == CT and conclusion.status == NOT_CT:
        return FAILS
    if premise.status == NOT_CT or conclusion.status == CT:
        return HOLDS
    return UNKNOWN


def transparency_between(source_sem: Semantics, target_sem: Semantics,
                         spec: InputSpec, fuel: int = DEFAULT_FUEL,
                         pass_name: str = "") -> TransparencyReport:
    """Compare the verdicts of two already-built semantics."""
    src = check_ct(source_sem, spec, fuel)
    tgt = check_ct(target_sem, spec, fuel)
    return TransparencyReport(
        source=src,
        target=tgt,
        reflection=_direction(tgt, src),
        preservation=_direction(src, tgt),
        pass_name=pass_name,
    )


def check_transparency(prog, pass_name: str, spec: InputSpec,
                       fuel: int = DEFAULT_FUEL) -> TransparencyReport:
    """Apply a pass (or comma pipeline) and compare verdicts on one spec.

    The verdicts quantify over the one indistinguishability policy the
    spec induces; testing more policies means calling this with more
    specs.
    """
    from .cfg import CfgProgram
    from .passes import apply_pipeline

    language = "cfg" if isinstance(prog, CfgProgram) else "structured"
    target, target_language = apply_pipeline(pass_name, prog, language)
    return transparency_between(
        semantics_for(prog, language),
        semantics_for(target, target_language),
        spec, fuel, pass_name=pass_name)
