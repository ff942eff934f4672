"""Stepwise simulation checking between a program and its transformation.

A certificate explains how target behavior is built from source behavior:

* ``nsteps`` says how many source steps make up one round at the current
  source point (1 everywhere for lock-step passes);
* ``transform`` maps the source observation segment of a round to the one
  observation the target must emit;
* ``suffix`` gives the observations the source may still produce after
  the target has terminated;
* ``relation`` is the coupling invariant checked between rounds and at
  the end.

The checker drives both programs on concrete inputs and verifies every
round.  It also logs, per source point, which segments mapped to which
target observation.  Two different segments hitting the same target
observation at the same point witness a non-injective transformer: the
target then leaks less than the source, so a constant-time target cannot
certify a constant-time source.  Passes with injective transformers that
verify on all inputs are transparent on those inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lang import OBS_NONE, Observation, obs_branch
from .structured import (
    Assign,
    Cmd,
    If,
    Load,
    Nil,
    Store,
    While,
    seq,
    split_head,
)
from .cfg import BranchNode, CfgProgram
from .ct import DEFAULT_FUEL, Semantics, coerce_semantics, semantics_for
from .passes import PassError
from .passes.substitute import annotate_substitutions, expr_substitute
from .passes.deadcode import (
    dead_after,
    dead_assignment_eliminate,
    dead_branch_eliminate,
    dead_load_eliminate,
    dead_store_eliminate,
    is_dead_assign,
    is_dead_load,
    liveness_analyze,
    self_store_head,
)
from .passes.branchless import branch_coalesce, convertible_if, if_convert
from .passes.unspill import check_spill_form, rewrite_spills, unspill
from .passes.regions import label_translation, structure_cfg
from .passes.rotate import loop_rotate, rotation_pairs

VERIFIED = "verified"
VIOLATED = "violated"
SIM_BUDGET_LIMITED = "budget-limited"

_ANY = object()


@dataclass(frozen=True)
class ObsPattern:
    """Matches an observation by kind and, unless wildcarded, by value."""

    kind: str
    value: object = _ANY

    def matches(self, obs: Observation) -> bool:
        return obs.kind == self.kind and (
            self.value is _ANY or self.value == obs.value
        )

    def __str__(self):
        return self.kind if self.value is _ANY else f"{self.kind}({self.value})"


def exact(obs: Observation) -> ObsPattern:
    return ObsPattern(obs.kind, obs.value)


@dataclass(frozen=True)
class SimulationCertificate:
    name: str
    relation: object      # (source state, target state) -> bool
    nsteps: object        # source point -> int >= 1
    transform: object     # (source point, segment) -> Observation | None
    suffix: object        # source point -> tuple[ObsPattern, ...]
    lockstep: bool


@dataclass(frozen=True)
class SimViolation:
    input_index: int
    input: object
    round: int
    kind: str
    message: str
    point: object
    segment: tuple
    target_obs: object


@dataclass(frozen=True)
class SimCollision:
    point: object
    target_obs: Observation
    segment_a: tuple
    segment_b: tuple


@dataclass(frozen=True)
class RoundSample:
    """One verified round: the source segment behind one target observation."""

    point: object
    target_obs: Observation
    segment: tuple


@dataclass(frozen=True)
class SimulationReport:
    certificate: str
    status: str
    violation: "SimViolation | None"
    injective: bool
    collisions: tuple
    collision_count: int
    inputs_checked: int
    rounds: int
    # Verified rounds, capped; the injective/collisions fields above are
    # exact even when this sample log is truncated.
    rounds_log: "tuple[RoundSample, ...]" = ()

    @property
    def transparent_on_inputs(self) -> bool:
        return self.status == VERIFIED and self.injective


_COLLISION_CAP = 20
_LOG_CAP = 200_000


def check_simulation(cert: SimulationCertificate, src: Semantics,
                     tgt: Semantics, inputs, fuel: int = DEFAULT_FUEL) -> SimulationReport:
    """Verify the certificate on every input and scan for collisions."""
    inputs = list(inputs)
    log: dict = {}
    log_list: list = []
    collisions: list = []
    collision_count = 0
    violation = None
    budget_hit = False
    rounds_total = 0

    for idx, inp in enumerate(inputs):
        s = src.initial(inp)
        t = tgt.initial(inp)
        if not cert.relation(s, t):
            violation = SimViolation(idx, inp, 0, "initial-unrelated",
                                     "initial states are not related",
                                     src.point(s), (), None)
            break
        fuel_s = fuel
        fuel_t = fuel
        rnd = 0
        failed = False
        while not tgt.is_final(t):
            if fuel_t <= 0 or fuel_s <= 0:
                budget_hit = True
                break
            pc = src.point(s)
            n = cert.nsteps(pc)
            if n < 1:
                violation = SimViolation(idx, inp, rnd, "nsteps-invalid",
                                         f"nsteps returned {n}", pc, (), None)
                failed = True
                break
            segment = []
            for _ in range(n):
                if src.is_final(s):
                    violation = SimViolation(
                        idx, inp, rnd, "source-stuck",
                        f"source finished {len(segment)} steps into a round of {n}",
                        pc, tuple(segment), None)
                    failed = True
                    break
                if fuel_s <= 0:
                    budget_hit = True
                    break
                o, s = src.step(s)
                fuel_s -= 1
                segment.append(o)
            if failed or budget_hit:
                break
            segment = tuple(segment)
            t_obs, t = tgt.step(t)
            fuel_t -= 1
            expected = cert.transform(pc, segment)
            if expected is None:
                violation = SimViolation(
                    idx, inp, rnd, "transform-undefined",
                    "the observation transformer rejects this segment",
                    pc, segment, t_obs)
                failed = True
                break
            if expected != t_obs:
                violation = SimViolation(
                    idx, inp, rnd, "observation-mismatch",
                    f"expected target observation {expected}, saw {t_obs}",
                    pc, segment, t_obs)
                failed = True
                break
            if not cert.relation(s, t):
                violation = SimViolation(
                    idx, inp, rnd, "relation-broken",
                    "states unrelated after the round",
                    src.point(s), segment, t_obs)
                failed = True
                break
            key = (pc, t_obs)
            seen = log.get(key)
            if seen is None:
                log[key] = segment
            elif seen != segment:
                collision_count += 1
                if len(collisions) < _COLLISION_CAP:
                    collisions.append(SimCollision(pc, t_obs, seen, segment))
            if len(log_list) < _LOG_CAP:
                log_list.append(RoundSample(pc, t_obs, segment))
            rnd += 1
            rounds_total += 1
        if failed:
            break
        if budget_hit:
            continue

        # Target finished: the source may run a declared suffix, then both
        # final states must be related.
        pc = src.point(s)
        patterns = cert.suffix(pc)
        drained = []
        while not src.is_final(s):
            if fuel_s <= 0:
                budget_hit = True
                break
            if len(drained) >= len(patterns):
                o, _ = src.step(s)
                violation = SimViolation(
                    idx, inp, rnd, "suffix-mismatch",
                    f"source continues past the declared suffix with {o}",
                    pc, tuple(drained) + (o,), None)
                failed = True
                break
            o, s = src.step(s)
            fuel_s -= 1
            if not patterns[len(drained)].matches(o):
                violation = SimViolation(
                    idx, inp, rnd, "suffix-mismatch",
                    f"suffix observation {o} does not match "
                    f"{patterns[len(drained)]}",
                    pc, tuple(drained) + (o,), None)
                failed = True
                break
            drained.append(o)
        if failed:
            break
        if budget_hit:
            continue
        if len(drained) < len(patterns):
            violation = SimViolation(
                idx, inp, rnd, "suffix-mismatch",
                f"source finished after {len(drained)} of "
                f"{len(patterns)} suffix observations",
                pc, tuple(drained), None)
            break
        if not cert.relation(s, t):
            violation = SimViolation(
                idx, inp, rnd, "relation-broken",
                "final states are not related",
                src.point(s), tuple(drained), None)
            break

    if violation is not None:
        status = VIOLATED
        checked = violation.input_index + 1
    else:
        status = SIM_BUDGET_LIMITED if budget_hit else VERIFIED
        checked = len(inputs)
    return SimulationReport(
        certificate=cert.name,
        status=status,
        violation=violation,
        injective=collision_count == 0,
        collisions=tuple(collisions),
        collision_count=collision_count,
        inputs_checked=checked,
        rounds=rounds_total,
        rounds_log=tuple(log_list),
    )


def _spec_semantics(program) -> Semantics:
    """Semantics for a program value, passing Semantics objects through."""
    return coerce_semantics(program)


def check_relaxed(source, target, cert: SimulationCertificate, spec,
                  fuel: int = DEFAULT_FUEL) -> SimulationReport:
    """Check a relaxed simulation certificate over a whole input spec.

    Each round runs ``nsteps`` source steps against one target step; when
    the target finishes first, the source drains the declared suffix.
    """
    from .inputs import enumerate_inputs

    return check_simulation(cert, _spec_semantics(source),
                            _spec_semantics(target),
                            enumerate_inputs(spec), fuel)


def check_lockstep(source, target, cert: SimulationCertificate, spec,
                   fuel: int = DEFAULT_FUEL) -> SimulationReport:
    """Check a lock-step certificate: one source step per target step.

    The certificate must declare itself lock-step; its step counts and
    suffixes are additionally enforced to be 1 and empty during the run.
    """
    from dataclasses import replace

    if not cert.lockstep:
        raise PassError(
            f"certificate {cert.name} is not lock-step; use check_relaxed")

    def one_step(pc):
        n = cert.nsteps(pc)
        if n != 1:
            raise PassError(
                f"lock-step certificate {cert.name} asked for {n} steps")
        return n

    def empty_suffix(pc):
        pats = cert.suffix(pc)
        if pats:
            raise PassError(
                f"lock-step certificate {cert.name} declared a suffix")
        return pats

    guarded = replace(cert, nsteps=one_step, suffix=empty_suffix)
    return check_relaxed(source, target, guarded, spec, fuel)


@dataclass(frozen=True)
class InjectivityReport:
    certificate: str
    injective: bool
    collision: "SimCollision | None"
    samples: int

    def __str__(self):
        from .lang import format_observation, format_trace

        if self.injective:
            return (f"{self.certificate}: no collision over "
                    f"{self.samples} samples")
        c = self.collision
        return (f"{self.certificate}: segments [{format_trace(c.segment_a)}] "
                f"and [{format_trace(c.segment_b)}] both map to "
                f"{format_observation(c.target_obs)} at one point")


def check_injectivity(cert: SimulationCertificate, runs) -> InjectivityReport:
    """Scan observed rounds for two segments behind one target observation.

    ``runs`` is either a SimulationReport (its round log is used) or any
    iterable of RoundSample records.  A collision means the transformer
    merges source behaviors: a constant-time target then cannot certify a
    constant-time source at that point.
    """
    if isinstance(runs, SimulationReport):
        runs = runs.rounds_log
    seen: dict = {}
    samples = 0
    for sample in runs:
        samples += 1
        key = (sample.point, sample.target_obs)
        prior = seen.get(key)
        if prior is None:
            seen[key] = sample.segment
        elif prior != sample.segment:
            return InjectivityReport(
                cert.name, False,
                SimCollision(sample.point, sample.target_obs, prior,
                             sample.segment),
                samples)
    return InjectivityReport(cert.name, True, None, samples)


# ---------------------------------------------------------------------------
# State comparison helpers

def maps_equal(a: dict, b: dict, skip=frozenset()) -> bool:
    """Total-map equality with default 0, ignoring the keys in ``skip``."""
    for k in a.keys() | b.keys():
        if k in skip:
            continue
        if a.get(k, 0) != b.get(k, 0):
            return False
    return True


def states_equal(s, t) -> bool:
    return maps_equal(s.regs, t.regs) and maps_equal(s.mem, t.mem)


def _identity_transform(pc, segment):
    return segment[0] if len(segment) == 1 else None


def _no_suffix(pc):
    return ()


def _one(pc):
    return 1


# ---------------------------------------------------------------------------
# Certificate builders, one per supported pass

@dataclass(frozen=True)
class CertificateBundle:
    pass_name: str
    source_program: object
    source_language: str
    target_program: object
    target_language: str
    certificate: SimulationCertificate
    injective_expected: bool

    def source_semantics(self) -> Semantics:
        return semantics_for(self.source_program, self.source_language)

    def target_semantics(self) -> Semantics:
        return semantics_for(self.target_program, self.target_language)


def _subst_bundle(pass_name: str, prog: Cmd, strategy: str) -> CertificateBundle:
    ann = annotate_substitutions(prog, strategy)
    tgt = expr_substitute(ann)

    def relation(s, t):
        # The remaining source code carries the still-pending substitution
        # pairs, so rewriting it must reproduce the remaining target code.
        return states_equal(s, t) and t.code == expr_substitute(s.code)

    cert = SimulationCertificate(pass_name, relation, _one,
                                 _identity_transform, _no_suffix, True)
    return CertificateBundle(pass_name, ann, "structured", tgt, "structured",
                             cert, True)


def _lead_scan(code: Cmd, classify):
    """Strip leading source-only heads.

    ``classify`` maps (head, rest) to an ObsPattern when the head is
    consumed without a target step, or None at the first real head.
    Returns (patterns, code at the first real head).
    """
    patterns = []
    while not isinstance(code, Nil):
        head, rest = split_head(code)
        res = classify(head, rest)
        if res is None:
            break
        pattern, code = res
        patterns.append(pattern)
    return tuple(patterns), code


def _literal_if(head):
    from .lang import Const
    if isinstance(head, If) and isinstance(head.cond, Const) \
            and isinstance(head.cond.value, bool):
        return head.cond.value
    return None


def _lead_transform(lead, name):
    """Build transform/nsteps/suffix from a lead-scanning function."""

    def nsteps(pc):
        patterns, _ = lead(pc)
        return len(patterns) + 1

    def transform(pc, segment):
        patterns, _ = lead(pc)
        if len(segment) != len(patterns) + 1:
            return None
        for pat, obs in zip(patterns, segment):
            if not pat.matches(obs):
                return None
        return segment[-1]

    def suffix(pc):
        patterns, stripped = lead(pc)
        return patterns if isinstance(stripped, Nil) else ()

    return nsteps, transform, suffix


def _dbe_bundle(prog: Cmd) -> CertificateBundle:
    tgt = dead_branch_eliminate(prog)

    def lead(pc):
        def classify(head, rest):
            b = _literal_if(head)
            if b is None:
                return None
            taken = head.then if b else head.orelse
            return exact(obs_branch(b)), seq(taken, rest)
        return _lead_scan(pc, classify)

    def relation(s, t):
        return states_equal(s, t) and t.code == dead_branch_eliminate(s.code)

    nsteps, transform, suffix = _lead_transform(lead, "dbe")
    cert = SimulationCertificate("dbe", relation, nsteps, transform, suffix,
                                 False)
    return CertificateBundle("dbe", prog, "structured", tgt, "structured",
                             cert, True)


def _dead_atom_bundle(pass_name: str, prog: Cmd, removable, eliminate,
                      injective_expected: bool) -> CertificateBundle:
    ann = liveness_analyze(prog)
    tgt = eliminate(ann)

    def lead(pc):
        def classify(head, rest):
            after = dead_after(rest, frozenset())
            if not removable(head, after):
                return None
            if isinstance(head, Assign):
                pattern = exact(OBS_NONE)
            else:
                pattern = ObsPattern("addr")
            return pattern, rest
        return _lead_scan(pc, classify)

    def relation(s, t):
        # Registers that are dead right now may hold junk on the source
        # side; everything else, and all of memory, must agree.
        dead_now = dead_after(s.code, frozenset())
        return (
            maps_equal(s.regs, t.regs, skip=dead_now)
            and maps_equal(s.mem, t.mem)
            and t.code == eliminate(s.code)
        )

    nsteps, transform, suffix = _lead_transform(lead, pass_name)
    cert = SimulationCertificate(pass_name, relation, nsteps, transform,
                                 suffix, False)
    return CertificateBundle(pass_name, ann, "structured", tgt, "structured",
                             cert, injective_expected)


def _dse_bundle(prog: Cmd) -> CertificateBundle:
    tgt = dead_store_eliminate(prog)

    def nsteps(pc):
        return 2 if self_store_head(pc) else 1

    def transform(pc, segment):
        if len(segment) == 2:
            a, b = segment
            if a.kind == "addr" and b == a:
                return a
            return None
        return segment[0] if len(segment) == 1 else None

    def relation(s, t):
        # The removed store wrote back a freshly loaded value, so both
        # registers and memory agree exactly.
        return states_equal(s, t) and t.code == dead_store_eliminate(s.code)

    cert = SimulationCertificate("dead-store-elim", relation, nsteps,
                                 transform, _no_suffix, False)
    return CertificateBundle("dead-store-elim", prog, "structured", tgt,
                             "structured", cert, True)


def _unspill_bundle(prog: Cmd, sp: str = "sp") -> CertificateBundle:
    check_spill_form(prog, sp)
    tgt, slots = unspill(prog, sp)
    offsets = tuple((slot.offset, slot.var) for slot in slots)
    slot_vars = frozenset(var for _, var in offsets)

    def slot_addrs(s):
        base = s.regs.get(sp, 0)
        return {base + n for n, _ in offsets}

    def relation(s, t):
        base = s.regs.get(sp, 0)
        if not maps_equal(s.regs, t.regs, skip=slot_vars):
            return False
        if not maps_equal(s.mem, t.mem, skip=slot_addrs(s)):
            return False
        for n, var in offsets:
            if s.mem.get(base + n, 0) != t.regs.get(var, 0):
                return False
        return t.code == rewrite_spills(s.code, sp)

    def transform(pc, segment):
        if len(segment) != 1:
            return None
        head, _ = split_head(pc) if not isinstance(pc, Nil) else (None, None)
        if isinstance(head, (Load, Store)):
            return OBS_NONE if segment[0].kind == "addr" else None
        return segment[0]

    cert = SimulationCertificate("unspill", relation, _one, transform,
                                 _no_suffix, True)
    return CertificateBundle("unspill", prog, "structured", tgt, "structured",
                             cert, True)


def _structure_bundle(g: CfgProgram) -> CertificateBundle:
    tgt = structure_cfg(g)
    star = label_translation(g)

    def relation(s, t):
        return states_equal(s, t) and t.code == star(s.label)

    cert = SimulationCertificate("structure", relation, _one,
                                 _identity_transform, _no_suffix, True)
    return CertificateBundle("structure", g, "cfg", tgt, "structured", cert,
                             True)


def _rotate_bundle(g: CfgProgram) -> CertificateBundle:
    pairs = rotation_pairs(g)
    tgt = loop_rotate(g)

    def relation(s, t):
        if not states_equal(s, t):
            return False
        return t.label == s.label or pairs.get(s.label) == t.label

    cert = SimulationCertificate("loop-rotate", relation, _one,
                                 _identity_transform, _no_suffix, True)
    return CertificateBundle("loop-rotate", g, "cfg", tgt, "cfg", cert, True)


def _if_convert_bundle(prog: Cmd) -> CertificateBundle:
    tgt = if_convert(prog)

    def head_of(pc):
        return None if isinstance(pc, Nil) else split_head(pc)[0]

    def nsteps(pc):
        return 2 if convertible_if(head_of(pc)) else 1

    def transform(pc, segment):
        if len(segment) == 2:
            if segment[0].kind == "branch" and segment[1] == OBS_NONE:
                return OBS_NONE
            return None
        return segment[0] if len(segment) == 1 else None

    def relation(s, t):
        return states_equal(s, t) and t.code == if_convert(s.code)

    cert = SimulationCertificate("if-convert", relation, nsteps, transform,
                                 _no_suffix, False)
    return CertificateBundle("if-convert", prog, "structured", tgt,
                             "structured", cert, False)


def _coalesce_depth(code: Cmd) -> int:
    """Rounds of branch consumption before the next real step.

    Both arms of a coalesced conditional must agree on this depth, or no
    point-indexed step count exists and the certificate cannot be built.
    """
    if isinstance(code, Nil):
        return 0
    head, rest = split_head(code)
    if not isinstance(head, If):
        return 0
    if branch_coalesce(head.then) != branch_coalesce(head.orelse):
        return 0
    d_then = _coalesce_depth(seq(head.then, rest))
    d_else = _coalesce_depth(seq(head.orelse, rest))
    if d_then != d_else:
        raise PassError(
            "coalesced conditionals nest unevenly; no per-point step count "
            "exists for this program"
        )
    return 1 + d_then


def _branch_coalesce_bundle(prog: Cmd) -> CertificateBundle:
    tgt = branch_coalesce(prog)
    _coalesce_depth_check(prog)

    def lead(pc):
        def classify(head, rest):
            if isinstance(head, If) and \
                    branch_coalesce(head.then) == branch_coalesce(head.orelse):
                # Either branch value may occur; the arm taken is encoded
                # in the continuation we scan next.  Depth uniformity was
                # checked up front, so the true arm's scan is canonical.
                return ObsPattern("branch"), seq(head.then, rest)
            return None
        return _lead_scan(pc, classify)

    def relation(s, t):
        return states_equal(s, t) and t.code == branch_coalesce(s.code)

    nsteps, transform, suffix = _lead_transform(lead, "branch-coalesce")
    cert = SimulationCertificate("branch-coalesce", relation, nsteps,
                                 transform, suffix, False)
    return CertificateBundle("branch-coalesce", prog, "structured", tgt,
                             "structured", cert, False)


def _coalesce_depth_check(code: Cmd) -> None:
    """Verify depth uniformity at every reachable program point.

    Loop bodies are explored against their unrolled continuation; the set
    of remaining-code values is finite, so a visited set terminates."""
    visited = set()
    work = [code]
    while work:
        c = work.pop()
        if isinstance(c, Nil) or c in visited:
            continue
        visited.add(c)
        head, rest = split_head(c)
        if isinstance(head, If):
            _coalesce_depth(c)
            work.append(seq(head.then, rest))
            work.append(seq(head.orelse, rest))
        elif isinstance(head, While):
            work.append(seq(head.body, c))
            work.append(rest)
        else:
            work.append(rest)


def _empty_branch_bundle(g: CfgProgram) -> CertificateBundle:
    from .passes.branchless import cfg_empty_branch_coalesce
    tgt = cfg_empty_branch_coalesce(g)
    converted = frozenset(
        n.label for n in g.nodes
        if isinstance(n, BranchNode) and n.succ_true == n.succ_false
    )

    def transform(pc, segment):
        if len(segment) != 1:
            return None
        if pc in converted:
            return OBS_NONE if segment[0].kind == "branch" else None
        return segment[0]

    def relation(s, t):
        return states_equal(s, t) and s.label == t.label

    cert = SimulationCertificate("empty-branch-coalesce", relation, _one,
                                 transform, _no_suffix, True)
    return CertificateBundle("empty-branch-coalesce", g, "cfg", tgt, "cfg",
                             cert, False)


def build_certificate(pass_name: str, program, language: str) -> CertificateBundle:
    """A certificate bundle for one pass applied to one program."""
    builders = {
        "const-fold": lambda p: _subst_bundle("const-fold", p, "const-fold"),
        "untile": lambda p: _subst_bundle("untile", p, "untile"),
        "dbe": _dbe_bundle,
        "dae": lambda p: _dead_atom_bundle(
            "dae", p, is_dead_assign, dead_assignment_eliminate, True),
        "dead-load-elim": lambda p: _dead_atom_bundle(
            "dead-load-elim", p, is_dead_load, dead_load_eliminate, False),
        "dead-store-elim": _dse_bundle,
        "unspill": _unspill_bundle,
        "structure": _structure_bundle,
        "loop-rotate": _rotate_bundle,
        "if-convert": _if_convert_bundle,
        "branch-coalesce": _branch_coalesce_bundle,
        "empty-branch-coalesce": _empty_branch_bundle,
    }
    if pass_name == "inv-if-convert":
        raise PassError(
            "inverse if conversion makes the target take more steps than "
            "the source, which this round structure cannot express; use the "
            "trace checker on it instead"
        )
    if pass_name not in builders:
        raise PassError(f"no certificate builder for pass {pass_name!r}")
    builder = builders[pass_name]
    expected = {"structure", "loop-rotate", "empty-branch-coalesce"}
    want = "cfg" if pass_name in expected else "structured"
    if language != want:
        raise PassError(
            f"pass {pass_name} certifies {want} programs, got {language}"
        )
    return builder(program)
