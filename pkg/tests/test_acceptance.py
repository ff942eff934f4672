"""Acceptance harness: ten numbered criteria, one verdict line each.

Each test records exactly one "criterion N: PASS/FAIL" line; conftest
prints them in a summary section after the run, so the verdicts stay
visible in captured pytest runs.  Budgets are asserted where the
criterion states one.
"""

import time

import conftest

from ctlab.cfg import cfg_vars, run_cfg
from ctlab.corpus import (
    MATRIX_ROWS,
    derive_matrix,
    entry_by_name,
    run_entries,
)
from ctlab.ct import (
    CT,
    FAILS,
    HOLDS,
    NOT_CT,
    check_ct,
    check_transparency,
)
from ctlab.generate import (
    generate_programs,
    generate_suite,
    lower_to_cfg,
    random_partitions,
)
from ctlab.inputs import enumerate_inputs
from ctlab.lang import OBS_NONE, obs_branch
from ctlab.parsing import parse_spec
from ctlab.passes import apply_pass
from ctlab.passes.regions import structure_cfg
from ctlab.simulation import (
    RoundSample,
    SimulationCertificate,
    VERIFIED,
    build_certificate,
    check_injectivity,
    check_lockstep,
    check_relaxed,
)
from ctlab.structured import cmd_vars, run_struct

TRANSPARENT_PASSES = (
    "const-fold", "untile", "dbe", "dae", "unspill", "structure",
    "loop-rotate",
)
LOCKSTEP_PASSES = ("const-fold", "untile", "structure", "loop-rotate")
RELAXED_PASSES = ("dbe", "dae", "unspill")

SUITE_SEED = 2024
SUITE_COUNT = 500

_suites: dict = {}


def suite(pass_name, count=SUITE_COUNT, seed=SUITE_SEED):
    key = (pass_name, count, seed)
    if key not in _suites:
        _suites[key] = generate_suite(pass_name, count, seed)
    return _suites[key]


def conclude(num, ok, description, budget=None, elapsed=None):
    in_budget = budget is None or elapsed is None or elapsed < budget
    detail = ""
    if elapsed is not None:
        detail = f" [{elapsed:.2f}s" + (f" < {budget:.0f}s]" if budget else "]")
    verdict = "PASS" if ok and in_budget else "FAIL"
    line = f"criterion {num}: {verdict} - {description}{detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line
    assert in_budget, f"criterion {num} overran: {elapsed:.2f}s of {budget:.0f}s"


def reflection_failure(entry_name):
    """source NotCT, target CT, reflection FAILS for one corpus entry."""
    e = entry_by_name(entry_name)
    rep = check_transparency(e.program(), e.target_pass, e.spec(), 10000)
    return (
        rep.source.status == NOT_CT
        and rep.target.status == CT
        and rep.reflection == FAILS
        and rep.preservation == HOLDS
    )


def test_criterion_01_clangover_reflection_failure():
    t0 = time.monotonic()
    ok = reflection_failure("clangover")
    e = entry_by_name("clangover")
    # the secret branch picks coefficient 0 or 1665 per message bit
    ok = ok and "1665" in e.program_text
    v = check_ct(e.program(), e.spec(), 10000)
    ok = ok and v.witness is not None and v.witness.step == 9
    elapsed = time.monotonic() - t0
    conclude(1, ok,
             "secret-branch loop NotCT, CT after if-convert, reflection FAIL",
             budget=1.0, elapsed=elapsed)


def test_criterion_02_dead_load_reflection_failure():
    t0 = time.monotonic()
    ok = reflection_failure("dead-load-secret-index")
    e = entry_by_name("dead-load-secret-index")
    v = check_ct(e.program(), e.spec(), 10000)
    ok = ok and v.witness is not None
    ok = ok and {v.witness.obs_a.value, v.witness.obs_b.value} == {100, 101}
    elapsed = time.monotonic() - t0
    conclude(2, ok,
             "unused secret-indexed load NotCT, CT after dead-load-elim",
             budget=1.0, elapsed=elapsed)


def test_criterion_03_empty_branch_family():
    t0 = time.monotonic()
    ok = reflection_failure("empty-branch-secret")
    ok = ok and reflection_failure("branch-coalesce-arms")
    ok = ok and reflection_failure("self-store-roundtrip")
    elapsed = time.monotonic() - t0
    conclude(3, ok,
             "equal-successor branch, identical arms, and self-store all "
             "NotCT before and CT after their pass",
             budget=1.0, elapsed=elapsed)


def test_criterion_04_inverse_if_conversion_preservation_failure():
    t0 = time.monotonic()
    e = entry_by_name("cmov-to-branch")
    rep = check_transparency(e.program(), e.target_pass, e.spec(), 10000)
    ok = (
        rep.source.status == CT
        and rep.target.status == NOT_CT
        and rep.preservation == FAILS
        and rep.reflection == HOLDS
    )
    elapsed = time.monotonic() - t0
    conclude(4, ok, "mux program CT, NotCT after inv-if-convert",
             budget=1.0, elapsed=elapsed)


def test_criterion_05_transparency_matrix():
    t0 = time.monotonic()
    entry_results = run_entries(10000)
    rows = derive_matrix(10000, count=25, seed=0,
                         entry_results=entry_results)
    ok = all(r.matches for r in entry_results)
    ok = ok and len(rows) == 10
    ok = ok and all(r.matches for r in rows)
    ok = ok and all(r.undetermined == 0 for r in rows)
    marks = {r.row.name: (r.reflects, r.preserves) for r in rows}
    ok = ok and sum(1 for m in marks.values() if m == (True, True)) == 7
    ok = ok and {n for n, m in marks.items() if m == (False, True)} == {
        "Branch Coalescing", "If Conversion", "Memory Access Elimination",
    }
    elapsed = time.monotonic() - t0
    conclude(5, ok,
             "ten-pass matrix re-derived: seven rows transparent, three "
             "reflection failures, zero mismatches",
             budget=30.0, elapsed=elapsed)


def test_criterion_06_randomized_transparency_suite():
    t0 = time.monotonic()
    mismatches = 0
    programs = 0
    for pass_name in TRANSPARENT_PASSES:
        for prog, spec, language in suite(pass_name):
            programs += 1
            target, _ = apply_pass(pass_name, prog, language)
            for s in [spec] + random_partitions(spec, SUITE_SEED, 1):
                assert s.domain_size <= 64
                a = check_ct(prog, s, 10000)
                b = check_ct(target, s, 10000)
                if a.status != b.status:
                    mismatches += 1
    ok = mismatches == 0 and programs >= 7 * SUITE_COUNT
    elapsed = time.monotonic() - t0
    conclude(6, ok,
             f"verdicts identical across {programs} programs x 2 policies "
             f"for the seven transparent passes ({mismatches} mismatches)",
             budget=300.0, elapsed=elapsed)


def _corpus_programs_for(pass_name, language):
    """Corpus entries in the pass's source language; the builder decides
    whether the certificate applies (identity transforms still verify)."""
    from ctlab.corpus import ENTRIES
    from ctlab.passes import PassError

    out = []
    for e in ENTRIES:
        if e.language != language:
            continue
        try:
            out.append((build_certificate(pass_name, e.program(), e.language),
                        e.spec()))
        except PassError:
            continue
    return out


def test_criterion_07_simulation_certificate_suite():
    t0 = time.monotonic()
    failures = 0
    collisions = 0
    checked = 0

    def run_one(bundle, spec, checker):
        nonlocal failures, collisions, checked
        checked += 1
        rep = checker(bundle.source_program, bundle.target_program,
                      bundle.certificate, spec, 10000)
        if rep.status != VERIFIED:
            failures += 1
        if not check_injectivity(bundle.certificate, rep).injective:
            collisions += 1

    for pass_name in LOCKSTEP_PASSES + RELAXED_PASSES:
        checker = check_lockstep if pass_name in LOCKSTEP_PASSES else check_relaxed
        language = "cfg" if pass_name in ("structure", "loop-rotate") else "structured"
        for bundle, spec in _corpus_programs_for(pass_name, language):
            run_one(bundle, spec, checker)
        for prog, spec, lang in suite(pass_name):
            run_one(build_certificate(pass_name, prog, lang), spec, checker)

    # an adversarial transformer that merges both branch directions into
    # silence must be flagged by the injectivity scan
    adversary = SimulationCertificate(
        name="adversary", relation=lambda s, t: True, nsteps=lambda pc: 1,
        transform=lambda pc, seg: OBS_NONE, suffix=lambda pc: (),
        lockstep=False)
    merged = [
        RoundSample("L", OBS_NONE, (obs_branch(True),)),
        RoundSample("L", OBS_NONE, (obs_branch(False),)),
    ]
    adversary_caught = not check_injectivity(adversary, merged).injective

    # the same effect end to end: branch coalescing on distinguishable arms
    # verifies but collides, so it cannot certify transparency
    e = entry_by_name("branch-coalesce-arms")
    b = build_certificate("branch-coalesce", e.program(), e.language)
    rep = check_relaxed(b.source_program, b.target_program, b.certificate,
                        e.spec(), 10000)
    end_to_end = (rep.status == VERIFIED
                  and not check_injectivity(b.certificate, rep).injective)

    ok = (failures == 0 and collisions == 0 and adversary_caught
          and end_to_end and checked >= 7 * SUITE_COUNT)
    elapsed = time.monotonic() - t0
    conclude(7, ok,
             f"{checked} certificates verified with zero collisions; "
             "adversarial transformer detected",
             budget=300.0, elapsed=elapsed)


def test_criterion_08_semantic_equivalence_oracle():
    t0 = time.monotonic()
    from ctlab.generate import SUITE_FEATURES

    failures = 0
    programs = 0
    for pass_name in sorted(SUITE_FEATURES):
        for prog, spec, language in suite(pass_name, count=120):
            programs += 1
            target, tlang = apply_pass(pass_name, prog, language)
            orig_vars = cmd_vars(prog) if language == "structured" else cfg_vars(prog)
            run_src = run_struct if language == "structured" else run_cfg
            run_tgt = run_struct if tlang == "structured" else run_cfg
            for inp in enumerate_inputs(spec):
                ra = run_src(prog, inp, 10000)
                rb = run_tgt(target, inp, 10000)
                if ra.final != rb.final:
                    failures += 1
                    continue
                regs_a = {v: ra.state.regs.get(v, 0) for v in orig_vars}
                regs_b = {v: rb.state.regs.get(v, 0) for v in orig_vars}
                # unspill moves the spill area (addresses below 100) into
                # registers; memory is compared outside it
                mem_a = {k: v for k, v in ra.state.mem.items()
                         if not (pass_name == "unspill" and k < 100) and v != 0}
                mem_b = {k: v for k, v in rb.state.mem.items()
                         if not (pass_name == "unspill" and k < 100) and v != 0}
                if regs_a != regs_b or mem_a != mem_b:
                    failures += 1
    ok = failures == 0 and programs >= 13 * 120
    elapsed = time.monotonic() - t0
    conclude(8, ok,
             f"final states agree for all 13 passes over {programs} "
             f"programs ({failures} disagreements)",
             elapsed=elapsed)


def test_criterion_09_structuring_round_trip():
    t0 = time.monotonic()
    failures = 0
    graphs = 0
    for prog, spec in generate_programs(SUITE_SEED + 1, count=200):
        g = lower_to_cfg(prog)
        back = structure_cfg(g)
        graphs += 1
        for inp in enumerate_inputs(spec):
            ra = run_cfg(g, inp, 10000)
            rb = run_struct(back, inp, 10000)
            if len(ra.trace) != len(rb.trace) or any(
                x != y for x, y in zip(ra.trace, rb.trace)
            ) or ra.final != rb.final:
                failures += 1
    ok = failures == 0 and graphs == 200
    elapsed = time.monotonic() - t0
    conclude(9, ok,
             f"run_cfg and the structured translation agree elementwise on "
             f"{graphs} lowered graphs ({failures} failures)",
             elapsed=elapsed)


def test_criterion_10_semantics_invariants():
    t0 = time.monotonic()
    from ctlab.structured import initial_state, is_final, step

    pairs = 0
    violations = 0
    determinism_checked = 0
    for prog, spec in generate_programs(SUITE_SEED + 2, count=300):
        inputs = enumerate_inputs(spec)
        # determinism: bitwise-equal traces and states on a re-run
        for inp in inputs[:4]:
            a = run_struct(prog, inp, 10000)
            b = run_struct(prog, inp, 10000)
            determinism_checked += 1
            if a.trace != b.trace or a.state != b.state or a.final != b.final:
                violations += 1
        # control-flow revelation: step two runs side by side; whenever the
        # code points agree (including after re-converging at a join) and
        # the observations agree, the next code points must agree too
        for i in range(min(len(inputs), 6)):
            for j in range(i, min(len(inputs), 6)):
                s = initial_state(prog, inputs[i])
                t = initial_state(prog, inputs[j])
                for _ in range(400):
                    if is_final(s) or is_final(t):
                        break
                    codes_equal = s.code == t.code
                    os_, s = step(s)
                    ot, t = step(t)
                    if codes_equal:
                        pairs += 1
                        if os_ == ot and s.code != t.code:
                            violations += 1
                if pairs > 30000:
                    break
        if pairs > 30000 and determinism_checked >= 200:
            break
    ok = violations == 0 and pairs >= 10**4
    elapsed = time.monotonic() - t0
    conclude(10, ok,
             f"determinism on {determinism_checked} re-runs and control-flow "
             f"revelation on {pairs} state pairs ({violations} violations)",
             elapsed=elapsed)
