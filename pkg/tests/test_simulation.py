"""Simulation certificates: round checking, injectivity, and the builders."""

import pytest
from hypothesis import given, settings, strategies as st

from ctlab.corpus import ENTRIES, entry_by_name
from ctlab.inputs import enumerate_inputs
from ctlab.lang import Observation, obs_branch, OBS_NONE
from ctlab.parsing import parse_spec, parse_structured
from ctlab.passes import PassError
from ctlab.generate import generate_suite
from ctlab.simulation import (
    ObsPattern,
    RoundSample,
    SimulationCertificate,
    VERIFIED,
    VIOLATED,
    build_certificate,
    check_injectivity,
    check_lockstep,
    check_relaxed,
    check_simulation,
    exact,
    maps_equal,
    states_equal,
)

# pass name -> (lockstep?, injectivity expected?) for every certified pass
CERT_SHAPE = {
    "branch-coalesce": (False, False),
    "const-fold": (True, True),
    "dae": (False, True),
    "dbe": (False, True),
    "dead-load-elim": (False, False),
    "dead-store-elim": (False, True),
    "empty-branch-coalesce": (True, False),
    "if-convert": (False, False),
    "loop-rotate": (True, True),
    "structure": (True, True),
    "unspill": (True, True),
    "untile": (True, True),
}


def bundle_for_entry(name, pass_name=None):
    e = entry_by_name(name)
    return (
        build_certificate(pass_name or e.target_pass, e.program(), e.language),
        e.spec(),
    )


def check_bundle(b, spec, fuel=10000):
    if b.certificate.lockstep:
        return check_lockstep(
            b.source_program, b.target_program, b.certificate, spec, fuel
        )
    return check_relaxed(
        b.source_program, b.target_program, b.certificate, spec, fuel
    )


@pytest.mark.parametrize(
    "entry_name,pass_name",
    [
        ("const-fold-affine", "const-fold"),
        ("untile-scaled-index", "untile"),
        ("dbe-literal-guard", "dbe"),
        ("dae-shadowed", "dae"),
        ("unspill-slots", "unspill"),
        ("structure-diamond-loop", "structure"),
        ("rotate-bounded-loop", "loop-rotate"),
        ("dead-load-secret-index", "dead-load-elim"),
        ("clangover", "if-convert"),
        ("branch-coalesce-arms", "branch-coalesce"),
        ("empty-branch-secret", "empty-branch-coalesce"),
        ("self-store-roundtrip", "dead-store-elim"),
    ],
)
def test_certificate_verifies_on_its_corpus_entry(entry_name, pass_name):
    b, spec = bundle_for_entry(entry_name, pass_name)
    lockstep, injective = CERT_SHAPE[pass_name]
    assert b.certificate.lockstep == lockstep
    assert b.injective_expected == injective
    report = check_bundle(b, spec)
    assert report.status == VERIFIED
    assert report.inputs_checked == len(enumerate_inputs(spec))
    inj = check_injectivity(b.certificate, report)
    assert inj.injective == injective
    assert report.transparent_on_inputs == injective


def test_inverse_if_convert_has_no_certificate():
    e = entry_by_name("cmov-to-branch")
    with pytest.raises(PassError):
        build_certificate("inv-if-convert", e.program(), e.language)


def test_lockstep_rejects_relaxed_certificates():
    b, spec = bundle_for_entry("dbe-literal-guard", "dbe")
    assert not b.certificate.lockstep
    with pytest.raises(PassError):
        check_lockstep(
            b.source_program, b.target_program, b.certificate, spec
        )


def test_relaxed_accepts_lockstep_certificates():
    # a one-step-per-round certificate is just a special relaxed one
    b, spec = bundle_for_entry("const-fold-affine", "const-fold")
    assert check_relaxed(
        b.source_program, b.target_program, b.certificate, spec
    ).status == VERIFIED


def test_corrupted_relation_fails_immediately():
    from dataclasses import replace

    b, spec = bundle_for_entry("const-fold-affine", "const-fold")
    bad = replace(b.certificate, relation=lambda s, t: False)
    report = check_relaxed(b.source_program, b.target_program, bad, spec)
    assert report.status == VIOLATED
    assert report.violation.kind == "initial-unrelated"
    assert report.violation.round == 0


def test_wrong_transform_is_caught():
    from dataclasses import replace

    b, spec = bundle_for_entry("dbe-literal-guard", "dbe")
    bad = replace(
        b.certificate, transform=lambda pc, seg: Observation("addr", 12345)
    )
    report = check_relaxed(b.source_program, b.target_program, bad, spec)
    assert report.status == VIOLATED
    assert report.violation.kind == "observation-mismatch"


def test_undefined_transform_is_caught():
    from dataclasses import replace

    b, spec = bundle_for_entry("const-fold-affine", "const-fold")
    bad = replace(b.certificate, transform=lambda pc, seg: None)
    report = check_relaxed(b.source_program, b.target_program, bad, spec)
    assert report.status == VIOLATED
    assert report.violation.kind == "transform-undefined"


def test_lockstep_traces_have_equal_length():
    for name in ("const-fold-affine", "structure-diamond-loop",
                 "rotate-bounded-loop", "unspill-slots"):
        e = entry_by_name(name)
        pass_name = e.target_pass
        if pass_name not in CERT_SHAPE or not CERT_SHAPE[pass_name][0]:
            continue
        b, spec = bundle_for_entry(name, pass_name)
        src, tgt = b.source_semantics(), b.target_semantics()
        for inp in enumerate_inputs(spec):
            ra, rb = src.run(inp), tgt.run(inp)
            assert ra.final and rb.final
            assert len(ra.trace) == len(rb.trace)


def test_rounds_log_reconstructs_both_traces():
    # on a single input, concatenated segments plus the drained suffix give
    # the source trace, and the transformer images give the target trace
    e = entry_by_name("dae-shadowed")
    b = build_certificate("dae", e.program(), e.language)
    spec = parse_spec("")  # one empty input
    report = check_relaxed(b.source_program, b.target_program, b.certificate, spec)
    assert report.status == VERIFIED
    src_run = b.source_semantics().run(enumerate_inputs(spec)[0])
    tgt_run = b.target_semantics().run(enumerate_inputs(spec)[0])
    flat = tuple(o for s in report.rounds_log for o in s.segment)
    assert flat == src_run.trace[: len(flat)]  # suffix drained afterwards
    images = tuple(
        b.certificate.transform(s.point, s.segment) for s in report.rounds_log
    )
    assert images == tgt_run.trace


def test_adversarial_transformer_is_detected():
    # a "certificate" that launders branch directions into silence: both
    # branch(true) and branch(false) map to the none observation, so the
    # scan must find a collision at the shared program point
    cert = SimulationCertificate(
        name="branch-launderer",
        relation=lambda s, t: True,
        nsteps=lambda pc: 1,
        transform=lambda pc, seg: OBS_NONE,
        suffix=lambda pc: (),
        lockstep=False,
    )
    samples = [
        RoundSample("L", OBS_NONE, (obs_branch(True),)),
        RoundSample("L", OBS_NONE, (obs_branch(False),)),
    ]
    inj = check_injectivity(cert, samples)
    assert not inj.injective
    assert inj.collision.point == "L"
    assert inj.collision.segment_a != inj.collision.segment_b
    assert "branch" in str(inj)


def test_injectivity_pools_across_runs():
    # same point, same target observation, different segments in different
    # runs still collide; keep-first scanning reports the first conflict
    a = RoundSample("P", OBS_NONE, (obs_branch(True),))
    b = RoundSample("P", OBS_NONE, (obs_branch(True),))
    c = RoundSample("P", OBS_NONE, (obs_branch(False),))
    cert = SimulationCertificate("x", None, None, None, None, False)
    assert check_injectivity(cert, [a, b]).injective
    rep = check_injectivity(cert, [a, b, c])
    assert not rep.injective
    assert rep.samples == 3


def test_obs_pattern_matching():
    p = ObsPattern("addr")
    assert p.matches(Observation("addr", 7))
    assert not p.matches(OBS_NONE)
    q = exact(Observation("addr", 7))
    assert q.matches(Observation("addr", 7))
    assert not q.matches(Observation("addr", 8))
    assert str(q) == "addr(7)"


def test_maps_equal_with_default_zero():
    assert maps_equal({"x": 0}, {})
    assert maps_equal({}, {"y": 0})
    assert not maps_equal({"x": 1}, {})
    assert maps_equal({"x": 1, "s": 9}, {"x": 1}, skip={"s"})


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10**6))
def test_certificates_verify_on_generated_programs(seed):
    for pass_name in ("const-fold", "dbe", "dae", "unspill"):
        for prog, spec, language in generate_suite(pass_name, 2, seed):
            b = build_certificate(pass_name, prog, language)
            report = check_bundle(b, spec, fuel=4000)
            assert report.status == VERIFIED, (pass_name, report.violation)
            inj = check_injectivity(b.certificate, report)
            assert inj.injective
