"""The seeded program generator and the per-pass suites."""

import pytest
from hypothesis import given, settings, strategies as st

from ctlab.cfg import run_cfg, validate_cfg
from ctlab.generate import (
    DEFAULT_FEATURES,
    FEATURES,
    SUITE_FEATURES,
    cmd_size,
    generate_programs,
    generate_suite,
    lower_to_cfg,
    random_partitions,
)
from ctlab.inputs import enumerate_inputs
from ctlab.parsing import parse_structured
from ctlab.passes import PassError, apply_pass
from ctlab.structured import (
    Assign,
    If,
    Load,
    Seq,
    Store,
    While,
    format_cmd,
    run_struct,
)

GOLDEN_SEED0 = """\
if (c <= b - c) {
    store[102 + t] := t;
} else {
    if (2 + b < 4 * 4) {
        a := load[103 + c];
    } else {
        store[100] := t;
    }
}
if (2 * d != a) {
    if (4 - c != 1 - 2) {
        store[101 + a] := a;
        store[103 + t] := c;
    } else {
    }
} else {
}
"""

GOLDEN_SEED0_SPEC = [
    ("a", "secret", 0, 1),
    ("t", "public", 0, 3),
    ("c", "secret", 0, 1),
]


def test_seed_zero_program_is_frozen():
    prog, spec = next(generate_programs(0))
    assert format_cmd(prog) == GOLDEN_SEED0
    assert [
        (r.name, r.visibility, r.lo, r.hi) for r in spec.registers
    ] == GOLDEN_SEED0_SPEC
    assert spec.memory == () and spec.inits == ()


def test_generation_is_deterministic():
    a = [(format_cmd(p), s) for p, s in generate_programs(42, count=5)]
    b = [(format_cmd(p), s) for p, s in generate_programs(42, count=5)]
    assert a == b


def test_different_seeds_differ():
    a = format_cmd(next(generate_programs(1))[0])
    b = format_cmd(next(generate_programs(2))[0])
    assert a != b


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_size_and_domain_bounds(seed):
    for prog, spec in generate_programs(seed, count=3):
        assert 1 <= cmd_size(prog) <= 40
        assert spec.domain_size <= 64
        assert len(enumerate_inputs(spec)) == spec.domain_size


def test_explicit_size_bound_respected():
    for prog, _ in generate_programs(7, size_bound=10, count=20):
        assert cmd_size(prog) <= 10


def _walk(c):
    yield c
    if isinstance(c, Seq):
        yield from _walk(c.head)
        yield from _walk(c.tail)
    elif isinstance(c, If):
        yield from _walk(c.then)
        yield from _walk(c.orelse)
    elif isinstance(c, While):
        yield from _walk(c.body)


def test_feature_mask_gates_constructs():
    no_loops = frozenset({"if", "load", "store"})
    for prog, _ in generate_programs(3, features=no_loops, count=10):
        assert not any(isinstance(n, While) for n in _walk(prog))
    no_memory = frozenset({"if", "while"})
    for prog, _ in generate_programs(3, features=no_memory, count=10):
        assert not any(isinstance(n, (Load, Store)) for n in _walk(prog))


def test_unknown_feature_rejected():
    with pytest.raises(ValueError):
        list(generate_programs(0, features=frozenset({"gotos"}), count=1))


def test_loops_are_canonically_counted():
    # every while has the shape i := 0; while (i < k) { ...; i := i + 1; }
    # with k at most 4 and the counter never touched by the body proper
    seen = 0
    for prog, spec in generate_programs(11, count=40):
        nodes = list(_walk(prog))
        for n in nodes:
            if not isinstance(n, While):
                continue
            seen += 1
            assert n.cond.kind == "<"
            counter = n.cond.args[0].name
            assert counter in ("i", "j")
            bound = n.cond.args[1].value
            assert 1 <= bound <= 4
            # the body ends with the increment of the counter
            body = list(_walk(n.body))
            increments = [
                b for b in body
                if isinstance(b, Assign) and b.var == counter
            ]
            assert len(increments) == 1
            inc = increments[0]
            assert format_cmd(inc).strip() == f"{counter} := {counter} + 1;"
        # counters are reserved: no spec input ranges over them
        assert all(r.name not in ("i", "j") for r in spec.registers)
    assert seen >= 3


def test_generated_programs_terminate():
    for prog, spec in generate_programs(5, count=15):
        for inp in enumerate_inputs(spec)[:4]:
            r = run_struct(prog, inp, fuel=10000)
            assert r.final


def test_lowering_preserves_traces():
    for prog, spec in generate_programs(9, count=10):
        g = lower_to_cfg(prog)
        validate_cfg(g)
        for inp in enumerate_inputs(spec)[:4]:
            ra = run_struct(prog, inp)
            rb = run_cfg(g, inp)
            assert ra.trace == rb.trace
            assert ra.final == rb.final
            assert dict(ra.state.mem) == dict(rb.state.mem)


def test_random_partitions_vary_visibility_only():
    _, spec = next(generate_programs(0))
    parts = random_partitions(spec, 1, 8)
    assert len(parts) == 8
    for p in parts:
        assert [r.name for r in p.registers] == [r.name for r in spec.registers]
        assert [(r.lo, r.hi) for r in p.registers] == [
            (r.lo, r.hi) for r in spec.registers
        ]
    visibilities = {
        tuple(r.visibility for r in p.registers) for p in parts
    }
    assert len(visibilities) > 1


def test_suites_fire_their_pass():
    for pass_name, features in sorted(SUITE_FEATURES.items()):
        assert features <= FEATURES
        triples = generate_suite(pass_name, 3, seed=17)
        assert len(triples) == 3
        for prog, spec, language in triples:
            out, _ = apply_pass(pass_name, prog, language)
            if pass_name != "structure":
                assert out != prog


def test_suite_for_unknown_pass_rejected():
    with pytest.raises(PassError):
        generate_suite("peephole", 1, 0)


def test_suite_programs_match_language():
    for prog, spec, language in generate_suite("structure", 2, 0):
        assert language == "cfg"
        validate_cfg(prog)
    for prog, spec, language in generate_suite("dbe", 2, 0):
        assert language == "structured"
        parse_structured(format_cmd(prog))
