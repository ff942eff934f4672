"""Recovering structured control flow from reducible graphs."""

import pytest
from hypothesis import given, settings, strategies as st

from ctlab.cfg import run_cfg
from ctlab.generate import generate_programs, lower_to_cfg
from ctlab.inputs import enumerate_inputs
from ctlab.parsing import parse_cfg
from ctlab.passes import PassError
from ctlab.passes.regions import (
    CondRegion,
    IrreducibleError,
    LoopRegion,
    annotate_regions,
    label_translation,
    structure_cfg,
)
from ctlab.structured import (
    StructState,
    format_cmd,
    initial_state,
    is_final,
    run_struct,
    step,
)

IRREDUCIBLE = """
cfg
entry a
exit end
a: br x == 1 ? b : c
b: x := x + 1 -> c
c: br x == 2 ? b : end
"""

COUNTED_LOOP = """
cfg
entry n0
exit end
n0: i := 0 -> n1
n1: br i < k ? n2 : n3
n2: i := i + 1 -> n1
n3: r := i -> end
"""


def test_loop_and_cond_regions_found():
    g = parse_cfg(COUNTED_LOOP)
    regions = annotate_regions(g)
    assert isinstance(regions["n1"], LoopRegion)
    assert regions["n1"].body == frozenset({"n1", "n2"})


def test_diamond_becomes_cond_region():
    g = parse_cfg(
        """
        cfg
        entry a
        exit end
        a: br x == 1 ? b : c
        b: y := 1 -> d
        c: y := 2 -> d
        d: r := y -> end
        """
    )
    regions = annotate_regions(g)
    r = regions["a"]
    assert isinstance(r, CondRegion)
    assert r.true_region == frozenset({"b"})
    assert r.false_region == frozenset({"c"})
    assert r.join == "d"


def test_structure_counted_loop():
    c = structure_cfg(parse_cfg(COUNTED_LOOP))
    assert format_cmd(c).split("\n")[0] == "i := 0;"
    assert "while (i < k)" in format_cmd(c)


def test_irreducible_graph_rejected():
    with pytest.raises(IrreducibleError):
        structure_cfg(parse_cfg(IRREDUCIBLE))


def test_nop_nodes_rejected():
    g = parse_cfg("cfg\nentry a\nexit end\na: nop -> end\n")
    with pytest.raises(PassError):
        structure_cfg(g)


def test_body_entry_peels_a_partial_iteration():
    # entering a loop at its body is expressible: the entry prefix is
    # peeled off in front of the while
    g = parse_cfg(
        """
        cfg
        entry b
        exit end
        b: i := i + 1 -> h
        h: br i < 3 ? b : end
        """
    )
    c = structure_cfg(g)
    assert format_cmd(c).strip() == "i := i + 1;\nwhile (i < 3) {\n    i := i + 1;\n}"


def test_rotated_loop_rejected():
    # after rotation the loop region has two entries (the original header
    # and the peeled copy target), which the region scheme cannot express
    from ctlab.passes.rotate import loop_rotate

    g = parse_cfg(COUNTED_LOOP)
    with pytest.raises(IrreducibleError):
        structure_cfg(loop_rotate(g))


def _final_struct_state(prog, inp, fuel=10000):
    r = run_struct(prog, inp, fuel)
    assert r.final
    return r


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_structuring_preserves_traces_on_lowered_programs(seed):
    for prog, spec in generate_programs(seed, count=2):
        g = lower_to_cfg(prog)
        back = structure_cfg(g)
        for inp in enumerate_inputs(spec)[:6]:
            ra = run_cfg(g, inp)
            rb = run_struct(back, inp)
            assert ra.trace == rb.trace
            assert ra.final == rb.final
            if ra.final:
                assert dict(ra.state.mem) == dict(rb.state.mem)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_label_translation_tracks_execution(seed):
    # walking the graph and the translated program together: whenever the
    # graph sits at label l, the structured run must be exactly star(l)
    for prog, spec in generate_programs(seed, count=1):
        g = lower_to_cfg(prog)
        star = label_translation(g)
        inp = enumerate_inputs(spec)[0]
        from ctlab.cfg import initial_state_cfg, is_final_cfg, node_map, step_cfg

        nodes = node_map(g)
        cstate = initial_state_cfg(g, inp)
        sstate = initial_state(star(g.entry), inp)
        for _ in range(300):
            if is_final_cfg(g, cstate):
                break
            assert sstate.code == star(cstate.label)
            obs_c, cstate = step_cfg(g, cstate, nodes)
            obs_s, sstate = step(sstate)
            assert obs_c == obs_s
            assert cstate.regs == sstate.regs
            assert cstate.mem == sstate.mem
        else:
            continue
        assert is_final(sstate)
