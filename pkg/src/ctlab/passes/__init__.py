"""Program transformation passes and a small registry for the CLI.

Passes are plain functions from program to program.  The registry records
which language each pass consumes and produces ("structured" or "cfg") so
pipelines can be checked before anything runs.
"""

from dataclasses import dataclass

from .substitute import (
    PassError,
    annotate_substitutions,
    apply_pairs,
    expr_substitute,
    subst_expr,
)
from .deadcode import (
    dead_assignment_eliminate,
    dead_branch_eliminate,
    dead_load_eliminate,
    dead_store_eliminate,
    liveness_analyze,
)
from .unspill import check_spill_form, slot_var, unspill
from .branchless import (
    branch_coalesce,
    cfg_empty_branch_coalesce,
    if_convert,
    inverse_if_convert,
)
from .regions import (
    IrreducibleError,
    annotate_regions,
    label_translation,
    structure_cfg,
)
from .rotate import detect_loops, loop_rotate, rotate_loop


@dataclass(frozen=True)
class PassInfo:
    name: str
    source_language: str   # "structured" or "cfg"
    target_language: str
    fn: object
    summary: str


def _const_fold(c):
    return expr_substitute(annotate_substitutions(c, "const-fold"))


def _untile(c):
    return expr_substitute(annotate_substitutions(c, "untile"))


def _unspill(c):
    prog, _slots = unspill(c)
    return prog


def _dae(c):
    return dead_assignment_eliminate(liveness_analyze(c))


def _dead_load(c):
    return dead_load_eliminate(liveness_analyze(c))


PASSES = {
    p.name: p
    for p in (
        PassInfo("const-fold", "structured", "structured", _const_fold,
                 "replace constant subexpressions by their values"),
        PassInfo("untile", "structured", "structured", _untile,
                 "inline single-use address arithmetic into the next use"),
        PassInfo("dbe", "structured", "structured", dead_branch_eliminate,
                 "collapse conditionals whose condition is a boolean literal"),
        PassInfo("dae", "structured", "structured", _dae,
                 "drop assignments to registers that are dead afterwards"),
        PassInfo("unspill", "structured", "structured", _unspill,
                 "turn stack-slot loads and stores into register moves"),
        PassInfo("structure", "cfg", "structured", structure_cfg,
                 "fold a reducible graph into loops and conditionals"),
        PassInfo("loop-rotate", "cfg", "cfg", loop_rotate,
                 "peel a copy of each loop header above the loop"),
        PassInfo("if-convert", "structured", "structured", if_convert,
                 "replace two-armed assignments by a mux expression"),
        PassInfo("inv-if-convert", "structured", "structured",
                 inverse_if_convert,
                 "expand mux assignments back into conditionals"),
        PassInfo("branch-coalesce", "structured", "structured",
                 branch_coalesce,
                 "drop conditionals whose arms are identical"),
        PassInfo("empty-branch-coalesce", "cfg", "cfg",
                 cfg_empty_branch_coalesce,
                 "turn branches with equal successors into skips"),
        PassInfo("dead-load-elim", "structured", "structured", _dead_load,
                 "drop loads into registers that are dead afterwards"),
        PassInfo("dead-store-elim", "structured", "structured",
                 dead_store_eliminate,
                 "drop stores that write back a freshly loaded value"),
    )
}


def parse_pipeline(text: str) -> "list[str]":
    """Split a comma-separated pass list and validate the names."""
    names = [p.strip() for p in text.split(",") if p.strip()]
    if not names:
        raise PassError("empty pass pipeline")
    for n in names:
        if n not in PASSES:
            raise PassError(
                f"unknown pass {n!r}; known: {', '.join(sorted(PASSES))}"
            )
    return names


def apply_pass(name: str, program, language: str):
    """Run one pass; returns (program, language of the result)."""
    info = PASSES[name]
    if language != info.source_language:
        raise PassError(
            f"pass {name} expects a {info.source_language} program, "
            f"got {language}"
        )
    return info.fn(program), info.target_language


def apply_pipeline(names, program, language: str):
    """Run passes left to right, threading the language between them."""
    if isinstance(names, str):
        names = parse_pipeline(names)
    for n in names:
        program, language = apply_pass(n, program, language)
    return program, language
