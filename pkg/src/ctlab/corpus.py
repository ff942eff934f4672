"""The built-in counterexample corpus and the pass transparency matrix.

Each entry is a small program in one of the two languages, an input spec,
a target pass (or comma pipeline), and an expected classification.  The
expectations are never trusted: the harness re-derives every one by
running the constant-time checker on the source and transformed program.

Entry notes record how the original machine-level snippets were translated
into the toy languages, since none of the source ISAs exist here.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ct import FAILS, HOLDS, TransparencyReport, check_transparency, DEFAULT_FUEL
from .generate import generate_suite
from .parsing import parse_cfg, parse_spec, parse_structured

REFLECTION_FAIL = "reflection-fail"
PRESERVATION_FAIL = "preservation-fail"
TRANSPARENT = "transparent"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    language: str       # structured | cfg
    program_text: str
    spec_text: str
    target_pass: str    # pass name, or comma pipeline
    expected: str
    note: str

    def program(self):
        if self.language == "cfg":
            return parse_cfg(self.program_text)
        return parse_structured(self.program_text)

    def spec(self):
        return parse_spec(self.spec_text)


ENTRIES = (
    CorpusEntry(
        name="branch-coalesce-arms",
        language="structured",
        program_text="if (s == 1) { r := 1; } else { r := 1; }\n",
        spec_text="input s secret 0..1\n",
        target_pass="branch-coalesce",
        expected=REFLECTION_FAIL,
        note="A conditional with literally identical arms branching on a "
             "secret; coalescing keeps one arm and drops the branch "
             "observation.",
    ),
    CorpusEntry(
        name="clangover",
        language="structured",
        program_text=(
            "j := 0;\n"
            "while (j < 8) {\n"
            "    bit := load[100 + j];\n"
            "    if (bit == 1) { coef := 1665; } else { coef := 0; }\n"
            "    store[200 + 2 * j] := coef;\n"
            "    j := j + 1;\n"
            "}\n"
        ),
        spec_text="mem 100 secret 0..1\nmem 101 secret 0..1\n",
        target_pass="if-convert",
        expected=REFLECTION_FAIL,
        note="The message-to-polynomial loop: eight iterations, a branch on "
             "the current secret bit choosing coefficient 0 or 1665, and a "
             "two-byte-stride store.  The expression language has no shift "
             "or mask operators, so the byte is modeled as one bit per "
             "memory cell at 100..107; two bits vary (the rest default to "
             "0) to keep the domain exactly enumerable.",
    ),
    CorpusEntry(
        name="cmov-to-branch",
        language="structured",
        program_text="r := mux(d == 1, 3, 5);\n",
        spec_text="input d secret 0..3\n",
        target_pass="inv-if-convert",
        expected=PRESERVATION_FAIL,
        note="A conditional move selecting 3 or 5 on a secret comparison "
             "with 1; rewriting it back into a branch introduces the leak.",
    ),
    CorpusEntry(
        name="const-fold-affine",
        language="structured",
        program_text=(
            "x := s * (2 + 3);\n"
            "y := load[100 + 2 * 2];\n"
            "store[96 + 0 * 8] := x;\n"
        ),
        spec_text="input s secret 0..3\nmem 104 init 7\n",
        target_pass="const-fold",
        expected=TRANSPARENT,
        note="Secret arithmetic under foldable constant subexpressions; "
             "every address is constant, so both sides are constant-time.",
    ),
    CorpusEntry(
        name="dae-shadowed",
        language="structured",
        program_text=(
            "t := s + 1;\n"
            "t := 2;\n"
            "store[100 + t] := t;\n"
        ),
        spec_text="input s secret 0..3\n",
        target_pass="dae",
        expected=TRANSPARENT,
        note="The first write to t is dead (overwritten before any read); "
             "assignments observe nothing, so removing one changes no "
             "verdict.",
    ),
    CorpusEntry(
        name="dbe-literal-guard",
        language="structured",
        program_text=(
            "if (true) { r := load[100]; } else { r := load[100 + s]; }\n"
            "if (false) { store[100 + s] := r; } else { store[101] := r; }\n"
        ),
        spec_text="input s secret 0..3\n",
        target_pass="dbe",
        expected=TRANSPARENT,
        note="Literal guards hide secret-indexed accesses in arms that "
             "never run; both sides are constant-time since the dead arms "
             "produce no observations.",
    ),
    CorpusEntry(
        name="dead-load-secret-index",
        language="structured",
        program_text=(
            "dead := load[100 + secret_bit];\n"
            "dead := 0;\n"
            "r := 1;\n"
        ),
        spec_text=(
            "input secret_bit secret 0..1\n"
            "mem 100 init 100\n"
            "mem 101 init 101\n"
        ),
        target_pass="dead-load-elim",
        expected=REFLECTION_FAIL,
        note="A two-cell table indexed by a secret bit, loaded into a "
             "register that is never used, then a constant result.  "
             "Registers count as live at exit here, so the shadowing "
             "write makes the load's destination dead, as block scoping "
             "does in the original.",
    ),
    CorpusEntry(
        name="empty-branch-secret",
        language="cfg",
        program_text=(
            "cfg\n"
            "entry b0\n"
            "exit end\n"
            "b0: br s == 1 ? b1 : b1\n"
            "b1: r := 1 -> end\n"
        ),
        spec_text="input s secret 0..1\n",
        target_pass="empty-branch-coalesce",
        expected=REFLECTION_FAIL,
        note="Compare a secret with 1 and jump to the fall-through address "
             "either way: a branch whose two successors are the same "
             "label.  Coalescing turns it into an unconditional jump.",
    ),
    CorpusEntry(
        name="rotate-bounded-loop",
        language="cfg",
        program_text=(
            "cfg\n"
            "entry n0\n"
            "exit end\n"
            "n0: i := 0 -> n1\n"
            "n1: br i < k ? n2 : n4\n"
            "n2: store[200 + i] := x -> n3\n"
            "n3: i := i + 1 -> n1\n"
            "n4: r := 1 -> end\n"
        ),
        spec_text="input k public 0..3\n",
        target_pass="loop-rotate",
        expected=TRANSPARENT,
        note="A counted loop with a public bound; rotation duplicates the "
             "header but the branch leaks only public data either way.",
    ),
    CorpusEntry(
        name="self-store-roundtrip",
        language="structured",
        program_text=(
            "x := load[100 + s];\n"
            "store[100 + s] := x;\n"
            "x := 0;\n"
        ),
        spec_text="input s secret 0..1\n",
        target_pass="dead-store-elim,dead-load-elim",
        expected=REFLECTION_FAIL,
        note="Store a just-loaded value back to the same secret-indexed "
             "address.  Dead-store elimination removes the store, which "
             "leaves the load dead, and the follow-up dead-load pass "
             "removes it too; the result has no memory access at all.",
    ),
    CorpusEntry(
        name="structure-diamond-loop",
        language="cfg",
        program_text=(
            "cfg\n"
            "entry n0\n"
            "exit end\n"
            "n0: i := 0 -> n1\n"
            "n1: br i < 3 ? n2 : n4\n"
            "n2: store[100 + i] := x -> n3\n"
            "n3: i := i + 1 -> n1\n"
            "n4: br x < 2 ? n5 : n6\n"
            "n5: r := 1 -> end\n"
            "n6: r := 2 -> end\n"
        ),
        spec_text="input x secret 0..3\n",
        target_pass="structure",
        expected=TRANSPARENT,
        note="A counted loop followed by a two-armed conditional on a "
             "secret; both the graph and its recovered while-program leak "
             "the same branch, so both verdicts agree (here: not "
             "constant-time).",
    ),
    CorpusEntry(
        name="unspill-slots",
        language="structured",
        program_text=(
            "store[sp + 4] := a;\n"
            "b := load[sp + 4];\n"
            "store[sp + 8] := b;\n"
            "c := load[sp + 8];\n"
            "r := c + a;\n"
        ),
        spec_text="input a secret 0..3\n",
        target_pass="unspill",
        expected=TRANSPARENT,
        note="Spill-and-reload traffic at fixed stack offsets; the stack "
             "pointer is never an input, so slot addresses are the fixed "
             "run constants the rewrite assumes.",
    ),
    CorpusEntry(
        name="untile-scaled-index",
        language="structured",
        program_text=(
            "x := y * 8;\n"
            "t := load[x + 100];\n"
            "r := t + x;\n"
        ),
        spec_text="input y secret 0..1\n",
        target_pass="untile",
        expected=TRANSPARENT,
        note="A scaled index feeding the next load; folding the definition "
             "into the address leaves the leaked address values unchanged, "
             "so both sides stay not constant-time on a secret index.",
    ),
)


def entry_by_name(name: str) -> CorpusEntry:
    for e in ENTRIES:
        if e.name == name:
            return e
    raise KeyError(f"no corpus entry named {name!r}")


def classify(report: TransparencyReport) -> str:
    if report.reflection == FAILS:
        return REFLECTION_FAIL
    if report.preservation == FAILS:
        return PRESERVATION_FAIL
    if report.reflection == HOLDS and report.preservation == HOLDS:
        return TRANSPARENT
    return UNDETERMINED


@dataclass(frozen=True)
class EntryResult:
    entry: CorpusEntry
    report: TransparencyReport
    derived: str

    @property
    def matches(self) -> bool:
        return self.derived == self.entry.expected


def run_entry(entry: CorpusEntry, fuel: int = DEFAULT_FUEL) -> EntryResult:
    report = check_transparency(entry.program(), entry.target_pass,
                                entry.spec(), fuel)
    return EntryResult(entry, report, classify(report))


def run_entries(fuel: int = DEFAULT_FUEL):
    return [run_entry(e, fuel) for e in sorted(ENTRIES, key=lambda e: e.name)]


# ---------------------------------------------------------------------------
# The pass matrix

@dataclass(frozen=True)
class MatrixRow:
    name: str
    passes: "tuple[str, ...]"
    # Expected cells; re-derived by derive_matrix, never trusted.
    reflects: bool
    preserves: bool


MATRIX_ROWS = (
    MatrixRow("Branch Coalescing",
              ("branch-coalesce", "empty-branch-coalesce"), False, True),
    MatrixRow("Constant Folding", ("const-fold",), True, True),
    MatrixRow("Dead Assignment Elimination", ("dae",), True, True),
    MatrixRow("Dead Branch Elimination", ("dbe",), True, True),
    MatrixRow("If Conversion", ("if-convert",), False, True),
    MatrixRow("Loop Rotation", ("loop-rotate",), True, True),
    MatrixRow("Memory Access Elimination",
              ("dead-load-elim", "dead-store-elim"), False, True),
    MatrixRow("Structural Analysis", ("structure",), True, True),
    MatrixRow("Unspilling", ("unspill",), True, True),
    MatrixRow("Untiling", ("untile",), True, True),
)


@dataclass(frozen=True)
class RowResult:
    row: MatrixRow
    reflects: bool
    preserves: bool
    programs_checked: int
    undetermined: int

    @property
    def matches(self) -> bool:
        return (self.reflects, self.preserves) == (
            self.row.reflects, self.row.preserves)


def _entry_row_passes(entry: CorpusEntry) -> "tuple[str, ...]":
    return tuple(p.strip() for p in entry.target_pass.split(","))


def derive_matrix(fuel: int = DEFAULT_FUEL, count: int = 25, seed: int = 0,
                  entry_results=None):
    """Re-derive every matrix cell from corpus entries and random suites.

    A cell is a check mark unless some checked program showed that
    direction failing.  Corpus counterexamples provide the cross marks;
    the randomized suites back the check marks with evidence.
    """
    if entry_results is None:
        entry_results = run_entries(fuel)
    rows = []
    for row in MATRIX_ROWS:
        reflects = True
        preserves = True
        checked = 0
        undetermined = 0
        for res in entry_results:
            if not set(_entry_row_passes(res.entry)) & set(row.passes):
                continue
            checked += 1
            if res.report.reflection == FAILS:
                reflects = False
            if res.report.preservation == FAILS:
                preserves = False
            if res.derived == UNDETERMINED:
                undetermined += 1
        for pass_name in row.passes:
            for prog, spec, _lang in generate_suite(pass_name, count, seed):
                checked += 1
                report = check_transparency(prog, pass_name, spec, fuel)
                if report.reflection == FAILS:
                    reflects = False
                if report.preservation == FAILS:
                    preserves = False
                if classify(report) == UNDETERMINED:
                    undetermined += 1
        rows.append(RowResult(row, reflects, preserves, checked, undetermined))
    return rows
