"""Command line front end.

Subcommands mirror the library: run a program, check it for constant
time, transform it, compare verdicts across a pass, check a simulation
certificate, and reproduce the built-in corpus matrix.  Programs are
loaded by extension: ``.sct`` structured, ``.cfg`` graph, ``.spec``
input specs.

Exit codes: 0 on success, 1 when a check fails or a corpus expectation
mismatches, 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import sys

from . import report
from .cfg import CfgProgram, format_cfg
from .ct import (
    CT,
    DEFAULT_FUEL,
    HOLDS,
    check_ct,
    check_transparency,
    semantics_for,
)
from .corpus import derive_matrix, run_entries
from .inputs import SpecError, enumerate_inputs
from .lang import LangError, format_trace
from .parsing import ParseError, parse_cfg, parse_spec, parse_structured
from .passes import PassError, apply_pipeline
from .simulation import (
    VERIFIED,
    build_certificate,
    check_injectivity,
    check_lockstep,
    check_relaxed,
)
from .structured import format_cmd


class UsageError(Exception):
    pass


def load_program(path: str):
    """Read a program file; the extension picks the language."""
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".sct"):
        return parse_structured(text), "structured"
    if path.endswith(".cfg"):
        return parse_cfg(text), "cfg"
    raise UsageError(f"cannot tell the language of {path!r}; "
                     "use .sct for structured programs and .cfg for graphs")


def load_spec(path: str):
    with open(path) as fh:
        return parse_spec(fh.read())


def format_program(program, language: str) -> str:
    if language == "cfg":
        return format_cfg(program)
    return format_cmd(program)


def _emit(lines):
    for line in lines:
        print(line)


def _state_record(state) -> dict:
    return {"regs": [[k, state.regs[k]] for k in sorted(state.regs)],
            "mem": [[a, state.mem[a]] for a in sorted(state.mem)]}


def cmd_run(args) -> int:
    program, language = load_program(args.program)
    spec = load_spec(args.spec)
    sem = semantics_for(program, language)
    records = []
    for inp in enumerate_inputs(spec):
        result = sem.run(inp, args.fuel)
        records.append((inp, result))
    if args.format == "structured":
        print(report.dump_json([
            {"input": report._input_record(inp),
             "trace": [report.format_observation(o) for o in res.trace],
             "final": res.final,
             "state": _state_record(res.state)}
            for inp, res in records]))
        return 0
    for inp, res in records:
        print(f"input: {report.format_input(inp)}")
        print(f"  trace: {format_trace(res.trace)}")
        status = "final" if res.final else f"cut at fuel {args.fuel}"
        print(f"  {status}; regs: " + ", ".join(
            f"{k}={v}" for k, v in sorted(res.state.regs.items())))
        if res.state.mem:
            print("  mem: " + ", ".join(
                f"[{a}]={v}" for a, v in sorted(res.state.mem.items())))
    return 0


def cmd_ct_check(args) -> int:
    program, language = load_program(args.program)
    spec = load_spec(args.spec)
    verdict = check_ct(semantics_for(program, language), spec, args.fuel)
    if args.format == "structured":
        print(report.dump_json(report.verdict_record(verdict)))
    else:
        _emit(report.verdict_lines(verdict))
    return 0 if verdict.status == CT else 1


def cmd_transform(args) -> int:
    program, language = load_program(args.program)
    out, out_language = apply_pipeline(args.pass_name, program, language)
    if args.format == "structured":
        print(report.dump_json({"language": out_language,
                                "program": format_program(out, out_language)}))
    else:
        print(format_program(out, out_language), end="")
    return 0


def cmd_transparency(args) -> int:
    program, language = load_program(args.program)
    spec = load_spec(args.spec)
    rep = check_transparency(program, args.pass_name, spec, args.fuel)
    if args.format == "structured":
        print(report.dump_json(report.transparency_record(rep)))
    else:
        _emit(report.transparency_lines(rep))
    return 0 if rep.transparent == HOLDS else 1


def cmd_simcheck(args) -> int:
    program, language = load_program(args.program)
    spec = load_spec(args.spec)
    bundle = build_certificate(args.pass_name, program, language)
    checker = check_lockstep if bundle.certificate.lockstep else check_relaxed
    rep = checker(bundle.source_program, bundle.target_program,
                  bundle.certificate, spec, args.fuel)
    inj = check_injectivity(bundle.certificate, rep)
    if args.format == "structured":
        record = report.simulation_record(rep)
        record["injectivity"] = {"injective": inj.injective,
                                 "samples": inj.samples}
        print(report.dump_json(record))
    else:
        _emit(report.simulation_lines(rep))
        _emit(report.injectivity_lines(inj))
    # the certificate only concludes transparency when it verifies and the
    # observation transformer stayed injective on everything observed
    return 0 if rep.status == VERIFIED and inj.injective else 1


def cmd_corpus(args) -> int:
    entry_results = run_entries(args.fuel)
    matrix_rows = derive_matrix(args.fuel, count=args.count, seed=args.seed,
                                entry_results=entry_results)
    ok = all(r.matches for r in entry_results) and \
        all(r.matches for r in matrix_rows)
    if args.format == "structured":
        print(report.dump_json(report.corpus_record(entry_results,
                                                    matrix_rows)))
    else:
        _emit(report.entry_lines(entry_results))
        print()
        _emit(report.matrix_lines(matrix_rows))
    if args.report_dir:
        paths = report.write_report_dir(entry_results, matrix_rows,
                                        args.report_dir)
        if args.format != "structured":
            print()
            for p in paths:
                print(f"wrote {p}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctlab",
        description="Constant-time checking across program transformations")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, program=True, spec=False, pass_flag=False):
        if program:
            p.add_argument("program", help="program file (.sct or .cfg)")
        if spec:
            p.add_argument("--spec", required=True,
                           help="input spec file (.spec)")
        if pass_flag:
            p.add_argument("--pass", dest="pass_name", required=True,
                           help="pass name, or comma-separated pipeline")
        p.add_argument("--fuel", type=int, default=DEFAULT_FUEL,
                       help="step budget per run (default %(default)s)")
        p.add_argument("--format", choices=("text", "structured"),
                       default="text", help="output format")

    p = sub.add_parser("run", help="run a program on every spec input")
    common(p, spec=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("ct-check", help="constant-time verdict for a program")
    common(p, spec=True)
    p.set_defaults(fn=cmd_ct_check)

    p = sub.add_parser("transform", help="apply a pass and print the result")
    common(p, pass_flag=True)
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("transparency",
                       help="compare verdicts before and after a pass")
    common(p, spec=True, pass_flag=True)
    p.set_defaults(fn=cmd_transparency)

    p = sub.add_parser("simcheck",
                       help="check the pass's simulation certificate")
    common(p, spec=True, pass_flag=True)
    p.set_defaults(fn=cmd_simcheck)

    p = sub.add_parser("corpus",
                       help="re-derive the corpus and the pass matrix")
    common(p, program=False)
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the randomized suites")
    p.add_argument("--count", type=int, default=25,
                   help="generated programs per pass in the matrix")
    p.add_argument("--report-dir",
                   help="also write matrix.csv, entries.csv, matrix.png here")
    p.set_defaults(fn=cmd_corpus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, SpecError, UsageError, PassError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, LangError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
