"""Rendering check results as text lines, JSON records, and corpus files.

Every checker result has two faces: a line-oriented text report for the
terminal and a flat record of plain values for machine consumption.  The
corpus report directory additionally gets CSV tables and a rendered matrix
figure.
"""

from __future__ import annotations

import csv
import json
import os

from .ct import CT, CtVerdict, NOT_CT, TransparencyReport
from .inputs import ConcreteInput
from .lang import format_observation, format_trace
from .simulation import InjectivityReport, SimulationReport


def _input_record(inp: ConcreteInput):
    return {"regs": [[k, v] for k, v in inp.regs],
            "mem": [[a, v] for a, v in inp.mem]}


def format_input(inp: ConcreteInput) -> str:
    regs = ", ".join(f"{k}={v}" for k, v in inp.regs)
    mem = ", ".join(f"[{a}]={v}" for a, v in inp.mem)
    parts = [p for p in (regs, mem) if p]
    return "; ".join(parts) if parts else "(empty)"


# ---------------------------------------------------------------------------
# Constant-time verdicts

def verdict_lines(v: CtVerdict) -> "list[str]":
    out = [f"verdict: {v.status}",
           f"inputs: {v.inputs_total} in {v.groups_total} related groups"]
    if v.pairs_undecided:
        out.append(f"undecided pairs: {v.pairs_undecided} (fuel {v.fuel})")
    w = v.witness
    if w is not None:
        out.append(f"witness: inputs #{w.index_a} and #{w.index_b} "
                   f"diverge at step {w.step}")
        out.append(f"  input #{w.index_a}: {format_input(w.input_a)}")
        out.append(f"  input #{w.index_b}: {format_input(w.input_b)}")
        out.append(f"  observations: {format_observation(w.obs_a)} vs "
                   f"{format_observation(w.obs_b)}")
    return out


def verdict_record(v: CtVerdict) -> dict:
    rec = {"verdict": v.status,
           "inputs": v.inputs_total,
           "groups": v.groups_total,
           "undecided_pairs": v.pairs_undecided,
           "fuel": v.fuel,
           "witness": None}
    w = v.witness
    if w is not None:
        rec["witness"] = {
            "index_a": w.index_a,
            "index_b": w.index_b,
            "input_a": _input_record(w.input_a),
            "input_b": _input_record(w.input_b),
            "step": w.step,
            "obs_a": format_observation(w.obs_a),
            "obs_b": format_observation(w.obs_b),
        }
    return rec


# ---------------------------------------------------------------------------
# Transparency reports

def transparency_lines(r: TransparencyReport) -> "list[str]":
    name = f" under {r.pass_name}" if r.pass_name else ""
    out = [f"source{name}: {r.source.status}",
           f"target{name}: {r.target.status}",
           f"reflection: {r.reflection}",
           f"preservation: {r.preservation}",
           f"transparent: {r.transparent}"]
    if r.reflection == "fails" and r.source.witness is not None:
        w = r.source.witness
        out.append(f"  source leak: {format_observation(w.obs_a)} vs "
                   f"{format_observation(w.obs_b)} at step {w.step}")
    if r.preservation == "fails" and r.target.witness is not None:
        w = r.target.witness
        out.append(f"  introduced leak: {format_observation(w.obs_a)} vs "
                   f"{format_observation(w.obs_b)} at step {w.step}")
    if r.simulation is not None:
        out.extend(simulation_lines(r.simulation))
    if r.injectivity is not None:
        out.append(str(r.injectivity))
    return out


def transparency_record(r: TransparencyReport) -> dict:
    rec = {"pass": r.pass_name,
           "source": verdict_record(r.source),
           "target": verdict_record(r.target),
           "reflection": r.reflection,
           "preservation": r.preservation,
           "transparent": r.transparent}
    if r.simulation is not None:
        rec["simulation"] = simulation_record(r.simulation)
    if r.injectivity is not None:
        rec["injectivity"] = {"injective": r.injectivity.injective,
                              "samples": r.injectivity.samples}
    return rec


# ---------------------------------------------------------------------------
# Simulation reports

def simulation_lines(r: SimulationReport) -> "list[str]":
    out = [f"certificate {r.certificate}: {r.status} "
           f"({r.inputs_checked} inputs, {r.rounds} rounds)"]
    if r.violation is not None:
        v = r.violation
        out.append(f"  round {v.round} on input #{v.input_index}: "
                   f"{v.kind}: {v.message}")
        if v.segment:
            out.append(f"  source segment: {format_trace(v.segment)}")
        if v.target_obs is not None:
            out.append(f"  target observation: "
                       f"{format_observation(v.target_obs)}")
    out.append(f"  transformer injective on observed rounds: "
               f"{'yes' if r.injective else 'no'}")
    for c in r.collisions[:3]:
        out.append(f"  collision: [{format_trace(c.segment_a)}] vs "
                   f"[{format_trace(c.segment_b)}] -> "
                   f"{format_observation(c.target_obs)}")
    if r.collision_count > 3:
        out.append(f"  ({r.collision_count} colliding rounds total)")
    return out


def simulation_record(r: SimulationReport) -> dict:
    rec = {"certificate": r.certificate,
           "status": r.status,
           "inputs_checked": r.inputs_checked,
           "rounds": r.rounds,
           "injective": r.injective,
           "collisions": r.collision_count,
           "violation": None}
    if r.violation is not None:
        v = r.violation
        rec["violation"] = {"input_index": v.input_index,
                            "round": v.round,
                            "kind": v.kind,
                            "message": v.message}
    return rec


def injectivity_lines(r: InjectivityReport) -> "list[str]":
    return [str(r)]


# ---------------------------------------------------------------------------
# Corpus output

CHECK = "✓"
CROSS = "✗"


def entry_lines(results) -> "list[str]":
    out = []
    for res in results:
        mark = "ok" if res.matches else "MISMATCH"
        out.append(f"{res.entry.name:28s} {res.entry.target_pass:34s} "
                   f"expected {res.entry.expected:17s} "
                   f"derived {res.derived:17s} {mark}")
    return out


def matrix_lines(rows) -> "list[str]":
    width = max(len(r.row.name) for r in rows)
    out = [f"{'pass':{width}s}  reflection  preservation"]
    for r in rows:
        re_mark = CHECK if r.reflects else CROSS
        pr_mark = CHECK if r.preserves else CROSS
        note = "" if r.matches else "   <- expectation mismatch"
        out.append(f"{r.row.name:{width}s}      {re_mark}           "
                   f"{pr_mark}{note}")
    return out


def corpus_record(entry_results, matrix_rows) -> dict:
    return {
        "entries": [
            {"name": res.entry.name,
             "language": res.entry.language,
             "pass": res.entry.target_pass,
             "expected": res.entry.expected,
             "derived": res.derived,
             "matches": res.matches,
             "report": transparency_record(res.report)}
            for res in entry_results
        ],
        "matrix": [
            {"pass": r.row.name,
             "reflects": r.reflects,
             "preserves": r.preserves,
             "programs_checked": r.programs_checked,
             "matches": r.matches}
            for r in matrix_rows
        ],
    }


def write_report_dir(entry_results, matrix_rows, outdir: str) -> "list[str]":
    """Write matrix.csv, entries.csv, and matrix.png; returns the paths."""
    os.makedirs(outdir, exist_ok=True)
    matrix_path = os.path.join(outdir, "matrix.csv")
    with open(matrix_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pass", "reflection", "preservation",
                    "programs_checked", "matches_expected"])
        for r in matrix_rows:
            w.writerow([r.row.name,
                        "yes" if r.reflects else "no",
                        "yes" if r.preserves else "no",
                        r.programs_checked,
                        "yes" if r.matches else "no"])
    entries_path = os.path.join(outdir, "entries.csv")
    with open(entries_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "language", "pass", "expected", "derived",
                    "source_verdict", "target_verdict", "matches_expected"])
        for res in entry_results:
            w.writerow([res.entry.name, res.entry.language,
                        res.entry.target_pass, res.entry.expected,
                        res.derived, res.report.source.status,
                        res.report.target.status,
                        "yes" if res.matches else "no"])
    png_path = os.path.join(outdir, "matrix.png")
    _write_matrix_png(matrix_rows, png_path)
    return [matrix_path, entries_path, png_path]


def _write_matrix_png(matrix_rows, path: str):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    good = "#c9e7c9"
    bad = "#f3c4c4"
    cells = []
    colors = []
    for r in matrix_rows:
        cells.append([CHECK if r.reflects else CROSS,
                      CHECK if r.preserves else CROSS])
        colors.append([good if r.reflects else bad,
                       good if r.preserves else bad])
    fig, ax = plt.subplots(figsize=(6, 0.4 * len(matrix_rows) + 1))
    ax.axis("off")
    table = ax.table(
        cellText=cells,
        cellColours=colors,
        rowLabels=[r.row.name for r in matrix_rows],
        colLabels=["reflection", "preservation"],
        loc="center",
        cellLoc="center")
    table.scale(0.6, 1.4)
    ax.set_title("Constant-time transparency by pass")
    fig.tight_layout()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def dump_json(record: dict) -> str:
    return json.dumps(record, indent=2, sort_keys=True)
