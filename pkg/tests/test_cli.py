"""The command line interface: exit codes and output shapes."""

import json
from pathlib import Path

import pytest

from ctlab.cli import main

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


@pytest.fixture
def leaky(tmp_path):
    return (
        write(tmp_path, "leaky.sct", "x := load[100 + s];\n"),
        write(tmp_path, "leaky.spec", "input s secret 0..1\n"),
    )


@pytest.fixture
def quiet(tmp_path):
    return (
        write(tmp_path, "quiet.sct", "x := 1;\ny := x + 2;\n"),
        write(tmp_path, "quiet.spec", "input s secret 0..1\n"),
    )


def test_run_prints_traces(capsys, quiet):
    prog, spec = quiet
    assert main(["run", prog, "--spec", spec]) == 0
    out = capsys.readouterr().out
    assert "trace" in out
    assert "[., .]" in out


def test_run_structured_output_is_json(capsys, leaky):
    prog, spec = leaky
    assert main(["run", prog, "--spec", spec, "--format", "structured"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data) == 2
    assert data[0]["trace"] == ["addr(100)"]
    assert data[1]["trace"] == ["addr(101)"]


def test_ct_check_exit_codes(capsys, leaky, quiet):
    lp, ls = leaky
    qp, qs = quiet
    assert main(["ct-check", qp, "--spec", qs]) == 0
    assert "ct" in capsys.readouterr().out
    assert main(["ct-check", lp, "--spec", ls]) == 1
    out = capsys.readouterr().out
    assert "not-ct" in out
    assert "addr(100)" in out and "addr(101)" in out


def test_transform_golden_output(capsys, tmp_path):
    prog = write(tmp_path, "fold.sct", "x := 2 + 3;\nstore[100] := x;\n")
    assert main(["transform", prog, "--pass", "const-fold"]) == 0
    assert capsys.readouterr().out == "x := 5;\nstore[100] := x;\n"


def test_transform_structured_output(capsys, tmp_path):
    prog = write(tmp_path, "fold.sct", "x := 2 + 3;\n")
    assert main(
        ["transform", prog, "--pass", "const-fold", "--format", "structured"]
    ) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["language"] == "structured"
    assert data["program"] == "x := 5;\n"


def test_transform_cfg_pipeline(capsys):
    prog = str(PROGRAMS / "empty-branch-secret.cfg")
    assert main(["transform", prog, "--pass", "empty-branch-coalesce"]) == 0
    out = capsys.readouterr().out
    assert "br" not in out
    assert "nop" in out


def test_transparency_exit_codes(capsys, tmp_path):
    prog = write(
        tmp_path, "coalesce.sct",
        "if (s == 1) { r := 1; } else { r := 1; }\n",
    )
    spec = write(tmp_path, "s.spec", "input s secret 0..1\n")
    assert main(
        ["transparency", prog, "--spec", spec, "--pass", "branch-coalesce"]
    ) == 1
    out = capsys.readouterr().out
    assert "reflection" in out and "fails" in out

    ok = write(tmp_path, "fold.sct", "x := 2 + 3;\n")
    assert main(
        ["transparency", ok, "--spec", spec, "--pass", "const-fold"]
    ) == 0
    assert "holds" in capsys.readouterr().out


def test_simcheck_verified_and_injective(capsys, tmp_path):
    prog = write(tmp_path, "fold.sct", "x := 2 + 3;\nstore[100 + x] := x;\n")
    spec = write(tmp_path, "s.spec", "input s secret 0..1\n")
    assert main(["simcheck", prog, "--spec", spec, "--pass", "const-fold"]) == 0
    out = capsys.readouterr().out
    assert "verified" in out
    assert "no collision" in out


def test_simcheck_noninjective_pass_fails(capsys, tmp_path):
    prog = write(
        tmp_path, "arms.sct", "if (s == 1) { r := 1; } else { r := 1; }\n"
    )
    spec = write(tmp_path, "s.spec", "input s secret 0..1\n")
    rc = main(["simcheck", prog, "--spec", spec, "--pass", "branch-coalesce"])
    assert rc == 1
    assert "collision" in capsys.readouterr().out


def test_simcheck_inverse_if_convert_is_a_usage_error(capsys, tmp_path):
    prog = write(tmp_path, "mux.sct", "r := mux(d == 1, 3, 5);\n")
    spec = write(tmp_path, "d.spec", "input d secret 0..3\n")
    rc = main(["simcheck", prog, "--spec", spec, "--pass", "inv-if-convert"])
    assert rc == 2


def test_corpus_text_output(capsys):
    assert main(["corpus", "--count", "2"]) == 0
    out = capsys.readouterr().out
    assert "clangover" in out
    assert "Branch Coalescing" in out
    assert "✗" in out and "✓" in out


def test_corpus_structured_output(capsys):
    assert main(["corpus", "--count", "2", "--format", "structured"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["entries"]) == 13
    assert len(data["matrix"]) == 10


def test_corpus_report_dir(capsys, tmp_path):
    outdir = tmp_path / "report"
    assert main(["corpus", "--count", "2", "--report-dir", str(outdir)]) == 0
    assert (outdir / "matrix.csv").exists()
    assert (outdir / "entries.csv").exists()
    assert (outdir / "matrix.png").exists()


def test_usage_errors_exit_two(capsys, tmp_path):
    bad_ext = write(tmp_path, "prog.txt", "x := 1;\n")
    spec = write(tmp_path, "s.spec", "input s secret 0..1\n")
    assert main(["ct-check", bad_ext, "--spec", spec]) == 2

    syntax = write(tmp_path, "broken.sct", "x := ;\n")
    assert main(["ct-check", syntax, "--spec", spec]) == 2

    missing = str(tmp_path / "absent.sct")
    assert main(["ct-check", missing, "--spec", spec]) == 2

    prog = write(tmp_path, "ok.sct", "x := 1;\n")
    bad_spec = write(tmp_path, "wide.spec", "input x public 0..9999\n")
    assert main(["ct-check", prog, "--spec", bad_spec]) == 2

    assert main(["transform", prog, "--pass", "nonsense"]) == 2
    # a structured pass cannot run on a graph program
    cfg = str(PROGRAMS / "empty-branch-secret.cfg")
    assert main(["transform", cfg, "--pass", "const-fold"]) == 2


def test_corpus_matches_shipped_program_files(capsys):
    # the files under programs/ are the same texts the corpus carries, so
    # checking one of them through the CLI must reproduce the entry verdict
    prog = str(PROGRAMS / "clangover.sct")
    spec = str(PROGRAMS / "clangover.spec")
    assert main(["ct-check", prog, "--spec", spec]) == 1
    assert "not-ct" in capsys.readouterr().out
    assert main(
        ["transparency", prog, "--spec", spec, "--pass", "if-convert"]
    ) == 1
