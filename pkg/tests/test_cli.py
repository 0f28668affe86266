import csv
import json
import os

from hsictune.cli import cli


def test_unknown_command_is_usage_error(capsys):
    assert cli(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert cli(["analyze", "--bogus"]) == 1
    err = capsys.readouterr().err
    assert "error" in err and "usage" in err


def test_missing_trials_file_is_runtime_error(capsys):
    assert cli(["analyze", "/nonexistent/trials.jsonl"]) == 2
    assert "error" in capsys.readouterr().err


def test_search_then_analyze_then_report(tmp_path, capsys):
    trials = str(tmp_path / "trials.jsonl")
    out = str(tmp_path / "bundle")
    assert cli(["search", "--objective", "example2", "--n", "400",
                "--seed", "7", "--out", trials]) == 0
    assert cli(["analyze", trials, "--goal", "best", "--percentile", "0.1",
                "--seed", "7", "--out", out]) == 0
    text = capsys.readouterr().out
    assert "group main" in text
    assert os.path.exists(os.path.join(out, "ranking_main.csv"))
    assert os.path.exists(os.path.join(out, "interactions.csv"))
    assert os.path.exists(os.path.join(out, "summary.json"))
    with open(os.path.join(out, "ranking_main.csv")) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["param", "hsic", "se", "n", "m"]
    assert rows[1][0] == "x1"      # dominant input ranks first

    before = open(trials).read()
    assert cli(["report", trials, "--seed", "7", "--out", out]) == 0
    assert open(trials).read() == before     # report never mutates trials
    assert os.path.exists(os.path.join(out, "hist_x1.csv"))


def test_analyze_worst_goal(tmp_path, capsys):
    trials = str(tmp_path / "trials.jsonl")
    assert cli(["search", "--objective", "example2", "--n", "300",
                "--seed", "3", "--out", trials]) == 0
    assert cli(["analyze", trials, "--goal", "worst", "--percentile", "0.1",
                "--seed", "3"]) == 0
    assert "group main" in capsys.readouterr().out


def test_analyze_outputs_are_byte_identical(tmp_path):
    trials = str(tmp_path / "trials.jsonl")
    cli(["search", "--objective", "example2", "--n", "300", "--seed", "5",
         "--out", trials])
    out1, out2 = str(tmp_path / "b1"), str(tmp_path / "b2")
    assert cli(["analyze", trials, "--seed", "5", "--out", out1]) == 0
    assert cli(["analyze", trials, "--seed", "5", "--out", out2]) == 0
    for name in ("summary.json", "ranking_main.csv", "interactions.csv"):
        a = open(os.path.join(out1, name), "rb").read()
        b = open(os.path.join(out2, name), "rb").read()
        assert a == b, name


def test_reduce_emits_curve(tmp_path, capsys):
    trials = str(tmp_path / "trials.jsonl")
    out = str(tmp_path / "bundle")
    cli(["search", "--objective", "three_term", "--n", "300", "--seed", "1",
         "--out", trials])
    assert cli(["reduce", trials, "--param", "x3", "--seed", "1",
                "--out", out]) == 0
    assert "suggested cutoff" in capsys.readouterr().out
    path = os.path.join(out, "reduction_x3.csv")
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["c", "hsic", "se", "n_retained", "is_cutoff"]
    assert len(rows) > 1


def test_optimize_two_step(tmp_path, capsys):
    trials = str(tmp_path / "trials.jsonl")
    result = str(tmp_path / "result.json")
    cli(["search", "--objective", "three_term", "--n", "200", "--seed", "2",
         "--out", trials])
    assert cli(["optimize", trials, "--objective", "three_term",
                "--mode", "acc+speed", "--speed", "x3=minimize",
                "--budget-step1", "8", "--budget-step2", "8", "--init", "6",
                "--seed", "2", "--out", result]) == 0
    text = capsys.readouterr().out
    assert "best error" in text
    payload = json.load(open(result))
    assert payload["n_evaluations"] == 200 + (6 + 8) + (6 + 8)
    assert payload["fixed"]["x3"] == 1


def test_demo_example2_orders_x1_first(tmp_path, capsys):
    out = str(tmp_path / "bundle")
    assert cli(["demo", "example2", "--n", "500", "--seed", "7",
                "--out", out]) == 0
    text = capsys.readouterr().out
    # first ranked row of the main group is x1
    first = next(l for l in text.splitlines() if "x1" in l or "x2" in l)
    assert "x1" in first
    assert os.path.exists(os.path.join(out, "summary.json"))
