import json

import numpy as np
import pytest

from hsictune.harness import (
    Trial,
    TrialFileError,
    load_trials,
    run_random_search,
    space_hash,
    trial_seed,
)
from hsictune.objectives import Example2Objective
from hsictune.space import SearchSpace, continuous_param


def _strip_times(records):
    return [
        {k: v for k, v in r.items() if k != "wall_time_s"} for r in records
    ]


def _read_records(path):
    with open(path) as fh:
        lines = [json.loads(l) for l in fh if l.strip()]
    return lines[0], sorted(lines[1:], key=lambda r: r["i"])


def test_trial_score_status_invariant():
    with pytest.raises(TrialFileError):
        Trial({"x": 0.0}, None, "ok", 0)
    with pytest.raises(TrialFileError):
        Trial({"x": 0.0}, 1.0, "diverged", 0)
    with pytest.raises(TrialFileError):
        Trial({"x": 0.0}, float("nan"), "ok", 0)


def test_trial_seed_is_pure_function_of_inputs():
    seeds = [trial_seed(42, i) for i in range(20)]
    assert seeds == [trial_seed(42, i) for i in range(20)]
    assert len(set(seeds)) == 20
    assert trial_seed(42, 3) != trial_seed(43, 3)


def test_jobs_do_not_change_records(tmp_path):
    obj = Example2Objective()
    p1, p2 = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
    run_random_search(obj.space, obj, 40, jobs=1, master_seed=5, out_path=p1)
    run_random_search(obj.space, obj, 40, jobs=2, master_seed=5, out_path=p2)
    m1, r1 = _read_records(p1)
    m2, r2 = _read_records(p2)
    assert m1["manifest"]["space_hash"] == m2["manifest"]["space_hash"]
    assert _strip_times(r1) == _strip_times(r2)


def test_resume_evaluates_only_missing_indices(tmp_path):
    obj = Example2Objective()
    path = str(tmp_path / "t.jsonl")
    run_random_search(obj.space, obj, 40, master_seed=1, out_path=path)
    with open(path) as fh:
        before = fh.read()
    run_random_search(obj.space, obj, 100, master_seed=1, out_path=path)
    with open(path) as fh:
        after = fh.read()
    assert after.startswith(before)     # append-only
    _, recs = _read_records(path)
    assert [r["i"] for r in recs] == list(range(100))
    # full run from scratch matches the resumed one record-for-record
    fresh = str(tmp_path / "fresh.jsonl")
    run_random_search(obj.space, obj, 100, master_seed=1, out_path=fresh)
    _, recs_fresh = _read_records(fresh)
    assert _strip_times(recs) == _strip_times(recs_fresh)


def test_truncated_trailing_line_recovered_on_resume(tmp_path):
    obj = Example2Objective()
    path = str(tmp_path / "t.jsonl")
    run_random_search(obj.space, obj, 10, master_seed=2, out_path=path)
    with open(path, "a") as fh:
        fh.write('{"i": 10, "config":')      # interrupted mid-write
    run_random_search(obj.space, obj, 12, master_seed=2, out_path=path)
    _, recs = _read_records(path)
    assert [r["i"] for r in recs] == list(range(12))


class _FaultyObjective:
    name = "faulty"

    def __init__(self):
        self.space = SearchSpace((continuous_param("x", 0.0, 1.0),))

    def evaluate(self, config, seed):
        if config["x"] > 0.7:
            raise RuntimeError("synthetic fault")
        return Trial(dict(config), config["x"], "ok", seed)


def test_objective_fault_recorded_not_fatal(tmp_path):
    obj = _FaultyObjective()
    path = str(tmp_path / "t.jsonl")
    trials = run_random_search(obj.space, obj, 50, master_seed=3, out_path=path)
    assert len(trials) == 50
    failed = [t for t in trials if t.status == "failed"]
    assert failed
    assert all("synthetic fault" in t.tags.get("error", "") for t in failed)


def test_load_round_trip(tmp_path):
    obj = Example2Objective()
    path = str(tmp_path / "t.jsonl")
    written = run_random_search(obj.space, obj, 25, master_seed=4, out_path=path)
    manifest, loaded = load_trials(path)
    assert manifest.n_s == 25
    assert manifest.space_hash == space_hash(obj.space)
    assert len(loaded) == 25
    for a, b in zip(written, loaded):
        assert a.config == b.config and a.score == b.score and a.seed == b.seed


def test_load_corrupt_line_names_lineno(tmp_path):
    obj = Example2Objective()
    path = str(tmp_path / "t.jsonl")
    run_random_search(obj.space, obj, 12, master_seed=0, out_path=path)
    with open(path, "a") as fh:
        fh.write("{broken\n")
    with pytest.raises(TrialFileError, match="line 14"):
        load_trials(path)


def test_load_detects_hash_mismatch(tmp_path):
    obj = Example2Objective()
    path = str(tmp_path / "t.jsonl")
    run_random_search(obj.space, obj, 12, master_seed=0, out_path=path)
    with open(path) as fh:
        lines = fh.readlines()
    rec = json.loads(lines[0])
    rec["manifest"]["space"]["params"][0]["hi"] = 4.0
    lines[0] = json.dumps(rec) + "\n"
    with open(path, "w") as fh:
        fh.writelines(lines)
    with pytest.raises(TrialFileError, match="hash"):
        load_trials(path)


def test_env_var_overrides_jobs(tmp_path, monkeypatch):
    obj = Example2Objective()
    path = str(tmp_path / "t.jsonl")
    monkeypatch.setenv("HSIC_TUNE_JOBS", "1")
    trials = run_random_search(obj.space, obj, 8, jobs=4, master_seed=9,
                               out_path=path)
    assert len(trials) == 8
