import io
import json
import subprocess
import sys

import pytest

from gradualbench import serialize
from gradualbench.cli import main
from gradualbench.config import curriculum_from_dict, curriculum_to_dict, load_curriculum, text_table
from gradualbench.errors import ConfigError
from gradualbench.mechanics import simulate

from machines import golden_mean_machine

DOC = {"version": 1, "seed": 3, "n_s": 2, "tasks": [
    {"task": "micro_fixed"},
    {"task": "micro_map", "id": "map", "req_reward": 3, "limits": {"per_reward": 6, "hard_factor": 2},
     "params": {"keys": "ab", "responses": "xy"}},
]}


def test_curriculum_round_trip():
    cur = curriculum_from_dict(DOC)
    assert cur.n_s == 2 and cur.seed == 3
    assert [t.id for t in cur.tasks] == ["micro_fixed", "map"]
    assert cur.tasks[1].req_reward == 3 and cur.tasks[1].limits.per_reward == 6
    again = curriculum_from_dict(curriculum_to_dict(cur, ["micro_fixed", "micro_map"]))
    assert again == cur


@pytest.mark.parametrize("doc", [
    [],
    {"version": 2, "tasks": [{"task": "micro_fixed"}]},
    {"version": 1, "tasks": []},
    {"version": 1, "tasks": [{"name": "micro_fixed"}]},
    {"version": 1, "tasks": [{"task": "micro_fixed", "colour": 1}]},
    {"version": 1, "tasks": [{"task": "micro_fixed", "req_reward": 0}]},
    {"version": 1, "tasks": [{"task": "micro_fixed", "limits": {"per": 3}}]},
    {"version": 1, "n_s": 0, "tasks": [{"task": "micro_fixed"}]},
    {"version": 1, "tasks": [{"task": "nope"}]},
])
def test_curriculum_errors(doc):
    with pytest.raises(ConfigError):
        curriculum_from_dict(doc)


def test_load_curriculum_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_curriculum(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_curriculum(bad)


def test_text_table():
    out = text_table([{"a": 1, "b": "xy"}, {"a": 22, "b": None}], ["a", "b"])
    lines = out.splitlines()
    assert lines[0].split() == ["a", "b"] and len(lines) >= 3


# ---------------------------------------------------------------- command line

def _run(argv, capsys):
    rc = main(argv)
    return rc, capsys.readouterr().out


def test_cli_run_oracle(capsys):
    rc, out = _run(["run", "--agent", "oracle", "--format", "structured"], capsys)
    assert rc == 0 and json.loads(out)["total_steps"] == 123


def test_cli_budget_exit_code(tmp_path, capsys):
    out = tmp_path / "partial.json"
    rc = main(["run", "--agent", "random", "--budget-steps", "300", "--format", "structured", "--out", str(out)])
    assert rc == 3
    assert json.loads(out.read_text())["completed"] is False


def test_cli_invalid_input(tmp_path, capsys):
    assert main(["run", "--curriculum", str(tmp_path / "none.json")]) == 2
    assert main(["model", "no_such_task"]) == 2


def test_cli_curriculum_file(tmp_path, capsys):
    path = tmp_path / "cur.json"
    path.write_text(json.dumps(DOC))
    rc, out = _run(["run", "--agent", "oracle", "--curriculum", str(path), "--format", "structured"], capsys)
    assert rc == 0 and json.loads(out)["completed"]


def test_cli_model_export(tmp_path, capsys):
    model = tmp_path / "map.json"
    assert main(["model", "micro_map", "--out", str(model)]) == 0
    t = serialize.loads(model.read_text())
    assert t.n_states == 10
    rc, out = _run(["export", str(model), "--hide-errors", "--hide-switches"], capsys)
    assert rc == 0 and out.startswith("digraph")


def test_cli_analyze(capsys):
    rc, out = _run(["analyze", "--format", "structured"], capsys)
    doc = json.loads(out)
    assert rc == 0 and doc["order_ok"] and len(doc["tasks"]) == 7


def test_cli_analyze_reversed_fails(tmp_path, capsys):
    path = tmp_path / "rev.json"
    path.write_text(json.dumps({"version": 1, "tasks": [{"task": "micro_group"}, {"task": "micro_map"}]}))
    rc, _ = _run(["analyze", "--curriculum", str(path)], capsys)
    assert rc == 1


def test_cli_reconstruct(tmp_path, capsys):
    seq = tmp_path / "gm.txt"
    seq.write_text("\n".join(map(str, simulate(golden_mean_machine(), 50_000, seed=0))))
    rc, out = _run(["reconstruct", str(seq), "--text", "--format", "structured"], capsys)
    assert rc == 0 and serialize.loads(out).n_states == 2


def test_cli_checks(capsys):
    rc, _ = _run(["check-forgetting", "--tasks", "micro_map", "micro_group", "--agent", "oracle"], capsys)
    assert rc in (0, 1)
    rc, out = _run(["check-gradual", "--pretrain", "micro_map", "--probe", "micro_map_adaptive",
                    "--agent", "oracle", "--format", "structured"], capsys)
    assert rc == 1 and not json.loads(out)["passed"]


def test_cli_play(monkeypatch, capsys):
    monkeypatch.setattr(sys, "stdin", io.StringIO("A\n" * 3))
    rc, out = _run(["play", "micro_echo"], capsys)
    assert rc in (0, 1) and out


def test_cli_module_entry():
    res = subprocess.run([sys.executable, "-m", "gradualbench", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "analyze" in res.stdout
