from __future__ import annotations

import json

import pytest

from durable_trade.cli import main
from durable_trade.instances import from_json, gen_fig1, to_json


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def fig1_file(tmp_path):
    path = tmp_path / "fig1.json"
    path.write_text(to_json(gen_fig1()))
    return str(path)


def test_gen_round_trips(capsys):
    code, out, _ = run(capsys, "gen", "fig1")
    assert code == 0
    assert from_json(out) == gen_fig1()


def test_gen_to_file(capsys, tmp_path):
    target = tmp_path / "g.json"
    code, out, err = run(capsys, "gen", "greedy", "--d", "2", "--l", "2", "--out", str(target))
    assert code == 0 and out == "" and "wrote" in err
    assert from_json(target.read_text()).n > 0


@pytest.mark.parametrize(
    "argv",
    [
        ["claim32", "--l", "2"],
        ["thm41", "--l", "2"],
        ["pareto", "--n", "6"],
        ["pareto", "--n", "6", "--deviator", "1"],
        ["3dm", "--n", "2", "--triplets", "1,1,1;2,2,2"],
        ["utility-path", "--k", "3"],
        ["random", "--agents", "3", "--items", "4", "--seed", "5"],
    ],
)
def test_gen_families(capsys, argv):
    code, out, _ = run(capsys, "gen", *argv)
    assert code == 0
    from_json(out)


def test_gen_missing_param(capsys):
    code, _, err = run(capsys, "gen", "claim32")
    assert code == 2 and "--l" in err


def test_gen_bad_triplets(capsys):
    code, _, err = run(capsys, "gen", "3dm", "--n", "1", "--triplets", "1,1")
    assert code == 2 and err.startswith("error:")


@pytest.mark.parametrize("algo,size", [("static", 3), ("as", 3), ("greedy", 3), ("exact", 4)])
def test_solve_fig1(capsys, fig1_file, algo, size):
    code, out, err = run(capsys, "solve", "--in", fig1_file, "--algo", algo)
    assert code == 0
    doc = json.loads(out)
    assert doc["size"] == doc["welfare"] == size
    assert doc["optimal"] is True
    assert algo in err


def test_solve_is_deterministic(capsys, fig1_file):
    _, first, _ = run(capsys, "solve", "--in", fig1_file, "--algo", "exact")
    _, second, _ = run(capsys, "solve", "--in", fig1_file, "--algo", "exact")
    assert first == second
    assert json.loads(first)["cycles"] == [["b", "y", "c", "x", "b"], ["a", "x", "c", "z", "a"]]


def test_solve_from_stdin(capsys, monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO(to_json(gen_fig1())))
    code, out, _ = run(capsys, "solve", "--in", "-", "--algo", "static")
    assert code == 0 and json.loads(out)["size"] == 3


def test_solve_limits(capsys, tmp_path):
    path = tmp_path / "g.json"
    run(capsys, "gen", "greedy", "--d", "2", "--l", "2", "--out", str(path))
    code, out, _ = run(capsys, "solve", "--in", str(path), "--algo", "exact", "--max-states", "1")
    assert code == 0 and json.loads(out)["optimal"] is False
    code, out, err = run(capsys, "solve", "--in", str(path), "--algo", "exact", "--max-states", "1", "--strict")
    assert code == 3 and out == "" and "states" in err


def test_solve_dot_steps(capsys, fig1_file, tmp_path):
    out_dir = tmp_path / "steps"
    code, _, _ = run(capsys, "solve", "--in", fig1_file, "--algo", "exact", "--dot-out", str(out_dir))
    assert code == 0
    assert sorted(p.name for p in out_dir.iterdir()) == ["step_000.dot", "step_001.dot", "step_002.dot"]


def test_missing_input(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "--in", str(tmp_path / "nope.json"))
    assert code == 2 and err.startswith("error:")
    code, _, _ = run(capsys, "solve")
    assert code == 2


def test_bad_json_input(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"agents": [{"id": "a", "demand": 3}], "items": []}')
    code, _, err = run(capsys, "solve", "--in", str(path))
    assert code == 2 and "$.agents[0].demand" in err


def test_audit(capsys, fig1_file):
    code, out, _ = run(capsys, "audit", "--in", fig1_file)
    doc = json.loads(out)
    assert code == 0 and doc["max_gain"] <= 0
    assert [r["agent"] for r in doc["reports"]] == ["a", "b", "c"]
    code, out, _ = run(capsys, "audit", "--in", fig1_file, "--agent", "c", "--algo", "static")
    assert code == 0 and json.loads(out)["reports"][0]["misreports_tried"] == 8
    code, _, _ = run(capsys, "audit", "--in", fig1_file, "--agent", "zz")
    assert code == 2
    code, _, _ = run(capsys, "audit", "--in", fig1_file, "--mechanism", "nope")
    assert code == 2


def test_ratio(capsys, fig1_file, tmp_path):
    code, out, _ = run(capsys, "ratio", "--in", fig1_file, "--algo", "static")
    doc = json.loads(out)
    assert code == 0 and doc["ratio"] == "4/3" and doc["display"] == "4/3 = 4/3"
    path = tmp_path / "c.json"
    run(capsys, "gen", "claim32", "--l", "3", "--out", str(path))
    _, out, _ = run(capsys, "ratio", "--in", str(path))
    assert json.loads(out)["display"] == "12/4 = 3"
    code, _, _ = run(capsys, "ratio", "--in", fig1_file, "--algo", "exact")
    assert code == 2
    code, _, _ = run(capsys, "ratio", "--in", fig1_file, "--max-states", "1")
    assert code == 3


def test_ratio_greedy_family(capsys, tmp_path):
    path = tmp_path / "g.json"
    run(capsys, "gen", "greedy", "--d", "3", "--l", "2", "--out", str(path))
    _, out, _ = run(capsys, "ratio", "--in", str(path), "--algo", "greedy")
    assert json.loads(out)["display"] == "10/6 = 5/3"


def test_export_dot(capsys, fig1_file, tmp_path):
    code, out, _ = run(capsys, "export-dot", "--in", fig1_file)
    assert code == 0 and out.count("->") == 7
    target = tmp_path / "g.dot"
    code, out, _ = run(capsys, "export-dot", "--in", fig1_file, "--out", str(target))
    assert code == 0 and target.read_text().startswith("digraph")
