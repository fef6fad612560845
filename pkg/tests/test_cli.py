import csv
import json
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

from batchtraj.cli import EXIT_INVALID, EXIT_OK, EXIT_PLANNER, main
from batchtraj.scenario_io import ScenarioError, emit_plot_data, load_scenario, parse_scenario, scenario_to_dict
from support import line_scenario, problem

ROOT = Path(__file__).resolve().parents[1]
FREE = ROOT / "scenarios" / "free.json"
CROSSING = ROOT / "scenarios" / "crossing.json"


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def tree(path: Path) -> dict:
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def test_scenario_round_trip():
    sc, raw = load_scenario(FREE)
    again = parse_scenario(scenario_to_dict(sc))
    assert again.footprint.m == 3 and again.q == 50 and again.horizon == 10.0
    np.testing.assert_array_equal(again.footprint.offsets, sc.footprint.offsets)
    assert again.desired == sc.desired and again.start == sc.start


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("robot"),
    lambda d: d["robot"].__setitem__("circle_radius", -1.0),
    lambda d: d["obstacles"].append({"x": 1, "y": 2}),
    lambda d: d["horizon"].__setitem__("steps", 5),
    lambda d: d.__setitem__("extra", 1),
    lambda d: d["desired"].__setitem__("direction", [0.0, 0.0]),
])
def test_schema_rejects(mutate):
    data = json.loads(FREE.read_text())
    mutate(data)
    with pytest.raises(ScenarioError):
        parse_scenario(data)


def test_invalid_json_exits_2_without_output(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "out"
    assert main(["plan", "--scenario", str(bad), "--out", str(out)]) == EXIT_INVALID
    assert not out.exists()
    assert main(["plan", "--scenario", str(tmp_path / "missing.json"), "--out", str(out)]) == EXIT_INVALID
    assert not out.exists()
    schema_bad = tmp_path / "schema.json"
    schema_bad.write_text(json.dumps({"robot": {}}))
    assert main(["mpc", "--scenario", str(schema_bad), "--out", str(out)]) == EXIT_INVALID
    assert not out.exists()


def test_bad_flags_exit_2(tmp_path):
    out = tmp_path / "out"
    assert main(["plan", "--scenario", str(FREE), "--out", str(out), "--rho", "-1"]) == EXIT_INVALID
    assert main(["plan", "--scenario", str(FREE), "--out", str(out), "--planner", "rrt"]) == EXIT_INVALID
    assert main(["bench", "--out", str(out), "--benchmarks", "nope"]) == EXIT_INVALID
    assert main([]) == EXIT_INVALID
    assert main(["--help"]) == EXIT_OK


def test_plan_obstacle_free(tmp_path):
    out = tmp_path / "plan"
    assert main(["plan", "--scenario", str(FREE), "--out", str(out), "--batch-size", "8", "--seed", "3"]) == EXIT_OK
    rows = read_csv(out / "trajectory.csv")
    assert rows[0] == ["t", "x", "y", "psi", "vx", "vy", "ax", "ay", "psid", "psidd"]
    assert len(rows) == 1 + 50
    first = [float(v) for v in rows[1]]
    sc, _ = load_scenario(FREE)
    s = sc.start
    assert first[0] == 0.0
    np.testing.assert_allclose(first[1:8], [s.x, s.y, s.psi, s.vx, s.vy, s.ax, s.ay], atol=1e-9)
    config = json.loads((out / "config.json").read_text())
    assert config["seed"] == 3 and config["solver"]["batch_size"] == 8 and config["scenario"] == json.loads(FREE.read_text())
    summary = json.loads((out / "summary.json").read_text())
    manifest = read_csv(out / "plot" / "manifest.csv")
    assert len(manifest) - 1 == summary["batch_size"] == 8
    assert sum(r[2] == "1" for r in manifest[1:]) == summary["n_converged"]
    assert len(list((out / "plot" / "instances").glob("*.csv"))) == 8
    assert sum(r[3] == "1" for r in manifest[1:]) == 1


def test_plan_snapshots_and_cem(tmp_path):
    out = tmp_path / "snap"
    assert main(["plan", "--scenario", str(CROSSING), "--out", str(out), "--batch-size", "4", "--iters", "5",
                 "--snapshots"]) in (EXIT_OK, EXIT_PLANNER)
    rows = read_csv(out / "plot" / "instances" / "instance_0000.csv")
    its = sorted({int(r[1]) for r in rows[1:]})
    assert its == [1, 2, 3, 4, 5] and len(rows) - 1 == 6 * 50
    assert len(read_csv(out / "plot" / "obstacles.csv")) - 1 == 3 * 50
    out = tmp_path / "cem"
    assert main(["plan", "--scenario", str(FREE), "--out", str(out), "--planner", "cem", "--batch-size", "200",
                 "--iters", "5"]) == EXIT_OK
    assert len(read_csv(out / "trajectory.csv")) == 51


def test_plan_failure_exit_3(tmp_path):
    data = json.loads(FREE.read_text())
    # start buried deep inside an obstacle: nothing can converge
    data["obstacles"] = [{"x": 0.0, "y": 0.0, "vx": 0.0, "vy": 0.0, "a": 2.0, "b": 2.0}]
    path = tmp_path / "blocked.json"
    path.write_text(json.dumps(data))
    assert main(["plan", "--scenario", str(path), "--out", str(tmp_path / "o"), "--batch-size", "4",
                 "--iters", "5"]) == EXIT_PLANNER


def test_empty_batch_manifest(tmp_path):
    sc = line_scenario()
    _, mt = problem(sc)
    empty = SimpleNamespace(x=np.zeros((0, mt.q)), y=np.zeros((0, mt.q)), snapshots=None, n_iters=0,
                            converged=np.zeros(0, bool), best_index=-1, primal_residual=np.zeros(0),
                            heading_residual=np.zeros(0), iters_to_converge=np.zeros(0, int))
    manifest = emit_plot_data(tmp_path, empty, mt)
    assert len(read_csv(manifest)) == 1
    assert list((tmp_path / "instances").iterdir()) == []
    with pytest.raises(OSError):
        emit_plot_data(manifest / "nested", empty, mt)


def test_outputs_reproducible_byte_for_byte(tmp_path):
    for k in (1, 2):
        assert main(["plan", "--scenario", str(CROSSING), "--out", str(tmp_path / f"p{k}"), "--batch-size", "6",
                     "--seed", "11"]) in (EXIT_OK, EXIT_PLANNER)
        assert main(["mpc", "--scenario", str(FREE), "--out", str(tmp_path / f"m{k}"), "--batch-size", "4"]) == EXIT_OK

    def strip(t):
        return {k: v for k, v in t.items() if not k.startswith("timing")}

    assert strip(tree(tmp_path / "p1")) == strip(tree(tmp_path / "p2"))
    assert strip(tree(tmp_path / "m1")) == strip(tree(tmp_path / "m2"))
    metrics = json.loads((tmp_path / "m1" / "metrics.json").read_text())
    assert metrics["reached_goal"] and metrics["success_rate"] == 1.0
    log = read_csv(tmp_path / "m1" / "state_log.csv")
    assert log[0][0] == "t" and log[-1][-1] == ""


def test_timing_grid_has_21_rows(tmp_path):
    assert main(["timing", "--out", str(tmp_path), "--batch-size", "5", "--warmup", "1", "--measure", "2"]) == EXIT_OK
    rows = read_csv(tmp_path / "timing.csv")
    assert len(rows) == 1 + 21
    assert {(int(r[0]), int(r[1])) for r in rows[1:]} == {(n, m) for n in (1, 5, 10, 15, 20, 25, 30) for m in (1, 2, 4)}
    assert all(int(r[6]) == 2 for r in rows[1:])


def test_bench_small(tmp_path):
    assert main(["bench", "--out", str(tmp_path), "--table", "batch", "--benchmarks", "static_crowd",
                 "--trials", "1", "--scale", "0.1", "--batch-sizes", "1,2", "--iters", "5"]) == EXIT_OK
    rows = read_csv(tmp_path / "bench_batch.csv")
    assert len(rows) == 3 and rows[1][:3] == ["static_crowd", "am", "1"]
    assert json.loads((tmp_path / "config.json").read_text())["seed"] == 0
