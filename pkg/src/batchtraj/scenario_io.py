"""Scenario JSON ingestion and the CSV/JSON writers shared by the CLI.

Scenario file layout (metres, seconds, radians)::

    {
      "robot": {"offsets": [-0.4, 0.0, 0.4], "circle_radius": 0.32,
                "v_max": 1.5, "a_max": 1.5,
                "start": {"x": 0, "y": 0, "psi": 0, "vx": 1, "vy": 0}},
      "obstacles": [{"x": 5, "y": 0.2, "vx": 0, "vy": 0, "a": 0.4, "b": 0.4}],
      "desired": {"origin": [0, 0], "direction": [1, 0], "speed": 1.0, "length": 10},
      "horizon": {"seconds": 10, "steps": 50}
    }

``desired.length`` is optional for ``plan`` and required for ``mpc`` (it
defines the goal). ``start`` may also carry ``ax``, ``ay``.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonschema
import numpy as np

from .problem import DesiredLine, Footprint, ObstacleTrack, Scenario, StartState

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_VEC2 = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

SCENARIO_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["robot", "obstacles", "desired", "horizon"],
    "properties": {
        "robot": {
            "type": "object",
            "required": ["offsets", "circle_radius", "v_max", "a_max", "start"],
            "properties": {
                "offsets": {"type": "array", "items": _NUM, "minItems": 1},
                "circle_radius": _POS,
                "v_max": _POS,
                "a_max": _POS,
                "start": {
                    "type": "object",
                    "required": ["x", "y", "psi", "vx", "vy"],
                    "properties": {k: _NUM for k in ("x", "y", "psi", "vx", "vy", "ax", "ay")},
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "obstacles": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["x", "y", "vx", "vy", "a", "b"],
                "properties": {"x": _NUM, "y": _NUM, "vx": _NUM, "vy": _NUM, "a": _POS, "b": _POS},
                "additionalProperties": False,
            },
        },
        "desired": {
            "type": "object",
            "required": ["origin", "direction", "speed"],
            "properties": {"origin": _VEC2, "direction": _VEC2, "speed": {"type": "number", "minimum": 0}, "length": _POS},
            "additionalProperties": False,
        },
        "horizon": {
            "type": "object",
            "required": ["seconds", "steps"],
            "properties": {"seconds": _POS, "steps": {"type": "integer", "minimum": 11}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class ScenarioError(ValueError):
    """The scenario file is missing, malformed, or describes an invalid problem."""


def parse_scenario(data: dict) -> Scenario:
    try:
        jsonschema.validate(data, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"{where}: {exc.message}") from None
    robot, des, hor = data["robot"], data["desired"], data["horizon"]
    st = robot["start"]
    try:
        return Scenario(
            footprint=Footprint(np.array(robot["offsets"], dtype=np.float64), float(robot["circle_radius"])),
            obstacles=[
                ObstacleTrack((ob["x"], ob["y"]), (ob["vx"], ob["vy"]), (ob["a"], ob["b"])) for ob in data["obstacles"]
            ],
            start=StartState(st["x"], st["y"], st["psi"], st["vx"], st["vy"], st.get("ax", 0.0), st.get("ay", 0.0)),
            desired=DesiredLine(tuple(des["origin"]), tuple(des["direction"]), float(des["speed"]), des.get("length")),
            v_max=float(robot["v_max"]),
            a_max=float(robot["a_max"]),
            horizon=float(hor["seconds"]),
            q=int(hor["steps"]),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def load_scenario(path: str | os.PathLike) -> tuple[Scenario, dict]:
    """Parsed scenario plus the raw JSON (echoed into output configs)."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_scenario(data), data


def scenario_to_dict(sc: Scenario) -> dict:
    s = sc.start
    out = {
        "robot": {
            "offsets": [float(r) for r in sc.footprint.offsets],
            "circle_radius": float(sc.footprint.circle_radius),
            "v_max": sc.v_max,
            "a_max": sc.a_max,
            "start": {"x": s.x, "y": s.y, "psi": s.psi, "vx": s.vx, "vy": s.vy, "ax": s.ax, "ay": s.ay},
        },
        "obstacles": [
            {"x": ob.initial_position[0], "y": ob.initial_position[1], "vx": ob.velocity[0], "vy": ob.velocity[1],
             "a": ob.semi_axes[0], "b": ob.semi_axes[1]}
            for ob in sc.obstacles
        ],
        "desired": {"origin": list(sc.desired.origin), "direction": list(sc.desired.direction), "speed": sc.desired.speed},
        "horizon": {"seconds": sc.horizon, "steps": sc.q},
    }
    if sc.desired.length is not None:
        out["desired"]["length"] = sc.desired.length
    return out


# -- writers ---------------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_json(path: Path, obj) -> Path:
    try:
        with open(path, "w") as fh:
            json.dump(_plain(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Floats are written with ``repr``, so identical inputs give identical bytes."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def emit_plot_data(out_dir: str | os.PathLike, solution, matrices, t_offset: float = 0.0) -> Path:
    """Per-instance polylines, obstacle tracks and the desired line as CSVs, plus a manifest.

    Files (timestamps in column 1):

    - ``instances/instance_NNNN.csv``: ``t, iteration, x, y``; one block per
      recorded AM iteration (if snapshots were kept) followed by the final
      trajectory, whose iteration number is ``n_iters``.
    - ``manifest.csv``: ``instance, file, converged, best, primal_residual,
      heading_residual, iters_to_converge``.
    - ``obstacles.csv``: ``t, obstacle, x, y, a_eff, b_eff``.
    - ``desired.csv``: ``t, x, y``.
    """
    out = Path(out_dir)
    inst_dir = out / "instances"
    inst_dir.mkdir(parents=True, exist_ok=True)
    t = matrices.basis.timestamps + t_offset
    L = solution.x.shape[0]
    manifest = []
    for l in range(L):
        rel = f"instances/instance_{l:04d}.csv"
        rows = []
        for k, (sx, sy) in enumerate(solution.snapshots or []):
            rows.extend((t[i], k + 1, sx[l, i], sy[l, i]) for i in range(t.size))
        rows.extend((t[i], solution.n_iters, solution.x[l, i], solution.y[l, i]) for i in range(t.size))
        write_csv(out / rel, ("t", "iteration", "x", "y"), rows)
        manifest.append((
            l, rel, bool(solution.converged[l]), l == solution.best_index, float(solution.primal_residual[l]),
            float(solution.heading_residual[l]), int(solution.iters_to_converge[l]),
        ))
    write_csv(out / "manifest.csv", ("instance", "file", "converged", "best", "primal_residual", "heading_residual",
                                     "iters_to_converge"), manifest)
    write_csv(
        out / "obstacles.csv", ("t", "obstacle", "x", "y", "a_eff", "b_eff"),
        ((t[i], j, matrices.obstacle_x[j, i], matrices.obstacle_y[j, i], matrices.a_eff[j], matrices.b_eff[j])
         for j in range(matrices.n) for i in range(t.size)),
    )
    write_csv(out / "desired.csv", ("t", "x", "y"),
              ((t[i], matrices.desired_xy[0, i], matrices.desired_xy[1, i]) for i in range(t.size)))
    return out / "manifest.csv"
