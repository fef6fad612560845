"""Command-line driver: ``plan``, ``mpc``, ``bench`` and ``timing`` subcommands.

Exit codes: 0 success, 2 invalid scenario or configuration (nothing is
written), 3 planner failure in ``plan`` mode (outputs are still written).

Every output directory gets ``config.json`` with the seed and the fully
resolved configuration. Timing numbers go to separate ``timing*`` files,
which are the only outputs that differ between identical runs.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Optional, Sequence

from . import sim
from .am_solver import AMSolver, SolverConfig
from .basis import build_basis
from .cem import CemConfig, cem_optimize
from .init_sampler import InitConfig, sample_batch
from .problem import assemble_matrices
from .scenario_io import ScenarioError, emit_plot_data, load_scenario, write_csv, write_json
from .timing import CIRCLE_GRID, OBSTACLE_GRID, batch_sweep, obstacle_sweep

EXIT_OK, EXIT_INVALID, EXIT_PLANNER = 0, 2, 3

TRAJ_COLUMNS = ("t", "x", "y", "psi", "vx", "vy", "ax", "ay", "psid", "psidd")
METRIC_COLUMNS = (
    "benchmark", "planner", "batch_size", "n_trials", "n_success", "success_rate",
    "tracking_mean", "tracking_max", "tracking_min", "acc_mean", "acc_max", "acc_min",
    "arc_mean", "arc_max", "arc_min",
)
TIMING_COLUMNS = ("n_obstacles", "n_circles", "batch_size", "median_s", "mean_s", "min_s", "n_measured")


class ConfigError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("values must be positive integers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="batchtraj", description="Batch trajectory optimization by alternating minimization.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario: bool):
        if scenario:
            sp.add_argument("--scenario", required=True, help="scenario JSON file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--planner", choices=sim.PLANNERS, default="am")
        sp.add_argument("--batch-size", type=int, default=None,
                        help="AM batch size, or CEM samples per iteration (default 100 / 800)")
        sp.add_argument("--iters", type=int, default=None, help="AM or CEM iterations per planning call")
        sp.add_argument("--rho", type=float, default=None, help="AM penalty weight on xi1 rows")
        sp.add_argument("--rho-psi", type=float, default=None, help="AM penalty weight on the heading rows")
        sp.add_argument("--warm-start", action="store_true",
                        help="carry the selected instance's multipliers to the next MPC tick (off by default)")

    sp = sub.add_parser("plan", help="one planning call on a scenario")
    common(sp, True)
    sp.add_argument("--noise", type=float, default=1.0, help="initialization position noise scale")
    sp.add_argument("--snapshots", action="store_true", help="record every AM iteration in the plot data")

    sp = sub.add_parser("mpc", help="closed-loop run on a scenario")
    common(sp, True)

    sp = sub.add_parser("bench", help="desk-scale benchmark tables")
    common(sp, False)
    sp.add_argument("--scale", type=float, default=0.33, help="benchmark size factor (1 = full size)")
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--table", choices=("batch", "planners", "footprint", "all"), default="all")
    sp.add_argument("--benchmarks", default=",".join(sim.BENCHMARKS), help="comma-separated benchmark names")
    sp.add_argument("--batch-sizes", type=_ints, default=[1, 25, 100])
    sp.add_argument("--gaps", type=int, default=10, help="number of narrow-gap scenarios")

    sp = sub.add_parser("timing", help="per-iteration time vs obstacles, circles and batch size")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--batch-size", type=int, default=100)
    sp.add_argument("--obstacles", type=_ints, default=list(OBSTACLE_GRID))
    sp.add_argument("--circles", type=_ints, default=list(CIRCLE_GRID))
    sp.add_argument("--batch-sizes", type=_ints, default=None, help="also sweep these batch sizes")
    sp.add_argument("--warmup", type=int, default=3)
    sp.add_argument("--measure", type=int, default=20)
    sp.add_argument("--backend", choices=("numba", "numpy"), default=None)
    return p


# -- config resolution -----------------------------------------------------------


def resolve_solver(args, base: SolverConfig) -> SolverConfig:
    over = {}
    if args.iters is not None:
        over["max_iters"] = args.iters
    if args.rho is not None:
        over["rho"] = args.rho
    if args.rho_psi is not None:
        over["rho_psi"] = args.rho_psi
    if args.planner == "am" and args.batch_size is not None:
        over["batch_size"] = args.batch_size
    if over.get("rho", 1.0) <= 0 or over.get("rho_psi", 1.0) <= 0:
        raise ConfigError("--rho and --rho-psi must be positive")
    try:
        return replace(base, **over)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def resolve_cem(args, base: CemConfig) -> CemConfig:
    over = {"seed": args.seed}
    if args.planner == "cem":
        if args.batch_size is not None:
            over["n_samples"] = args.batch_size
        if args.iters is not None:
            over["n_iters"] = args.iters
    try:
        return replace(base, **over)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def resolve_sim(args) -> sim.SimConfig:
    base = sim.SimConfig()
    solver = resolve_solver(args, base.solver) if args.planner == "am" else base.solver
    try:
        return replace(base, planner=args.planner, solver=solver, cem=resolve_cem(args, base.cem),
                       warm_start=bool(getattr(args, "warm_start", False)),
                       batch_size=args.batch_size if (args.planner == "am" and args.batch_size) else base.batch_size)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _prepare_out(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -----------------------------------------------------------------


def cmd_plan(args) -> int:
    scenario, raw = load_scenario(args.scenario)
    if args.noise < 0:
        raise ConfigError("--noise must be >= 0")
    solver = resolve_solver(args, SolverConfig())
    cem = resolve_cem(args, CemConfig())
    basis = build_basis("bernstein", 10, scenario.horizon, scenario.q)
    matrices = assemble_matrices(scenario, basis)
    out = _prepare_out(args.out)
    config = {"command": "plan", "seed": args.seed, "planner": args.planner, "scenario": raw}
    t = basis.timestamps

    if args.planner == "cem":
        config["cem"] = asdict(cem)
        write_json(out / "config.json", config)
        res = cem_optimize(scenario, matrices, cem)
        r = res.rollout
        cols = (r.x[0], r.y[0], r.psi[0], r.xd[0], r.yd[0], r.xdd[0], r.ydd[0], r.psid[0], r.psidd[0])
        write_csv(out / "trajectory.csv", TRAJ_COLUMNS, zip(t, *cols))
        write_json(out / "summary.json", {"feasible": res.feasible, "best_cost": res.best_cost,
                                          "cost_trace": res.cost_trace})
        return EXIT_OK if res.feasible else EXIT_PLANNER

    init = InitConfig(solver.batch_size, args.noise, args.seed)
    config.update(solver=asdict(solver), init=asdict(init))
    write_json(out / "config.json", config)
    xi1, xi2 = sample_batch(scenario, basis, init)
    sol = AMSolver(matrices, solver).optimize(xi1, xi2, record_snapshots=args.snapshots)
    b = sol.best_index
    cols = (sol.x[b], sol.y[b], sol.psi[b], sol.xd[b], sol.yd[b], sol.xdd[b], sol.ydd[b], sol.psid[b], sol.psidd[b])
    write_csv(out / "trajectory.csv", TRAJ_COLUMNS, zip(t, *cols))
    emit_plot_data(out / "plot", sol, matrices)
    write_json(out / "summary.json", {
        "best_index": b, "n_converged": int(sol.converged.sum()), "batch_size": sol.L, "n_iters": sol.n_iters,
        "converged": sol.converged, "iters_to_converge": sol.iters_to_converge,
        "primal_residual": sol.primal_residual, "heading_residual": sol.heading_residual,
        "primal_residual_normalized": sol.primal_residual_normalized, "heading_residual_max": sol.heading_residual_max,
        "smoothness_cost": sol.smoothness_cost, "tracking_cost": sol.tracking_cost,
    })
    write_json(out / "timing.json", {"iteration_times_s": sol.iteration_times})
    return EXIT_OK if sol.any_converged else EXIT_PLANNER


def write_trial_log(out: Path, log: sim.TrialLog) -> None:
    """``state_log.csv``: t, state columns, failed_plan, iters_to_converge (the last two refer to the
    planning call made at that row; empty on the final row). ``obstacle_log.csv``: t, obstacle, x, y."""
    K = log.times.size
    failed = list(log.failed_plans) + [""]
    iters = list(log.iters_to_converge) + [""]
    write_csv(out / "state_log.csv", ("t",) + sim.TrialLog.STATE_COLUMNS + ("failed_plan", "iters_to_converge"),
              ((log.times[k], *log.states[k], failed[k], iters[k]) for k in range(K)))
    write_csv(out / "obstacle_log.csv", ("t", "obstacle", "x", "y"),
              ((log.times[k], j, log.obstacles[k, j, 0], log.obstacles[k, j, 1])
               for k in range(K) for j in range(log.obstacles.shape[1])))


def cmd_mpc(args) -> int:
    scenario, raw = load_scenario(args.scenario)
    if scenario.desired.length is None:
        raise ConfigError("mpc needs desired.length (the goal)")
    cfg = resolve_sim(args)
    cfg = replace(cfg, horizon=scenario.horizon, q=scenario.q)
    world = sim.World(scenario.footprint, tuple(scenario.obstacles), scenario.start, scenario.desired,
                      scenario.v_max, scenario.a_max)
    out = _prepare_out(args.out)
    write_json(out / "config.json", {"command": "mpc", "seed": args.seed, "scenario": raw, "sim": asdict(cfg)})
    log = sim.run_closed_loop(world, cfg, args.seed)
    write_trial_log(out, log)
    metrics = sim.compute_metrics([log])
    write_json(out / "metrics.json", {**metrics.to_dict(), "collided": log.collided, "reached_goal": log.reached_goal})
    write_json(out / "timing.json", {"iteration_time": asdict(metrics.iteration_time)})
    return EXIT_OK


def _metric_row(benchmark: str, planner: str, batch: int, m: sim.Metrics) -> tuple:
    return (benchmark, planner, batch, m.n_trials, m.n_success, m.success_rate,
            m.tracking_error.mean, m.tracking_error.max, m.tracking_error.min,
            m.acceleration.mean, m.acceleration.max, m.acceleration.min,
            m.arc_length.mean, m.arc_length.max, m.arc_length.min)


def cmd_bench(args) -> int:
    names = [n.strip() for n in args.benchmarks.split(",") if n.strip()]
    bad = [n for n in names if n not in sim.BENCHMARKS]
    if bad or not names:
        raise ConfigError(f"unknown benchmark(s) {bad}; choose from {sim.BENCHMARKS}")
    if args.trials < 1 or args.scale <= 0 or args.gaps < 1:
        raise ConfigError("--trials and --gaps must be >= 1 and --scale > 0")
    base = resolve_sim(args)
    out = _prepare_out(args.out)
    write_json(out / "config.json", {
        "command": "bench", "seed": args.seed, "scale": args.scale, "trials": args.trials, "table": args.table,
        "benchmarks": names, "batch_sizes": args.batch_sizes, "gaps": args.gaps, "sim": asdict(base),
    })
    timing_rows = []

    def run(which, cfg, label, batch):
        m, _ = sim.run_benchmark(which, args.trials, cfg, args.seed, args.scale)
        timing_rows.append((which, label, batch, m.iteration_time.mean, m.iteration_time.max, m.iteration_time.min))
        return _metric_row(which, label, batch, m)

    if args.table in ("batch", "all"):
        rows = [run(w, replace(base, planner="am", batch_size=L), "am", L) for w in names for L in args.batch_sizes]
        write_csv(out / "bench_batch.csv", METRIC_COLUMNS, rows)
    if args.table in ("planners", "all"):
        rows = []
        for w in names:
            rows.append(run(w, replace(base, planner="am"), "am", base.batch_size))
            rows.append(run(w, replace(base, planner="cem"), "cem", base.cem.n_samples))
        write_csv(out / "bench_planners.csv", METRIC_COLUMNS, rows)
    if args.table in ("footprint", "all"):
        multi, single = sim.default_footprint(), sim.single_circle_footprint()
        specs = sim.gap_specs(args.gaps, multi, single, args.seed)
        res = sim.compare_footprints(specs, {"multi_circle": multi, "single_circle": single}, seed=args.seed)
        write_csv(out / "bench_footprint.csv",
                  ("model", "n_circles", "n_scenarios", "n_converged", "arc_mean", "arc_max", "arc_min",
                   "acc_mean", "acc_max", "acc_min"),
                  ((name, fp.m, r.n_scenarios, r.n_converged, r.arc_length.mean, r.arc_length.max, r.arc_length.min,
                    r.acceleration.mean, r.acceleration.max, r.acceleration.min)
                   for (name, r), fp in zip(res.items(), (multi, single))))
    write_csv(out / "timing_bench.csv", ("benchmark", "planner", "batch_size", "iter_mean_s", "iter_max_s", "iter_min_s"),
              timing_rows)
    return EXIT_OK


def cmd_timing(args) -> int:
    if args.batch_size < 1 or args.measure < 1 or args.warmup < 0:
        raise ConfigError("--batch-size and --measure must be >= 1, --warmup >= 0")
    out = _prepare_out(args.out)
    write_json(out / "config.json", {
        "command": "timing", "seed": args.seed, "batch_size": args.batch_size, "obstacles": args.obstacles,
        "circles": args.circles, "batch_sizes": args.batch_sizes, "warmup": args.warmup, "measure": args.measure,
        "backend": args.backend,
    })
    rows = obstacle_sweep(args.obstacles, args.circles, args.batch_size, args.warmup, args.measure, args.seed,
                          args.backend)
    write_csv(out / "timing.csv", TIMING_COLUMNS, (tuple(asdict(r).values()) for r in rows))
    if args.batch_sizes:
        rows = batch_sweep(args.batch_sizes, warmup=args.warmup, measure=args.measure, seed=args.seed,
                           backend=args.backend)
        write_csv(out / "timing_batch.csv", TIMING_COLUMNS, (tuple(asdict(r).values()) for r in rows))
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "mpc": cmd_mpc, "bench": cmd_bench, "timing": cmd_timing}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, ConfigError) as exc:
        print(f"batchtraj: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"batchtraj: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
