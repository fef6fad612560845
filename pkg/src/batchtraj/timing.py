"""Per-iteration timing of the AM solver over obstacle, circle and batch-size grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .am_solver import AMSolver, SolverConfig
from .basis import build_basis
from .init_sampler import InitConfig, sample_batch
from .problem import DesiredLine, Footprint, ObstacleTrack, Scenario, StartState, assemble_matrices

OBSTACLE_GRID = (1, 5, 10, 15, 20, 25, 30)
CIRCLE_GRID = (1, 2, 4)


@dataclass(frozen=True)
class TimingRow:
    n_obstacles: int
    n_circles: int
    batch_size: int
    median_s: float
    mean_s: float
    min_s: float
    n_measured: int


def timing_scenario(n_obstacles: int, n_circles: int, seed: int = 0) -> Scenario:
    rng = np.random.default_rng(seed)
    obstacles = [
        ObstacleTrack((rng.uniform(3.0, 15.0), rng.uniform(-2.5, 2.5)), (-rng.uniform(0.0, 1.0), 0.0), (0.3, 0.3))
        for _ in range(n_obstacles)
    ]
    return Scenario(
        Footprint.from_rectangle(1.2, 0.5, n_circles), obstacles, StartState(0.0, 0.0, 0.0, 1.0, 0.0),
        DesiredLine((0.0, 0.0), (1.0, 0.0), 1.0, 20.0), v_max=1.5, a_max=1.5,
    )


def time_iterations(n_obstacles: int, n_circles: int, batch_size: int = 100, warmup: int = 3, measure: int = 20,
                    seed: int = 0, backend: str | None = None) -> TimingRow:
    """Median wall time of one AM iteration, after ``warmup`` discarded iterations."""
    if measure < 1 or warmup < 0:
        raise ValueError("need measure >= 1 and warmup >= 0")
    sc = timing_scenario(n_obstacles, n_circles, seed)
    basis = build_basis("bernstein", 10, sc.horizon, sc.q)
    mt = assemble_matrices(sc, basis)
    xi1, xi2 = sample_batch(sc, basis, InitConfig(batch_size, 1.0, seed))
    # no freezing, so every iteration does the same amount of work
    cfg = SolverConfig(max_iters=warmup + measure, batch_size=batch_size, freeze_converged=False, backend=backend)
    times = np.array(AMSolver(mt, cfg).optimize(xi1, xi2).iteration_times[warmup:])
    return TimingRow(n_obstacles, n_circles, batch_size, float(np.median(times)), float(times.mean()),
                     float(times.min()), int(times.size))


def obstacle_sweep(obstacles=OBSTACLE_GRID, circles=CIRCLE_GRID, batch_size: int = 100, warmup: int = 3,
                   measure: int = 20, seed: int = 0, backend: str | None = None) -> list[TimingRow]:
    return [time_iterations(n, m, batch_size, warmup, measure, seed, backend) for n in obstacles for m in circles]


def batch_sweep(batch_sizes=(1, 10, 100, 250, 500, 1000), n_obstacles: int = 10, n_circles: int = 3,
                warmup: int = 3, measure: int = 20, seed: int = 0, backend: str | None = None) -> list[TimingRow]:
    return [time_iterations(n_obstacles, n_circles, L, warmup, measure, seed, backend) for L in batch_sizes]


def linear_fit_deviation(x, y) -> float:
    """Largest relative deviation of ``y`` from its least-squares line in ``x``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    coef = np.polyfit(x, y, 1)
    fit = np.polyval(coef, x)
    return float(np.max(np.abs(y - fit) / np.abs(fit)))
