"""Closed-loop MPC simulation, benchmark worlds and metrics.

Every control tick the planner sees the current robot state and the current
obstacle positions and velocities, plans a full horizon, and the robot
executes the first tick of the selected plan exactly (kinematic follower).
Obstacles move at constant velocity. Collisions are checked against the true
inflated ellipses at several substeps per tick; the planner itself uses a
slightly larger inflation (``planning_margin``) to absorb sampling between
the q plan timestamps.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .am_solver import AMSolver, SolverConfig
from .basis import BasisMatrices, build_basis
from .cem import CemConfig, cem_optimize
from .init_sampler import InitConfig, sample_batch
from .problem import DesiredLine, Footprint, ObstacleTrack, Scenario, StartState, assemble_matrices

BENCHMARKS = ("static_crowd", "same_direction", "opposite_direction")
PLANNERS = ("am", "cem")


@dataclass(frozen=True)
class World:
    """Everything that stays fixed during one closed-loop run."""

    footprint: Footprint
    obstacles: tuple[ObstacleTrack, ...]
    start: StartState
    desired: DesiredLine
    v_max: float = 1.5
    a_max: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if self.desired.length is None:
            raise ValueError("closed-loop runs need a desired line with a finite length (the goal)")

    @property
    def goal(self) -> np.ndarray:
        return self.desired.goal

    def obstacle_positions(self, t: float) -> np.ndarray:
        if not self.obstacles:
            return np.zeros((0, 2))
        return np.stack([ob.position(t) for ob in self.obstacles])


@dataclass(frozen=True)
class WorldState:
    time: float
    x: float
    y: float
    psi: float
    vx: float
    vy: float
    ax: float
    ay: float
    psid: float
    psidd: float
    obstacle_positions: np.ndarray  # (n, 2)
    collision: bool = False

    def as_start(self) -> StartState:
        return StartState(self.x, self.y, self.psi, self.vx, self.vy, self.ax, self.ay, self.psid, self.psidd)


@dataclass(frozen=True)
class SimConfig:
    planner: str = "am"
    batch_size: int = 100
    solver: SolverConfig = SolverConfig(max_iters=10)
    cem: CemConfig = CemConfig(n_samples=800, n_iters=10)
    position_noise_scale: float = 1.0
    tick: float = 0.1
    horizon: float = 10.0
    q: int = 50
    timeout: float = 60.0
    goal_tol: float = 0.5
    planning_margin: float = 0.1
    reach_fraction: float = 0.7  # pinned endpoint at most this fraction of v_max * horizon away
    substeps: int = 5
    warm_start: bool = False  # carried multipliers drift as the horizon shifts; see step_mpc

    def __post_init__(self):
        if self.planner not in PLANNERS:
            raise ValueError(f"planner must be one of {PLANNERS}, got {self.planner!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (self.tick > 0 and self.timeout > 0 and self.horizon > self.tick):
            raise ValueError("need 0 < tick < horizon and timeout > 0")


def in_collision(world: World, x: float, y: float, psi: float, obstacle_positions: np.ndarray) -> bool:
    """True when any footprint circle centre is strictly inside an inflated obstacle ellipse."""
    if obstacle_positions.shape[0] == 0:
        return False
    fp = world.footprint
    cx = x + fp.offsets * np.cos(psi)  # (m,)
    cy = y + fp.offsets * np.sin(psi)
    axes = np.array([ob.semi_axes for ob in world.obstacles]) + fp.circle_radius  # (n, 2)
    dx = (cx[None, :] - obstacle_positions[:, None, 0]) / axes[:, None, 0]
    dy = (cy[None, :] - obstacle_positions[:, None, 1]) / axes[:, None, 1]
    return bool(np.any(dx * dx + dy * dy < 1.0))


def initial_state(world: World) -> WorldState:
    s = world.start
    pos = world.obstacle_positions(0.0)
    state = WorldState(0.0, s.x, s.y, s.psi, s.vx, s.vy, s.ax, s.ay, s.psid, s.psidd, pos)
    return replace(state, collision=in_collision(world, s.x, s.y, s.psi, pos))


# -- one control tick ------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """Motion over one tick: either the head of a planned polynomial or a braking stop."""

    basis: Optional[BasisMatrices] = None
    coeffs: Optional[np.ndarray] = None  # (3, n_v) for x, y, psi
    stop_from: Optional[WorldState] = None
    a_max: float = 0.0

    def evaluate(self, tau) -> np.ndarray:
        """State rows ``(x, y, psi, vx, vy, ax, ay, psid, psidd)`` at offsets ``tau`` into the tick, shape (k, 9)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=np.float64))
        if self.coeffs is not None:
            P, Pd, Pdd = self.basis.at(tau)
            cx, cy, cp = self.coeffs
            return np.stack([P @ cx, P @ cy, P @ cp, Pd @ cx, Pd @ cy, Pdd @ cx, Pdd @ cy, Pd @ cp, Pdd @ cp], axis=1)
        s = self.stop_from
        v = np.array([s.vx, s.vy])
        speed = float(np.hypot(*v))
        out = np.zeros((tau.size, 9))
        out[:, 2] = s.psi
        if speed == 0.0 or self.a_max <= 0:
            out[:, 0], out[:, 1] = s.x, s.y
            return out
        u = v / speed
        t_stop = speed / self.a_max
        tt = np.minimum(tau, t_stop)
        dist = speed * tt - 0.5 * self.a_max * tt**2
        moving = tau < t_stop
        out[:, 0] = s.x + u[0] * dist
        out[:, 1] = s.y + u[1] * dist
        sp = np.where(moving, speed - self.a_max * tau, 0.0)
        out[:, 3], out[:, 4] = u[0] * sp, u[1] * sp
        out[:, 5] = np.where(moving, -self.a_max * u[0], 0.0)
        out[:, 6] = np.where(moving, -self.a_max * u[1], 0.0)
        return out


@dataclass
class StepResult:
    segment: Segment
    multipliers: Optional[tuple[np.ndarray, np.ndarray]]
    failed: bool
    n_converged: int
    iters_to_converge: int  # of the executed instance, -1 when none
    iteration_times: list = field(default_factory=list)


def step_seed(run_seed: int, step: int) -> int:
    """Independent, reproducible seed for the sampler at one MPC step."""
    return int(np.random.SeedSequence([run_seed, step]).generate_state(1)[0])


def reachable_endpoint(desired: DesiredLine, t_end: float, position, reach: float) -> np.ndarray:
    """The desired line point at ``t_end``, pulled back along the line to within ``reach`` of ``position``.

    When the robot lags or has been pushed aside, the nominal endpoint can be
    beyond what the speed bound allows within the horizon, which makes every
    instance infeasible. The endpoint stays on the line and never passes the
    nominal one.
    """
    o = np.asarray(desired.origin, dtype=np.float64)
    d = np.asarray(desired.direction, dtype=np.float64)
    target = desired.point(t_end)
    s_target = float((target - o) @ d)
    rel = np.asarray(position, dtype=np.float64) - o
    s_robot = float(rel @ d)
    h = abs(float(rel[0] * d[1] - rel[1] * d[0]))
    ahead = np.sqrt(max(reach * reach - h * h, 0.0))
    s = min(s_target, s_robot + ahead)
    return o + d * s


def horizon_scenario(world: World, state: WorldState, config: SimConfig) -> Scenario:
    """Planning problem for the current tick: obstacles re-anchored at the current time."""
    obstacles = [
        ObstacleTrack(tuple(pos), ob.velocity, ob.semi_axes)
        for ob, pos in zip(world.obstacles, state.obstacle_positions)
    ]
    reach = config.reach_fraction * world.v_max * config.horizon
    final = reachable_endpoint(world.desired, state.time + config.horizon, (state.x, state.y), reach)
    return Scenario(
        footprint=world.footprint, obstacles=obstacles, start=state.as_start(), desired=world.desired,
        v_max=world.v_max, a_max=world.a_max, horizon=config.horizon, q=config.q, t_start=state.time,
        final_override=(float(final[0]), float(final[1])),
    )


def start_safe_margin(world: World, state: WorldState, margin: float) -> np.ndarray:
    """Per-obstacle planning margin, shrunk so the current pose lies outside every padded ellipse.

    The current pose is pinned by the boundary rows; if it sat inside a
    padded ellipse no instance could converge.
    """
    n = len(world.obstacles)
    out = np.full(n, float(margin))
    if n == 0 or margin <= 0:
        return out
    fp = world.footprint
    cx = state.x + fp.offsets * np.cos(state.psi)
    cy = state.y + fp.offsets * np.sin(state.psi)
    for j, (ob, pos) in enumerate(zip(world.obstacles, state.obstacle_positions)):
        a = ob.semi_axes[0] + fp.circle_radius
        b = ob.semi_axes[1] + fp.circle_radius
        # largest common padding m with ((x/(a+m))^2 + (y/(b+m))^2 >= 1) for every circle, by bisection
        dx, dy = cx - pos[0], cy - pos[1]
        lo, hi = 0.0, float(margin)
        if np.min((dx / (a + hi)) ** 2 + (dy / (b + hi)) ** 2) >= 1.0:
            continue
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if np.min((dx / (a + mid)) ** 2 + (dy / (b + mid)) ** 2) >= 1.0:
                lo = mid
            else:
                hi = mid
        out[j] = 0.9 * lo
    return out


def step_mpc(world: World, state: WorldState, config: SimConfig, multipliers=None, seed: int = 0,
             basis: Optional[BasisMatrices] = None) -> StepResult:
    """Plan from ``state`` and return the motion for the next tick.

    A plan is used when it converged (AM) or is penalty-free (CEM). Otherwise
    the best-effort plan is still used if its first tick is collision-free
    and within the velocity/acceleration bounds; if not, the step counts as a
    planner failure and the robot brakes. The run continues either way.
    """
    basis = basis or build_basis("bernstein", 10, config.horizon, config.q)
    scenario = horizon_scenario(world, state, config)
    margin = start_safe_margin(world, state, config.planning_margin)
    matrices = assemble_matrices(scenario, basis, margin=margin)
    nv = basis.n_v
    stop = Segment(stop_from=state, a_max=world.a_max)

    if config.planner == "cem":
        res = cem_optimize(scenario, matrices, replace(config.cem, seed=seed))
        seg = Segment(basis, res.coeffs.reshape(3, nv))
        if not (res.feasible or _safe_tick(world, state, seg, config)):
            return StepResult(stop, None, True, 0, -1)
        return StepResult(seg, None, False, int(res.feasible), -1)

    solver_cfg = replace(config.solver, batch_size=config.batch_size)
    xi1, xi2 = sample_batch(scenario, basis, InitConfig(config.batch_size, config.position_noise_scale, seed))
    # multipliers live in coefficient space and are tied to the previous
    # horizon's time window, so carrying them across a shifted horizon biases
    # the plan; only enabled on request
    warm = multipliers if config.warm_start else None
    sol = AMSolver(matrices, solver_cfg).optimize(xi1, xi2, warm_multipliers=warm)
    b = sol.best_index
    n_conv = int(sol.converged.sum())
    # multipliers of an unconverged instance are not a useful estimate and
    # compound across ticks, so only converged ones are carried
    lam = (sol.vars.lam[b].copy(), sol.vars.lam_psi[b].copy()) if sol.converged[b] else None
    x1 = sol.vars.xi1[b]
    seg = Segment(basis, np.stack([x1[:nv], x1[2 * nv : 3 * nv], sol.vars.xi2[b]]))
    if n_conv == 0 and not _safe_tick(world, state, seg, config):
        return StepResult(stop, lam, True, 0, -1, sol.iteration_times)
    return StepResult(seg, lam, False, n_conv, int(sol.iters_to_converge[b]), sol.iteration_times)


def _safe_tick(world: World, state: WorldState, seg: Segment, config: SimConfig, slack: float = 1e-2) -> bool:
    """First tick of ``seg`` stays out of every inflated obstacle and within (1 + slack) of the bounds."""
    taus = config.tick * np.arange(1, config.substeps + 1) / config.substeps
    sub = seg.evaluate(taus)
    if np.any(np.hypot(sub[:, 3], sub[:, 4]) > world.v_max * (1 + slack)):
        return False
    if np.any(np.hypot(sub[:, 5], sub[:, 6]) > world.a_max * (1 + slack)):
        return False
    return not any(
        in_collision(world, r[0], r[1], r[2], world.obstacle_positions(state.time + tau)) for r, tau in zip(sub, taus)
    )


# -- closed loop -------------------------------------------------------------


@dataclass
class TrialLog:
    times: np.ndarray  # (K,)
    states: np.ndarray  # (K, 9) x, y, psi, vx, vy, ax, ay, psid, psidd
    obstacles: np.ndarray  # (K, n, 2)
    failed_plans: np.ndarray  # (K-1,) bool
    iters_to_converge: np.ndarray  # (K-1,) int
    success: bool
    collided: bool
    reached_goal: bool
    tracking_error: float  # mean squared distance to the desired line point, m^2
    mean_acceleration: float
    arc_length: float
    iteration_times: list = field(default_factory=list)

    STATE_COLUMNS = ("x", "y", "psi", "vx", "vy", "ax", "ay", "psid", "psidd")


def run_closed_loop(world: World, config: SimConfig, seed: int = 0) -> TrialLog:
    basis = build_basis("bernstein", 10, config.horizon, config.q)
    state = initial_state(world)
    times, rows, obs, failed, iters, it_times = [state.time], [_row(state)], [state.obstacle_positions], [], [], []
    arc = 0.0
    collided = state.collision
    reached = _dist_to_goal(world, state) <= config.goal_tol
    multipliers = None
    n_ticks = int(round(config.timeout / config.tick))
    taus = config.tick * np.arange(1, config.substeps + 1) / config.substeps
    step = 0
    while not (collided or reached) and step < n_ticks:
        res = step_mpc(world, state, config, multipliers, step_seed(seed, step), basis)
        multipliers = res.multipliers
        sub = res.segment.evaluate(taus)
        prev = np.array([state.x, state.y])
        for k, tau in enumerate(taus):
            t = state.time + tau
            arc += float(np.hypot(*(sub[k, :2] - prev)))
            prev = sub[k, :2]
            if in_collision(world, sub[k, 0], sub[k, 1], sub[k, 2], world.obstacle_positions(t)):
                collided = True
        step += 1
        t_next = step * config.tick
        pos = world.obstacle_positions(t_next)
        state = WorldState(t_next, *(float(v) for v in sub[-1]), pos, collided)
        times.append(t_next)
        rows.append(_row(state))
        obs.append(pos)
        failed.append(res.failed)
        iters.append(res.iters_to_converge)
        it_times.extend(res.iteration_times)
        reached = _dist_to_goal(world, state) <= config.goal_tol

    times = np.array(times)
    states = np.array(rows)
    desired = world.desired.point(times)
    track = float(np.mean(np.sum((states[:, :2] - desired) ** 2, axis=1)))
    acc = float(np.mean(np.hypot(states[:, 5], states[:, 6])))
    n = len(world.obstacles)
    return TrialLog(
        times=times, states=states, obstacles=np.array(obs).reshape(len(times), n, 2),
        failed_plans=np.array(failed, dtype=bool), iters_to_converge=np.array(iters, dtype=int),
        success=bool(reached and not collided), collided=bool(collided), reached_goal=bool(reached),
        tracking_error=track, mean_acceleration=acc, arc_length=arc, iteration_times=it_times,
    )


def _row(state: WorldState) -> np.ndarray:
    return np.array([state.x, state.y, state.psi, state.vx, state.vy, state.ax, state.ay, state.psid, state.psidd])


def _dist_to_goal(world: World, state: WorldState) -> float:
    return float(np.hypot(state.x - world.goal[0], state.y - world.goal[1]))


# -- metrics -------------------------------------------------------------------


@dataclass(frozen=True)
class Stat:
    mean: float
    max: float
    min: float

    @classmethod
    def of(cls, values: Sequence[float]) -> Stat:
        if len(values) == 0:
            return cls(float("nan"), float("nan"), float("nan"))
        v = np.asarray(values, dtype=np.float64)
        return cls(float(v.mean()), float(v.max()), float(v.min()))


@dataclass(frozen=True)
class Metrics:
    n_trials: int
    n_success: int
    success_rate: float
    tracking_error: Stat  # m^2, per-run mean squared distance to the desired line
    acceleration: Stat  # m/s^2, per-run mean acceleration magnitude
    arc_length: Stat  # m
    iteration_time: Stat  # s, per AM iteration (not deterministic)

    def to_dict(self, include_timing: bool = False) -> dict:
        d = asdict(self)
        if not include_timing:
            d.pop("iteration_time")
        return d


def compute_metrics(logs: Sequence[TrialLog]) -> Metrics:
    """Success rate over all runs; the other statistics over successful runs only."""
    if not logs:
        raise ValueError("no trials")
    ok = [log for log in logs if log.success]
    times = [t for log in logs for t in log.iteration_times]
    return Metrics(
        n_trials=len(logs),
        n_success=len(ok),
        success_rate=len(ok) / len(logs),
        tracking_error=Stat.of([log.tracking_error for log in ok]),
        acceleration=Stat.of([log.mean_acceleration for log in ok]),
        arc_length=Stat.of([log.arc_length for log in ok]),
        iteration_time=Stat.of(times),
    )


# -- benchmarks ----------------------------------------------------------------


def default_footprint() -> Footprint:
    return Footprint.from_rectangle(1.2, 0.5, 3)


def single_circle_footprint() -> Footprint:
    """One circle circumscribing the same 1.2 x 0.5 m rectangle."""
    return Footprint(np.array([0.0]), float(np.hypot(0.6, 0.25)))


@dataclass(frozen=True)
class BenchmarkSpec:
    which: str
    scale: float = 1.0
    full_obstacles: int = 30
    full_length: float = 60.0  # metres of desired line at scale 1
    half_width: float = 2.5  # obstacle corridor half-width around the line
    obstacle_radius: float = 0.3
    desired_speed: float = 1.0

    @property
    def n_obstacles(self) -> int:
        return max(1, int(round(self.full_obstacles * self.scale)))

    @property
    def length(self) -> float:
        return self.full_length * self.scale


def make_benchmark_world(spec: BenchmarkSpec, seed: int, footprint: Optional[Footprint] = None) -> World:
    """Random obstacle layout for one trial.

    ``static_crowd``: static obstacles along the course. ``same_direction``:
    obstacles moving along the robot's direction at up to 0.3 m/s.
    ``opposite_direction``: obstacles walking towards the robot at 0.5-1.0 m/s,
    spread far enough ahead to cross the robot's path during the run.
    """
    if spec.which not in BENCHMARKS:
        raise ValueError(f"benchmark must be one of {BENCHMARKS}, got {spec.which!r}")
    fp = footprint or default_footprint()
    rng = np.random.default_rng(seed)
    length = spec.length
    robot_len = float(np.ptp(fp.offsets) + 2 * fp.circle_radius)
    clearance = robot_len + fp.circle_radius + spec.obstacle_radius
    x_lo, x_hi = 3.0, length
    if spec.which == "opposite_direction":
        x_hi = 2.0 * length
    obstacles = []
    while len(obstacles) < spec.n_obstacles:
        x = rng.uniform(x_lo, x_hi)
        y = rng.uniform(-spec.half_width, spec.half_width)
        if np.hypot(x, y) < clearance:
            continue
        if spec.which == "static_crowd":
            v = (0.0, 0.0)
        elif spec.which == "same_direction":
            v = (rng.uniform(0.0, 0.3), 0.0)
        else:
            v = (-rng.uniform(0.5, 1.0), 0.0)
        r = spec.obstacle_radius
        obstacles.append(ObstacleTrack((x, y), v, (r, r)))
    start = StartState(0.0, 0.0, 0.0, spec.desired_speed, 0.0)
    desired = DesiredLine((0.0, 0.0), (1.0, 0.0), spec.desired_speed, length)
    return World(fp, tuple(obstacles), start, desired)


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, 1_000_003, trial]).generate_state(1)[0])


def run_benchmark(which: str, trials: int, config: SimConfig = SimConfig(), seed: int = 0,
                  scale: float = 1.0) -> tuple[Metrics, list[TrialLog]]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    spec = BenchmarkSpec(which, scale)
    logs = []
    for k in range(trials):
        ts = trial_seed(seed, k)
        world = make_benchmark_world(spec, ts)
        logs.append(run_closed_loop(world, config, ts))
    return compute_metrics(logs), logs


# -- footprint comparison --------------------------------------------------------


@dataclass(frozen=True)
class GapSpec:
    """A wall of static circular obstacles across the path with one gap in it."""

    gap: float  # free width between the two obstacles bounding the gap, m
    wall_x: float = 6.0
    wall_half_length: float = 5.0
    post_radius: float = 0.5
    post_spacing: float = 1.0
    goal_x: float = 12.0


def make_gap_world(spec: GapSpec, footprint: Footprint) -> World:
    posts = []
    r = spec.post_radius
    y0 = spec.gap / 2 + r
    k = 0
    while y0 + k * spec.post_spacing <= spec.wall_half_length:
        for sign in (1.0, -1.0):
            posts.append(ObstacleTrack((spec.wall_x, sign * (y0 + k * spec.post_spacing)), (0.0, 0.0), (r, r)))
        k += 1
    start = StartState(0.0, 0.0, 0.0, 0.0, 0.0)
    desired = DesiredLine((0.0, 0.0), (1.0, 0.0), 0.6, spec.goal_x)
    return World(footprint, tuple(posts), start, desired)


def gap_specs(n: int, footprint_multi: Footprint, footprint_single: Footprint, seed: int = 0) -> list[GapSpec]:
    """Gaps strictly between the multi-circle and the single-circle diameters, with a 10% buffer at each end."""
    lo = 2 * footprint_multi.circle_radius
    hi = 2 * footprint_single.circle_radius
    rng = np.random.default_rng(seed)
    return [GapSpec(float(g)) for g in rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), n)]


@dataclass(frozen=True)
class FootprintResult:
    n_scenarios: int
    n_converged: int
    arc_length: Stat
    acceleration: Stat
    arc_lengths: tuple  # per scenario, nan when the planner did not converge


def plan_open_loop(world: World, solver: SolverConfig, horizon: float, q: int, batch_size: int,
                   noise: float, seed: int, margin: float = 0.0):
    basis = build_basis("bernstein", 10, horizon, q)
    scenario = Scenario(world.footprint, world.obstacles, world.start, world.desired,
                        world.v_max, world.a_max, horizon=horizon, q=q)
    matrices = assemble_matrices(scenario, basis, margin=margin)
    xi1, xi2 = sample_batch(scenario, basis, InitConfig(batch_size, noise, seed))
    sol = AMSolver(matrices, replace(solver, batch_size=batch_size)).optimize(xi1, xi2)
    return sol, basis


def path_length(basis: BasisMatrices, cx: np.ndarray, cy: np.ndarray, n: int = 2000) -> float:
    P, _, _ = basis.at(np.linspace(0.0, basis.horizon, n))
    return float(np.sum(np.hypot(np.diff(P @ cx), np.diff(P @ cy))))


def compare_footprints(specs: Sequence[GapSpec], footprints: dict[str, Footprint], solver: SolverConfig = SolverConfig(max_iters=50),
                       horizon: float = 20.0, q: int = 50, batch_size: int = 200, noise: float = 2.5,
                       seed: int = 0) -> dict[str, FootprintResult]:
    """Open-loop batch plans through each gap world for every footprint model."""
    out = {}
    for name, fp in footprints.items():
        arcs, accs = [], []
        for k, spec in enumerate(specs):
            world = make_gap_world(spec, fp)
            sol, basis = plan_open_loop(world, solver, horizon, q, batch_size, noise, trial_seed(seed, k))
            if not sol.any_converged:
                arcs.append(float("nan"))
                continue
            b = sol.best_index
            nv = basis.n_v
            x1 = sol.vars.xi1[b]
            arcs.append(path_length(basis, x1[:nv], x1[2 * nv : 3 * nv]))
            accs.append(float(np.mean(np.hypot(sol.xdd[b], sol.ydd[b]))))
        ok = [a for a in arcs if np.isfinite(a)]
        out[name] = FootprintResult(len(specs), len(ok), Stat.of(ok), Stat.of(accs), tuple(arcs))
    return out
