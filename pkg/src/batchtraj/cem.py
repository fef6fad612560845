"""Cross-entropy-method baseline over the same polynomial coefficients.

The search space is ``(c_x, c_y, c_psi)``; every sample is projected onto the
boundary rows, so CEM and the AM solver share basis and boundary handling and
differ only in the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BoundaryPair
from .init_sampler import fit_coefficients, line_heading, straight_line
from .kernels import get_kernels
from .problem import ProblemMatrices, Scenario, boundary_pairs


@dataclass(frozen=True)
class CemConfig:
    n_samples: int = 8000
    elite_frac: float = 0.1
    n_iters: int = 10
    w_collision: float = 1e3
    w_velocity: float = 1e3
    w_acceleration: float = 1e3
    init_std: float = 1.0  # metres, on the x/y coefficients
    heading_std: float = 0.3  # radians, on the heading coefficients
    cov_floor: float = 1e-8  # variance floor per coefficient
    elitism: bool = True
    seed: int = 0
    backend: str | None = None

    def __post_init__(self):
        if not 0 < self.elite_frac <= 1:
            raise ValueError("elite_frac must be in (0, 1]")
        if self.n_samples < 10:
            raise ValueError("n_samples must be >= 10")
        if self.n_iters < 1:
            raise ValueError("n_iters must be >= 1")

    @property
    def n_elite(self) -> int:
        return max(1, int(round(self.elite_frac * self.n_samples)))


@dataclass
class Rollout:
    """Sampled trajectories, each array (N, q)."""

    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    xd: np.ndarray
    yd: np.ndarray
    xdd: np.ndarray
    ydd: np.ndarray
    psid: np.ndarray
    psidd: np.ndarray


@dataclass
class CemResult:
    coeffs: np.ndarray  # (3 n_v,) best c_x, c_y, c_psi
    rollout: Rollout  # best trajectory, arrays of shape (1, q)
    best_cost: float
    cost_trace: np.ndarray  # (n_iters,) best cost after each iteration
    mean: np.ndarray  # final sampling mean
    std: np.ndarray  # final sampling std
    feasible: bool  # zero penalty on the best trajectory


class _Projector:
    """Orthogonal projection onto ``A z = b`` for the stacked (x, y, psi) coefficients."""

    def __init__(self, pairs: list[BoundaryPair], n_v: int):
        self.parts = []
        for k, p in enumerate(pairs):
            if p.n_b:
                pinv = p.A.T @ np.linalg.inv(p.A @ p.A.T)
                self.parts.append((slice(k * n_v, (k + 1) * n_v), p.A, p.b, pinv))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = z.copy()
        for sl, A, b, pinv in self.parts:
            z[:, sl] -= (z[:, sl] @ A.T - b) @ pinv.T
        return z


def rollout(matrices: ProblemMatrices, z: np.ndarray) -> Rollout:
    b, nv = matrices.basis, matrices.n_v
    cx, cy, cp = z[:, :nv], z[:, nv : 2 * nv], z[:, 2 * nv :]
    return Rollout(
        x=cx @ b.P.T, y=cy @ b.P.T, psi=cp @ b.P.T,
        xd=cx @ b.Pd.T, yd=cy @ b.Pd.T, xdd=cx @ b.Pdd.T, ydd=cy @ b.Pdd.T,
        psid=cp @ b.Pd.T, psidd=cp @ b.Pdd.T,
    )


def penalties(traj: Rollout, matrices: ProblemMatrices, backend: str | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Summed hinge violations (collision, velocity, acceleration) per trajectory."""
    mt = matrices
    col = get_kernels(backend).collision_penalty(
        traj.x, traj.y, np.cos(traj.psi), np.sin(traj.psi),
        mt.obstacle_x, mt.obstacle_y, mt.a_eff, mt.b_eff, mt.offsets,
    )
    vel = np.maximum(0.0, traj.xd**2 + traj.yd**2 - mt.v_max**2).sum(axis=1)
    acc = np.maximum(0.0, traj.xdd**2 + traj.ydd**2 - mt.a_max**2).sum(axis=1)
    return col, vel, acc


def evaluate_cost(traj: Rollout, matrices: ProblemMatrices, config: CemConfig = CemConfig()) -> np.ndarray:
    """Smoothness plus weighted hinge penalties, shape (N,)."""
    smooth = (traj.xdd**2 + traj.ydd**2 + traj.psidd**2).sum(axis=1)
    col, vel, acc = penalties(traj, matrices, config.backend)
    return smooth + config.w_collision * col + config.w_velocity * vel + config.w_acceleration * acc


def initial_mean(scenario: Scenario, matrices: ProblemMatrices) -> np.ndarray:
    """Straight-line coefficients with the line heading, fitted to the boundary rows."""
    basis = matrices.basis
    bounds = boundary_pairs(scenario, basis)
    line = straight_line(scenario, basis)
    cx = fit_coefficients(basis, bounds.x, line[:, 0])
    cy = fit_coefficients(basis, bounds.y, line[:, 1])
    cp = fit_coefficients(basis, bounds.psi, np.full(basis.q, line_heading(scenario)))
    return np.concatenate([cx[0], cy[0], cp[0]])


def cem_optimize(scenario: Scenario, matrices: ProblemMatrices, config: CemConfig = CemConfig()) -> CemResult:
    nv = matrices.n_v
    bounds = boundary_pairs(scenario, matrices.basis)
    project = _Projector([bounds.x, bounds.y, bounds.psi], nv)
    rng = np.random.default_rng(config.seed)

    mean = initial_mean(scenario, matrices)
    std = np.concatenate([np.full(2 * nv, config.init_std), np.full(nv, config.heading_std)])
    elites = np.zeros((0, 3 * nv))
    elite_cost = np.zeros(0)
    trace = []
    for _ in range(config.n_iters):
        z = project(mean + std * rng.standard_normal((config.n_samples, 3 * nv)))
        cost = evaluate_cost(rollout(matrices, z), matrices, config)
        if config.elitism and elites.shape[0]:
            z = np.vstack([elites, z])
            cost = np.concatenate([elite_cost, cost])
        order = np.argsort(cost, kind="stable")[: config.n_elite]
        elites, elite_cost = z[order], cost[order]
        mean = elites.mean(axis=0)
        std = np.sqrt(np.maximum(elites.var(axis=0), config.cov_floor))
        trace.append(elite_cost[0])

    best = elites[0]
    traj = rollout(matrices, best[None, :])
    col, vel, acc = penalties(traj, matrices, config.backend)
    feasible = bool(col[0] == 0.0 and vel[0] == 0.0 and acc[0] == 0.0)
    return CemResult(best, traj, float(elite_cost[0]), np.array(trace), mean, std, feasible)
