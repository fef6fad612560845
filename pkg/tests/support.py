"""Scenario factories and independent oracles shared by the tests."""

from __future__ import annotations

import numpy as np

from batchtraj.basis import build_basis
from batchtraj.problem import Angles, DesiredLine, Footprint, ObstacleTrack, Scales, Scenario, StartState, assemble_matrices

RECT = Footprint.from_rectangle(1.2, 0.5, 3)


def line_scenario(obstacles=(), footprint=RECT, speed=1.0, length=10.0, horizon=10.0, q=50, **kw) -> Scenario:
    return Scenario(footprint, list(obstacles), StartState(0.0, 0.0, 0.0, speed, 0.0),
                    DesiredLine((0.0, 0.0), (1.0, 0.0), speed, length), 1.5, 1.5, horizon=horizon, q=q, **kw)


def problem(scenario: Scenario, margin=0.0):
    basis = build_basis("bernstein", 10, scenario.horizon, scenario.q)
    return basis, assemble_matrices(scenario, basis, margin=margin)


def random_obstacle_scenarios(n: int = 20, seed: int = 1) -> list[Scenario]:
    """Alternating one- and two-obstacle scenes with circular obstacles near the straight path."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        obs = []
        for _ in range(1 + k % 2):
            r = rng.uniform(0.3, 0.6)
            obs.append(ObstacleTrack((rng.uniform(3.5, 7.5), rng.uniform(-0.6, 0.6)),
                                     (rng.uniform(-0.3, 0.0), rng.uniform(-0.1, 0.1)), (r, r)))
        out.append(line_scenario(obs))
    return out


def ellipse_values(x, y, psi, matrices) -> np.ndarray:
    """((x + r cos psi - x_j)/a)^2 + ((y + r sin psi - y_j)/b)^2 per (obstacle, circle, time), by explicit loops."""
    mt = matrices
    out = np.empty((mt.n, mt.m, x.size))
    for j in range(mt.n):
        for i, r in enumerate(mt.offsets):
            for t in range(x.size):
                xt = x[t] + r * np.cos(psi[t]) - mt.obstacle_x[j, t]
                yt = y[t] + r * np.sin(psi[t]) - mt.obstacle_y[j, t]
                out[j, i, t] = (xt / mt.a_eff[j]) ** 2 + (yt / mt.b_eff[j]) ** 2
    return out


def dense_kkt_solve(Qbar, A, qbar, b):
    """One instance via numpy's dense solver on the assembled KKT matrix."""
    n, nb = Qbar.shape[0], A.shape[0]
    K = np.block([[Qbar, A.T], [A, np.zeros((nb, nb))]])
    sol = np.linalg.solve(K, np.concatenate([-qbar, b]))
    return sol[:n], sol[n:]


def three_obstacles():
    return [ObstacleTrack((4.0, 1.0), (-0.2, 0.0), (0.5, 0.3)), ObstacleTrack((6.0, -1.0), (0.0, 0.1), (0.4, 0.4)),
            ObstacleTrack((8.0, 0.0), (0.0, 0.0), (0.3, 0.6))]


def feasible_instance(mt, seed=0, psi0=0.4):
    """Random x/y coefficients with constant heading, and the angles/scales that make ``F xi1 = g`` exactly."""
    rng = np.random.default_rng(seed)
    nv, b = mt.n_v, mt.basis
    cx, cy = rng.standard_normal(nv), rng.standard_normal(nv)
    xi1 = np.concatenate([cx, np.full(nv, np.cos(psi0)), cy, np.full(nv, np.sin(psi0))])[None]
    xi2 = np.full((1, nv), psi0)
    x, y = b.P @ cx, b.P @ cy
    xd, yd, xdd, ydd = b.Pd @ cx, b.Pd @ cy, b.Pdd @ cx, b.Pdd @ cy
    A = mt.a_eff[:, None, None]
    B = mt.b_eff[:, None, None]
    xt = x + mt.offsets[None, :, None] * np.cos(psi0) - mt.obstacle_x[:, None, :]
    yt = y + mt.offsets[None, :, None] * np.sin(psi0) - mt.obstacle_y[:, None, :]
    ang = Angles(np.arctan2(yt / B, xt / A)[None], np.arctan2(yd, xd)[None], np.arctan2(ydd, xdd)[None])
    sc = Scales(np.hypot(xt / A, yt / B)[None], (np.hypot(xd, yd) / mt.v_max)[None], (np.hypot(xdd, ydd) / mt.a_max)[None])
    return xi1, xi2, ang, sc


def two_gap_scenario() -> Scenario:
    """A central obstacle on the straight path with a wall above and below, leaving one gap on each side."""
    obs = [ObstacleTrack((5.0, 0.0), (0.0, 0.0), (0.6, 0.6))]
    for y in (2.4, 3.4, 4.4):
        for sign in (1.0, -1.0):
            obs.append(ObstacleTrack((5.0, sign * y), (0.0, 0.0), (0.5, 0.5)))
    return line_scenario(obs)


def signed_area(x, y, centre) -> float:
    """Twice the signed area swept about ``centre``; negative when passing it on the left of travel along +x."""
    dx, dy = np.asarray(x) - centre[0], np.asarray(y) - centre[1]
    return float(np.sum(dx[:-1] * dy[1:] - dx[1:] * dy[:-1]))
