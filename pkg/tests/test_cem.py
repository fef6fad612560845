import numpy as np
import pytest
from hypothesis import given, strategies as st

from batchtraj.cem import CemConfig, _Projector, cem_optimize, evaluate_cost, initial_mean, penalties, rollout
from batchtraj.init_sampler import straight_line
from batchtraj.problem import Footprint, ObstacleTrack, boundary_pairs
from support import RECT, ellipse_values, line_scenario, problem, three_obstacles

SMALL = CemConfig(n_samples=400, n_iters=8, seed=0)


def test_config_validation():
    for bad in (dict(elite_frac=0.0), dict(elite_frac=1.5), dict(n_samples=9), dict(n_iters=0)):
        with pytest.raises(ValueError):
            CemConfig(**bad)
    assert CemConfig().n_samples == 8000 and CemConfig().n_elite == 800


def test_straight_line_costs_zero():
    sc = line_scenario()
    basis, mt = problem(sc)
    z = initial_mean(sc, mt)[None]
    assert evaluate_cost(rollout(mt, z), mt)[0] == pytest.approx(0.0, abs=1e-18)


def test_boundary_touch_has_zero_penalty():
    # single circle at the origin of the robot, obstacle ellipse boundary exactly at the robot centre
    fp = Footprint(np.array([0.0]), 0.25)
    sc = line_scenario([ObstacleTrack((0.0, 1.0), (0.0, 0.0), (0.75, 0.75))], footprint=fp)
    _, mt = problem(sc)
    traj = rollout(mt, np.zeros((1, 3 * mt.n_v)))
    assert np.allclose(ellipse_values(traj.x[0], traj.y[0], traj.psi[0], mt), 1.0)
    col, _, _ = penalties(traj, mt)
    assert col[0] == 0.0


@given(seed=st.integers(0, 10_000))
def test_penalties_match_pointwise_oracle(seed):
    sc = line_scenario(three_obstacles())
    basis, mt = problem(sc)
    rng = np.random.default_rng(seed)
    z = initial_mean(sc, mt)[None] + 0.8 * rng.standard_normal((3, 3 * mt.n_v))
    traj = rollout(mt, z)
    col, vel, acc = penalties(traj, mt)
    for k in range(3):
        val = ellipse_values(traj.x[k], traj.y[k], traj.psi[k], mt)
        expect_col = sum(max(0.0, 1.0 - v) for v in val.ravel())
        expect_vel = sum(max(0.0, traj.xd[k, t] ** 2 + traj.yd[k, t] ** 2 - mt.v_max**2) for t in range(mt.q))
        expect_acc = sum(max(0.0, traj.xdd[k, t] ** 2 + traj.ydd[k, t] ** 2 - mt.a_max**2) for t in range(mt.q))
        assert col[k] == pytest.approx(expect_col, rel=1e-12, abs=1e-12)
        assert vel[k] == pytest.approx(expect_vel, rel=1e-12, abs=1e-12)
        assert acc[k] == pytest.approx(expect_acc, rel=1e-12, abs=1e-12)
    cost = evaluate_cost(traj, mt)
    smooth = (traj.xdd**2 + traj.ydd**2 + traj.psidd**2).sum(axis=1)
    np.testing.assert_allclose(cost, smooth + 1e3 * (col + vel + acc), rtol=1e-12)


def test_obstacle_free_is_monotone_and_near_line():
    sc = line_scenario()
    basis, mt = problem(sc)
    res = cem_optimize(sc, mt, CemConfig(seed=0))  # default 8000 samples x 10 iterations
    assert np.all(np.diff(res.cost_trace) <= 0.0)
    line = straight_line(sc, basis)
    dev = np.hypot(res.rollout.x[0] - line[:, 0], res.rollout.y[0] - line[:, 1])
    assert dev.max() <= 0.1
    assert res.feasible


def test_elite_fraction_one_gives_sample_mean():
    sc = line_scenario(three_obstacles())
    basis, mt = problem(sc)
    cfg = CemConfig(n_samples=50, elite_frac=1.0, n_iters=1, seed=7, elitism=False)
    res = cem_optimize(sc, mt, cfg)
    nv = mt.n_v
    b = boundary_pairs(sc, basis)
    project = _Projector([b.x, b.y, b.psi], nv)
    std = np.concatenate([np.full(2 * nv, cfg.init_std), np.full(nv, cfg.heading_std)])
    z = project(initial_mean(sc, mt) + std * np.random.default_rng(7).standard_normal((50, 3 * nv)))
    np.testing.assert_allclose(res.mean, z.mean(axis=0), rtol=1e-12, atol=1e-12)


def test_single_obstacle_collision_free():
    sc = line_scenario([ObstacleTrack((5.0, 0.2), (0.0, 0.0), (0.5, 0.5))])
    _, mt = problem(sc)
    res = cem_optimize(sc, mt, CemConfig(n_samples=800, n_iters=10, seed=1))
    val = ellipse_values(res.rollout.x[0], res.rollout.y[0], res.rollout.psi[0], mt)
    assert val.min() >= 1.0


@given(seed=st.integers(0, 1000))
def test_boundary_rows_exact(seed):
    sc = line_scenario(three_obstacles())
    basis, mt = problem(sc)
    res = cem_optimize(sc, mt, CemConfig(n_samples=20, n_iters=2, seed=seed))
    nv = mt.n_v
    b = boundary_pairs(sc, basis)
    for k, pair in enumerate((b.x, b.y, b.psi)):
        assert np.abs(pair.A @ res.coeffs[k * nv : (k + 1) * nv] - pair.b).max() <= 1e-9


@given(seed=st.integers(0, 1000))
def test_elitism_trace_monotone(seed):
    sc = line_scenario(three_obstacles())
    _, mt = problem(sc)
    res = cem_optimize(sc, mt, CemConfig(n_samples=40, n_iters=6, seed=seed))
    assert np.all(np.diff(res.cost_trace) <= 0.0)


def test_trace_reproducible():
    sc = line_scenario(three_obstacles(), footprint=RECT)
    _, mt = problem(sc)
    a = cem_optimize(sc, mt, SMALL)
    b = cem_optimize(sc, mt, SMALL)
    np.testing.assert_array_equal(a.cost_trace, b.cost_trace)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)


def test_covariance_floor():
    sc = line_scenario()
    _, mt = problem(sc)
    res = cem_optimize(sc, mt, CemConfig(n_samples=10, elite_frac=0.1, n_iters=3, seed=0))
    # a single elite has zero spread, so the floor takes over
    assert np.all(res.std >= np.sqrt(1e-8) - 1e-18)
