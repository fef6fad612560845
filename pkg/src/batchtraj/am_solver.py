"""Batch alternating-minimization trajectory optimizer.

Each iteration updates, for every instance in the batch:

1. ``xi1`` (x, y and the cos/sin copies) by one shared-factorization KKT solve,
2. ``xi2`` (heading) by a second KKT solve towards ``arctan2(s, c)``,
3. ``xi3`` line-of-sight angles in closed form,
4. ``xi4`` scales in closed form, clipped to their feasible ranges,
5. the multipliers by a gradient step on the penalty.

Both KKT matrices depend only on the problem and the penalty weights, so
they are factorized once per solver and reused across iterations and
instances.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .batch_qp import factorize, solve_batch
from .kernels import get_kernels
from .kernels.numpy_impl import _relative
from .problem import Angles, ProblemMatrices, Scales

ALPHA_RULES = ("plain_arctan2", "scaled_arctan2")


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1.0
    rho_psi: float = 1.0
    max_iters: int = 20
    residual_tol: float = 1e-3  # on the worst-row normalized residuals
    batch_size: int = 100
    alpha_rule: str = "plain_arctan2"
    tracking_weight: float = 1.0
    freeze_converged: bool = True  # stop updating an instance once it meets the tolerance
    early_stop: bool = False  # stop once every instance has converged
    backend: Optional[str] = None

    def __post_init__(self):
        if not (self.rho > 0 and self.rho_psi > 0):
            raise ValueError("rho and rho_psi must be positive")
        if self.max_iters < 1 or self.batch_size < 1:
            raise ValueError("max_iters and batch_size must be >= 1")
        if self.alpha_rule not in ALPHA_RULES:
            raise ValueError(f"alpha_rule must be one of {ALPHA_RULES}")


@dataclass
class BatchVars:
    xi1: np.ndarray  # (L, 4 n_v): c_x, c_c, c_y, c_s
    xi2: np.ndarray  # (L, n_v): c_psi
    xi3: Angles
    xi4: Scales
    lam: np.ndarray  # (L, 4 n_v)
    lam_psi: np.ndarray  # (L, n_v)

    @property
    def L(self) -> int:
        return self.xi1.shape[0]


@dataclass
class _Samples:
    x: np.ndarray
    y: np.ndarray
    c: np.ndarray
    s: np.ndarray
    xd: np.ndarray
    yd: np.ndarray
    xdd: np.ndarray
    ydd: np.ndarray


@dataclass
class _GParts:
    """The right-hand side ``g`` in summed form, enough for ``F.T @ g`` and the residual."""

    vx: np.ndarray
    vy: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    cpsi: np.ndarray
    spsi: np.ndarray
    Sx: np.ndarray
    Rx: np.ndarray
    Sy: np.ndarray
    Ry: np.ndarray
    col_sq: np.ndarray
    col_max_scaled: np.ndarray


@dataclass
class BatchSolution:
    x: np.ndarray  # (L, q)
    y: np.ndarray
    psi: np.ndarray
    xd: np.ndarray
    yd: np.ndarray
    xdd: np.ndarray
    ydd: np.ndarray
    psid: np.ndarray
    psidd: np.ndarray
    c: np.ndarray
    s: np.ndarray
    vars: BatchVars
    primal_residual: np.ndarray  # (L,) raw ||F xi1 - g||
    heading_residual: np.ndarray  # (L,) ||wrap(arctan2(s, c) - P xi2)||
    primal_residual_normalized: np.ndarray  # (L,) worst row, in units of the bounds
    heading_residual_max: np.ndarray  # (L,) worst time step, radians
    smoothness_cost: np.ndarray  # (L,)
    tracking_cost: np.ndarray  # (L,)
    converged: np.ndarray  # (L,) bool
    iters_to_converge: np.ndarray  # (L,) int, -1 when not converged
    n_iters: int
    best_index: int
    residual_history: np.ndarray  # (n_iters, L, 2) normalized primal, worst heading
    iteration_times: list = field(default_factory=list)
    snapshots: Optional[list] = None  # per iteration (x, y) arrays

    @property
    def L(self) -> int:
        return self.x.shape[0]

    @property
    def any_converged(self) -> bool:
        return bool(self.converged.any())


def wrap_angle(a):
    """Shortest signed angle, in [-pi, pi)."""
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


def heading_target(c: np.ndarray, s: np.ndarray, psi0: float) -> np.ndarray:
    """``arctan2(s, c)`` unwrapped along time, on the 2*pi branch nearest ``psi0`` at t=0."""
    raw = np.unwrap(np.arctan2(s, c), axis=-1)
    shift = np.round((psi0 - raw[..., :1]) / (2 * np.pi)) * 2 * np.pi
    return raw + shift


class AMSolver:
    """Holds the factorized KKT systems for one problem and penalty setting."""

    def __init__(self, matrices: ProblemMatrices, config: SolverConfig = SolverConfig()):
        self.matrices = matrices
        self.config = config
        self.kernels = get_kernels(config.backend)
        P, Pdd = matrices.basis.P, matrices.basis.Pdd
        self._Qbar1 = matrices.Q + config.rho * matrices.FtF
        self._Qbar2 = Pdd.T @ Pdd + config.rho_psi * (P.T @ P)
        self._kkt1 = factorize(self._Qbar1, matrices.boundary.A)
        self._kkt2 = factorize(self._Qbar2, matrices.boundary_psi.A)
        self._psi0 = float(matrices.boundary_psi.b[0])

    # -- sampling ---------------------------------------------------------

    def _sample(self, xi1: np.ndarray) -> _Samples:
        b, nv = self.matrices.basis, self.matrices.n_v
        cx, cc, cy, cs = (xi1[:, k * nv : (k + 1) * nv] for k in range(4))
        return _Samples(
            x=cx @ b.P.T,
            y=cy @ b.P.T,
            c=cc @ b.P.T,
            s=cs @ b.P.T,
            xd=cx @ b.Pd.T,
            yd=cy @ b.Pd.T,
            xdd=cx @ b.Pdd.T,
            ydd=cy @ b.Pdd.T,
        )

    def _psi(self, xi2: np.ndarray) -> np.ndarray:
        return xi2 @ self.matrices.basis.P.T

    # -- right-hand side ----------------------------------------------------

    def _g_parts(self, vars: BatchVars, samp: _Samples, trig=None) -> _GParts:
        """``trig`` optionally carries cos/sin of ``vars.xi3.ob`` to skip recomputing them."""
        mt = self.matrices
        psi = self._psi(vars.xi2)
        ca, sa = trig if trig is not None else (np.cos(vars.xi3.ob), np.sin(vars.xi3.ob))
        cpsi, spsi = np.cos(psi), np.sin(psi)
        Sx, Rx, Sy, Ry, col_sq, col_max_scaled = self.kernels.collision_targets(
            samp.x, samp.y, samp.c, samp.s, cpsi, spsi,
            mt.obstacle_x, mt.obstacle_y, mt.a_eff, mt.b_eff, mt.offsets,
            ca, sa, vars.xi4.ob,
        )
        return _GParts(
            vx=vars.xi4.v * mt.v_max * np.cos(vars.xi3.v),
            vy=vars.xi4.v * mt.v_max * np.sin(vars.xi3.v),
            ax=vars.xi4.a * mt.a_max * np.cos(vars.xi3.a),
            ay=vars.xi4.a * mt.a_max * np.sin(vars.xi3.a),
            cpsi=cpsi,
            spsi=spsi,
            Sx=Sx, Rx=Rx, Sy=Sy, Ry=Ry,
            col_sq=col_sq, col_max_scaled=col_max_scaled,
        )

    def _ft_g(self, g: _GParts) -> np.ndarray:
        b = self.matrices.basis
        fx = g.vx @ b.Pd + g.ax @ b.Pdd + g.Sx @ b.P
        fc = g.Rx @ b.P + g.cpsi @ b.P
        fy = g.vy @ b.Pd + g.ay @ b.Pdd + g.Sy @ b.P
        fs = g.Ry @ b.P + g.spsi @ b.P
        return np.hstack([fx, fc, fy, fs])

    def _residual_from_parts(self, samp: _Samples, g: _GParts):
        mt = self.matrices
        ev = (samp.xd - g.vx) ** 2 + (samp.yd - g.vy) ** 2
        ea = (samp.xdd - g.ax) ** 2 + (samp.ydd - g.ay) ** 2
        ec = (samp.c - g.cpsi) ** 2 + (samp.s - g.spsi) ** 2
        raw = ev.sum(1) + ea.sum(1) + ec.sum(1) + g.col_sq
        worst = np.maximum.reduce([
            ev.max(1, initial=0.0) / mt.v_max**2,
            ea.max(1, initial=0.0) / mt.a_max**2,
            ec.max(1, initial=0.0),
            g.col_max_scaled,
        ])
        return np.sqrt(raw), np.sqrt(worst)

    # -- sub-steps ----------------------------------------------------------

    def update_xi1(self, vars: BatchVars, g: Optional[_GParts] = None) -> np.ndarray:
        if g is None:
            g = self._g_parts(vars, self._sample(vars.xi1))
        qbar = -vars.lam - self.config.rho * self._ft_g(g)
        xi1, _ = solve_batch(self._kkt1, qbar, self.matrices.boundary.b)
        return xi1

    def update_xi2(self, vars: BatchVars, samp: Optional[_Samples] = None) -> np.ndarray:
        samp = samp or self._sample(vars.xi1)
        target = heading_target(samp.c, samp.s, self._psi0)
        qbar = -vars.lam_psi - self.config.rho_psi * (target @ self.matrices.basis.P)
        xi2, _ = solve_batch(self._kkt2, qbar, self.matrices.boundary_psi.b)
        return xi2

    def _polar(self, vars: BatchVars, samp: _Samples, out=None):
        """Returns ``(angles, scales, (cos, sin) of the obstacle angles)``; ``out`` as for the kernel."""
        mt = self.matrices
        psi = self._psi(vars.xi2)
        alpha_ob, d_ob, ca, sa = self.kernels.polar_collision(
            samp.x, samp.y, np.cos(psi), np.sin(psi),
            mt.obstacle_x, mt.obstacle_y, mt.a_eff, mt.b_eff, mt.offsets,
            self.config.alpha_rule == "scaled_arctan2", out=out,
        )
        alpha_v = np.arctan2(samp.yd, samp.xd)
        alpha_a = np.arctan2(samp.ydd, samp.xdd)
        angles = Angles(alpha_ob, alpha_v, alpha_a)
        d_v = np.clip((samp.xd * np.cos(alpha_v) + samp.yd * np.sin(alpha_v)) / mt.v_max, 0.0, 1.0)
        d_a = np.clip((samp.xdd * np.cos(alpha_a) + samp.ydd * np.sin(alpha_a)) / mt.a_max, 0.0, 1.0)
        return angles, Scales(d_ob, d_v, d_a), (ca, sa)

    def update_xi3(self, vars: BatchVars) -> Angles:
        angles, _, _ = self._polar(vars, self._sample(vars.xi1))
        return angles

    def update_xi4(self, vars: BatchVars) -> Scales:
        """Exact clipped minimizers of the per-element 1-D quadratics, for the angles in ``vars.xi3``."""
        mt = self.matrices
        samp = self._sample(vars.xi1)
        psi = self._psi(vars.xi2)
        xt, yt = _relative(samp.x, samp.y, np.cos(psi), np.sin(psi), mt.obstacle_x, mt.obstacle_y, mt.offsets)
        A = mt.a_eff[None, :, None, None]
        B = mt.b_eff[None, :, None, None]
        ca, sa = np.cos(vars.xi3.ob), np.sin(vars.xi3.ob)
        d_ob = np.maximum((A * xt * ca + B * yt * sa) / (A * A * ca * ca + B * B * sa * sa), 1.0)
        d_v = np.clip((samp.xd * np.cos(vars.xi3.v) + samp.yd * np.sin(vars.xi3.v)) / mt.v_max, 0.0, 1.0)
        d_a = np.clip((samp.xdd * np.cos(vars.xi3.a) + samp.ydd * np.sin(vars.xi3.a)) / mt.a_max, 0.0, 1.0)
        return Scales(d_ob, d_v, d_a)

    def update_lambda(self, vars: BatchVars, g: Optional[_GParts] = None, samp: Optional[_Samples] = None):
        samp = samp or self._sample(vars.xi1)
        if g is None:
            g = self._g_parts(vars, samp)
        cfg = self.config
        lam = vars.lam - cfg.rho * (vars.xi1 @ self.matrices.FtF - self._ft_g(g))
        target = heading_target(samp.c, samp.s, self._psi0)
        err = self._psi(vars.xi2) - target
        lam_psi = vars.lam_psi - cfg.rho_psi * (err @ self.matrices.basis.P)
        return lam, lam_psi

    def residuals(self, vars: BatchVars, normalized: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Per-instance primal residual ``||F xi1 - g||`` and heading residual ``||wrap(arctan2(s, c) - P xi2)||``.

        With ``normalized`` both become the convergence measures instead: the
        worst single row, each row scaled by its natural unit (v_max, a_max,
        obstacle semi-axes), and the worst heading error over time. These do
        not grow with the number of obstacles or samples.
        """
        samp = self._sample(vars.xi1)
        raw, scaled = self._residual_from_parts(samp, self._g_parts(vars, samp))
        if normalized:
            return scaled, self._heading_residual(vars, samp, worst=True)
        return raw, self._heading_residual(vars, samp)

    def _heading_residual(self, vars: BatchVars, samp: _Samples, worst: bool = False) -> np.ndarray:
        target = heading_target(samp.c, samp.s, self._psi0)
        err = wrap_angle(target - self._psi(vars.xi2))
        if worst:
            return np.abs(err).max(axis=1)
        return np.linalg.norm(err, axis=1)

    # -- driver -------------------------------------------------------------

    def initial_vars(self, xi1: np.ndarray, xi2: np.ndarray, warm_multipliers=None) -> BatchVars:
        xi1 = np.array(xi1, dtype=np.float64, ndmin=2)
        xi2 = np.array(xi2, dtype=np.float64, ndmin=2)
        L = xi1.shape[0]
        if xi2.shape[0] != L:
            raise ValueError(f"xi1 has {L} instances, xi2 has {xi2.shape[0]}")
        if warm_multipliers is None:
            lam = np.zeros_like(xi1)
            lam_psi = np.zeros_like(xi2)
        else:
            lam = np.broadcast_to(np.asarray(warm_multipliers[0], dtype=np.float64), xi1.shape).copy()
            lam_psi = np.broadcast_to(np.asarray(warm_multipliers[1], dtype=np.float64), xi2.shape).copy()
        empty = Angles(np.zeros((L, 0, 0, 0)), np.zeros((L, 0)), np.zeros((L, 0)))
        vars = BatchVars(xi1, xi2, empty, Scales(*empty), lam, lam_psi)
        vars.xi3, vars.xi4, _ = self._polar(vars, self._sample(xi1))
        return vars

    def optimize(self, init_xi1, init_xi2, warm_multipliers=None, record_snapshots: bool = False) -> BatchSolution:
        """Run the AM iterations on a batch of seeds.

        With ``freeze_converged`` an instance stops updating at the first
        iteration where it meets the tolerance. Otherwise the multipliers keep
        integrating the small cos/sin fitting residual and slowly push the
        trajectory away from the obstacles.
        """
        cfg = self.config
        vars = self.initial_vars(init_xi1, init_xi2, warm_multipliers)
        L = vars.L
        samp = self._sample(vars.xi1)
        g = self._g_parts(vars, samp)
        history = []
        times = []
        snapshots = [] if record_snapshots else None
        stable_since = np.full(L, -1)
        active = np.ones(L, dtype=bool)
        # the (L, n, m, q) angle/scale arrays alternate between two buffers so the previous
        # iteration stays readable for frozen rows; cos/sin are scratch
        shape = vars.xi3.ob.shape
        trig_buf = (np.empty(shape), np.empty(shape))
        buffers = [(np.empty(shape), np.empty(shape)) for _ in range(2)]
        for k in range(cfg.max_iters):
            t0 = time.perf_counter()
            old = (vars, samp, g)
            vars = replace(vars)
            vars.xi1 = self.update_xi1(vars, g)
            samp = self._sample(vars.xi1)
            vars.xi2 = self.update_xi2(vars, samp)
            vars.xi3, vars.xi4, trig = self._polar(vars, samp, buffers[k % 2] + trig_buf)
            g = self._g_parts(vars, samp, trig)
            vars.lam, vars.lam_psi = self.update_lambda(vars, g, samp)
            if not active.all():
                vars, samp, g = (_pick_rows(active, new, prev) for new, prev in zip((vars, samp, g), old))
            _, primal_n = self._residual_from_parts(samp, g)
            heading = self._heading_residual(vars, samp, worst=True)
            times.append(time.perf_counter() - t0)

            history.append(np.stack([primal_n, heading], axis=1))
            ok = (primal_n <= cfg.residual_tol) & (heading <= cfg.residual_tol)
            stable_since = np.where(ok, np.where(stable_since < 0, k + 1, stable_since), -1)
            if cfg.freeze_converged:
                active &= ~ok
            if snapshots is not None:
                snapshots.append((samp.x.copy(), samp.y.copy()))
            if cfg.early_stop and ok.all():
                break
        return self._finish(vars, samp, g, np.array(history), times, stable_since, snapshots)

    def _finish(self, vars, samp, g, history, times, stable_since, snapshots) -> BatchSolution:
        mt, cfg = self.matrices, self.config
        b = mt.basis
        psi = vars.xi2 @ b.P.T
        psid = vars.xi2 @ b.Pd.T
        psidd = vars.xi2 @ b.Pdd.T
        raw, scaled = self._residual_from_parts(samp, g)
        heading = self._heading_residual(vars, samp)
        heading_max = self._heading_residual(vars, samp, worst=True)
        converged = (scaled <= cfg.residual_tol) & (heading_max <= cfg.residual_tol)
        smooth = 0.5 * ((samp.xdd**2 + samp.ydd**2 + psidd**2).sum(axis=1))
        track = ((samp.x - mt.desired_xy[0]) ** 2 + (samp.y - mt.desired_xy[1]) ** 2).sum(axis=1) * b.dt
        sol = BatchSolution(
            x=samp.x, y=samp.y, psi=psi, xd=samp.xd, yd=samp.yd, xdd=samp.xdd, ydd=samp.ydd,
            psid=psid, psidd=psidd, c=samp.c, s=samp.s, vars=vars,
            primal_residual=raw, heading_residual=heading, primal_residual_normalized=scaled,
            heading_residual_max=heading_max,
            smoothness_cost=smooth, tracking_cost=track, converged=converged,
            iters_to_converge=np.where(converged, stable_since, -1),
            n_iters=len(history), best_index=0, residual_history=history,
            iteration_times=times, snapshots=snapshots,
        )
        sol.best_index = select_best(sol, tracking_weight=cfg.tracking_weight)
        return sol


def _pick_rows(active: np.ndarray, new, old):
    """Batch rows of ``new`` where ``active``, rows of ``old`` elsewhere (arrays, tuples or dataclasses).

    Arrays of ``new`` are overwritten in place, so they must not be shared with ``old``.
    """
    if isinstance(new, np.ndarray):
        np.copyto(new, old, where=~active.reshape((-1,) + (1,) * (new.ndim - 1)))
        return new
    if isinstance(new, tuple):
        return type(new)(*(_pick_rows(active, a, b) for a, b in zip(new, old)))
    return type(new)(**{f.name: _pick_rows(active, getattr(new, f.name), getattr(old, f.name)) for f in fields(new)})


def select_best(solution: BatchSolution, tracking_weight: float = 1.0) -> int:
    """Lowest smoothness + tracking cost among converged instances; lowest residual otherwise.

    Ties go to the lowest index.
    """
    if solution.L == 0:
        raise ValueError("empty batch")
    if solution.converged.any():
        cost = solution.smoothness_cost + tracking_weight * solution.tracking_cost
        cost = np.where(solution.converged, cost, np.inf)
        return int(np.argmin(cost))
    return int(np.argmin(solution.primal_residual_normalized + solution.heading_residual_max))


def optimize(matrices: ProblemMatrices, init_xi1, init_xi2, config: SolverConfig = SolverConfig(),
             warm_multipliers=None, record_snapshots: bool = False) -> BatchSolution:
    return AMSolver(matrices, config).optimize(init_xi1, init_xi2, warm_multipliers, record_snapshots)
