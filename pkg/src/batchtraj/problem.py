"""Scenario data model and the stacked constraint system ``F xi1 = g``.

Row layout of ``F`` (two identical channel blocks, x then y)::

    [Pd  0 ]   velocity         (q rows)
    [Pdd 0 ]   acceleration     (q rows)
    [P r_i P]  collision        (n*m*q rows, obstacle-major, circle-minor)
    [0   P ]   cos/sin copy     (q rows)

acting on ``(c_x, c_c)`` for the x block and ``(c_y, c_s)`` for the y block,
so ``xi1 = (c_x, c_c, c_y, c_s)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .basis import BasisMatrices, BoundaryPair, ChannelBoundary, block_boundary, build_boundary


@dataclass(frozen=True)
class Footprint:
    offsets: np.ndarray  # (m,) signed distances along the heading axis
    circle_radius: float

    def __post_init__(self):
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=np.float64))
        if offsets.size < 1 or not np.all(np.isfinite(offsets)):
            raise ValueError("footprint needs at least one finite offset")
        if not self.circle_radius > 0:
            raise ValueError(f"circle_radius must be positive, got {self.circle_radius}")
        object.__setattr__(self, "offsets", offsets)

    @property
    def m(self) -> int:
        return self.offsets.size

    @classmethod
    def from_rectangle(cls, length: float, width: float, n_circles: int) -> Footprint:
        """Equal circles centred along the long axis whose union covers the rectangle."""
        seg = length / n_circles
        offsets = -length / 2 + seg * (np.arange(n_circles) + 0.5)
        return cls(offsets, float(np.hypot(seg / 2, width / 2)))


@dataclass(frozen=True)
class ObstacleTrack:
    initial_position: tuple[float, float]
    velocity: tuple[float, float]
    semi_axes: tuple[float, float]

    def __post_init__(self):
        if not (self.semi_axes[0] > 0 and self.semi_axes[1] > 0):
            raise ValueError(f"semi-axes must be positive, got {self.semi_axes}")

    def position(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        p0 = np.asarray(self.initial_position, dtype=np.float64)
        v = np.asarray(self.velocity, dtype=np.float64)
        return p0 + v * t[..., None]


@dataclass(frozen=True)
class StartState:
    x: float
    y: float
    psi: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    ax: float = 0.0
    ay: float = 0.0
    psid: float = 0.0
    psidd: float = 0.0


@dataclass(frozen=True)
class DesiredLine:
    """Constant-speed straight line ``origin + direction * speed * t``, stopping after ``length`` metres."""

    origin: tuple[float, float]
    direction: tuple[float, float]
    speed: float
    length: Optional[float] = None

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        norm = np.linalg.norm(d)
        if not norm > 0:
            raise ValueError("desired direction must be nonzero")
        object.__setattr__(self, "direction", tuple(float(v) for v in d / norm))

    def point(self, t) -> np.ndarray:
        s = self.speed * np.asarray(t, dtype=np.float64)
        if self.length is not None:
            s = np.minimum(s, self.length)
        return np.asarray(self.origin) + np.asarray(self.direction) * s[..., None]

    @property
    def goal(self) -> Optional[np.ndarray]:
        if self.length is None:
            return None
        return np.asarray(self.origin) + np.asarray(self.direction) * self.length


@dataclass(frozen=True)
class Scenario:
    footprint: Footprint
    obstacles: Sequence[ObstacleTrack]
    start: StartState
    desired: DesiredLine
    v_max: float
    a_max: float
    horizon: float = 10.0
    q: int = 50
    t_start: float = 0.0  # absolute time of the horizon's first sample on the desired line
    pin_final: bool = True
    final_override: Optional[tuple[float, float]] = None  # pinned endpoint instead of the desired line point

    def __post_init__(self):
        if not (self.v_max > 0 and self.a_max > 0):
            raise ValueError("v_max and a_max must be positive")
        if self.desired.speed > self.v_max:
            raise ValueError(f"desired speed {self.desired.speed} exceeds v_max {self.v_max}")
        object.__setattr__(self, "obstacles", tuple(self.obstacles))

    @property
    def n_obstacles(self) -> int:
        return len(self.obstacles)

    def final_position(self) -> np.ndarray:
        if self.final_override is not None:
            return np.asarray(self.final_override, dtype=np.float64)
        return self.desired.point(self.t_start + self.horizon)


class Angles(NamedTuple):
    ob: np.ndarray  # (L, n, m, q)
    v: np.ndarray  # (L, q)
    a: np.ndarray  # (L, q)


class Scales(NamedTuple):
    ob: np.ndarray  # (L, n, m, q)
    v: np.ndarray  # (L, q)
    a: np.ndarray  # (L, q)


@dataclass(frozen=True)
class ProblemMatrices:
    basis: BasisMatrices
    boundary: BoundaryPair  # block form over (c_x, c_c, c_y, c_s)
    boundary_psi: BoundaryPair
    F_channel: np.ndarray  # one channel block, (2q + n*m*q + q, 2 n_v)
    Q: np.ndarray  # (4 n_v, 4 n_v)
    obstacle_x: np.ndarray  # (n, q)
    obstacle_y: np.ndarray  # (n, q)
    a_eff: np.ndarray  # (n,)
    b_eff: np.ndarray  # (n,)
    offsets: np.ndarray  # (m,)
    v_max: float
    a_max: float
    desired_xy: np.ndarray  # (2, q) desired line sampled over the horizon
    FtF: np.ndarray = field(repr=False, default=None)  # cached F.T @ F

    @property
    def n(self) -> int:
        return self.obstacle_x.shape[0]

    @property
    def m(self) -> int:
        return self.offsets.size

    @property
    def q(self) -> int:
        return self.basis.q

    @property
    def n_v(self) -> int:
        return self.basis.n_v

    @property
    def rows_per_channel(self) -> int:
        return self.F_channel.shape[0]

    @property
    def F(self) -> np.ndarray:
        rows, cols = self.F_channel.shape
        F = np.zeros((2 * rows, 2 * cols))
        F[:rows, :cols] = self.F_channel
        F[rows:, cols:] = self.F_channel
        return F


class Boundaries(NamedTuple):
    xi1: BoundaryPair  # block form over (c_x, c_c, c_y, c_s)
    x: BoundaryPair
    y: BoundaryPair
    c: BoundaryPair
    s: BoundaryPair
    psi: BoundaryPair


def boundary_pairs(scenario: Scenario, basis: BasisMatrices) -> Boundaries:
    """Boundary rows per channel: start state for x, y, psi; start heading for the cos/sin copies;
    final position on the desired line when ``pin_final``."""
    s = scenario.start
    fx = fy = None
    if scenario.pin_final:
        fx, fy = scenario.final_position()
    bx = build_boundary(basis, ChannelBoundary(s.x, s.vx, s.ax, fx))
    by = build_boundary(basis, ChannelBoundary(s.y, s.vy, s.ay, fy))
    bc = build_boundary(basis, ChannelBoundary(np.cos(s.psi)))
    bs = build_boundary(basis, ChannelBoundary(np.sin(s.psi)))
    bpsi = build_boundary(basis, ChannelBoundary(s.psi, s.psid, s.psidd))
    return Boundaries(block_boundary(bx, bc, by, bs), bx, by, bc, bs, bpsi)


def assemble_matrices(scenario: Scenario, basis: BasisMatrices, margin=0.0) -> ProblemMatrices:
    """Build ``F``, ``Q`` and obstacle predictions for one planning horizon.

    Obstacle semi-axes are inflated by the footprint circle radius (plus an
    optional planning ``margin``, scalar or per obstacle); obstacles move at
    constant velocity.
    """
    if basis.q != scenario.q:
        raise ValueError(f"basis has q={basis.q}, scenario has q={scenario.q}")
    if not np.isclose(basis.horizon, scenario.horizon):
        raise ValueError(f"basis horizon {basis.horizon} != scenario horizon {scenario.horizon}")
    P, Pd, Pdd = basis.P, basis.Pd, basis.Pdd
    q, n_v = P.shape
    r = scenario.footprint.offsets
    n = scenario.n_obstacles
    Z = np.zeros((q, n_v))

    blocks = [np.hstack([Pd, Z]), np.hstack([Pdd, Z])]
    blocks += [np.hstack([P, ri * P]) for _ in range(n) for ri in r]
    blocks.append(np.hstack([Z, P]))
    F_channel = np.vstack(blocks)

    Hpp = Pdd.T @ Pdd
    Q = np.zeros((4 * n_v, 4 * n_v))
    Q[:n_v, :n_v] = Hpp
    Q[2 * n_v : 3 * n_v, 2 * n_v : 3 * n_v] = Hpp

    t = basis.timestamps
    if n:
        traj = np.stack([ob.position(t) for ob in scenario.obstacles])  # (n, q, 2)
        axes = np.array([ob.semi_axes for ob in scenario.obstacles], dtype=np.float64)
    else:
        traj = np.zeros((0, q, 2))
        axes = np.zeros((0, 2))
    inflate = scenario.footprint.circle_radius + np.broadcast_to(np.asarray(margin, dtype=np.float64), (n,))

    bounds = boundary_pairs(scenario, basis)
    FtF_c = F_channel.T @ F_channel
    FtF = np.zeros((4 * n_v, 4 * n_v))
    FtF[: 2 * n_v, : 2 * n_v] = FtF_c
    FtF[2 * n_v :, 2 * n_v :] = FtF_c

    desired = scenario.desired.point(scenario.t_start + t).T

    def fr(a):
        a = np.ascontiguousarray(a, dtype=np.float64)
        a.flags.writeable = False
        return a

    return ProblemMatrices(
        basis=basis,
        boundary=bounds.xi1,
        boundary_psi=bounds.psi,
        F_channel=fr(F_channel),
        Q=fr(Q),
        obstacle_x=fr(traj[:, :, 0]),
        obstacle_y=fr(traj[:, :, 1]),
        a_eff=fr(axes[:, 0] + inflate),
        b_eff=fr(axes[:, 1] + inflate),
        offsets=fr(r),
        v_max=float(scenario.v_max),
        a_max=float(scenario.a_max),
        desired_xy=fr(desired),
        FtF=fr(FtF),
    )


def build_g(matrices: ProblemMatrices, xi2: np.ndarray, xi3: Angles, xi4: Scales) -> np.ndarray:
    """Dense right-hand side ``g`` per instance, shape (L, 2 * rows_per_channel), in ``F`` row order."""
    xi2 = np.atleast_2d(xi2)
    L = xi2.shape[0]
    q, n, m = matrices.q, matrices.n, matrices.m
    if xi3.v.shape != (L, q) or xi3.ob.shape != (L, n, m, q) or xi4.ob.shape != (L, n, m, q):
        raise ValueError("angle/scale arrays do not match (L, n, m, q)")
    psi = xi2 @ matrices.basis.P.T
    a = matrices.a_eff[None, :, None, None]
    b = matrices.b_eff[None, :, None, None]
    ob_x = matrices.obstacle_x[None, :, None, :] + a * xi4.ob * np.cos(xi3.ob)
    ob_y = matrices.obstacle_y[None, :, None, :] + b * xi4.ob * np.sin(xi3.ob)
    gx = [
        xi4.v * matrices.v_max * np.cos(xi3.v),
        xi4.a * matrices.a_max * np.cos(xi3.a),
        ob_x.reshape(L, n * m * q),
        np.cos(psi),
    ]
    gy = [
        xi4.v * matrices.v_max * np.sin(xi3.v),
        xi4.a * matrices.a_max * np.sin(xi3.a),
        ob_y.reshape(L, n * m * q),
        np.sin(psi),
    ]
    return np.hstack(gx + gy)
