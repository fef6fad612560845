"""Gaussian batch initialization around the straight start-to-goal line.

Perturbations are smooth: ``eps ~ N(0, sigma^2 R^-1)`` with ``R = K'K`` and
``K`` the second-difference operator on the interior waypoints, endpoints
clamped to zero. The covariance is rescaled so the largest per-waypoint
standard deviation equals ``sigma``. Instance 0 is always unperturbed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .basis import BasisMatrices, BoundaryPair
from .batch_qp import factorize, solve_batch
from .problem import Scenario, boundary_pairs


@dataclass(frozen=True)
class InitConfig:
    batch_size: int = 100
    position_noise_scale: float = 1.0  # metres, peak standard deviation
    seed: int = 0
    heading_init: Optional[float] = None  # None: bearing of the straight line

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.position_noise_scale < 0:
            raise ValueError("position_noise_scale must be >= 0")


@lru_cache(maxsize=16)
def smooth_noise_factor(q: int) -> np.ndarray:
    """Matrix ``M`` (q, q-2) such that ``M @ z`` with ``z ~ N(0, I)`` has covariance ``R^-1`` (peak variance 1)."""
    n = q - 2
    K = np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    Kinv = np.linalg.inv(K)
    peak = np.sqrt(np.max(np.sum(Kinv**2, axis=1)))
    M = np.zeros((q, n))
    M[1:-1] = Kinv / peak
    M.flags.writeable = False
    return M


def fit_coefficients(basis: BasisMatrices, boundary: BoundaryPair, samples: np.ndarray) -> np.ndarray:
    """Least-squares fit of ``P @ c`` to each row of ``samples`` subject to ``A c = b`` exactly."""
    P = basis.P
    factor = factorize(P.T @ P, boundary.A)
    coeffs, _ = solve_batch(factor, -np.atleast_2d(samples) @ P, boundary.b)
    return coeffs


def straight_line(scenario: Scenario, basis: BasisMatrices) -> np.ndarray:
    """Constant-velocity waypoints (q, 2) from the start to the horizon endpoint."""
    p0 = np.array([scenario.start.x, scenario.start.y])
    p1 = scenario.final_position()
    tau = basis.timestamps / basis.horizon
    return p0 + (p1 - p0) * tau[:, None]


def line_heading(scenario: Scenario) -> float:
    """Bearing of the straight line on the 2*pi branch nearest the start heading."""
    p1 = scenario.final_position()
    dx, dy = p1[0] - scenario.start.x, p1[1] - scenario.start.y
    psi0 = scenario.start.psi
    if np.hypot(dx, dy) < 1e-9:
        return psi0
    bearing = np.arctan2(dy, dx)
    return bearing + np.round((psi0 - bearing) / (2 * np.pi)) * 2 * np.pi


def sample_batch(scenario: Scenario, basis: BasisMatrices, config: InitConfig) -> tuple[np.ndarray, np.ndarray]:
    """Seeds ``(xi1, xi2)`` of shapes (L, 4 n_v) and (L, n_v)."""
    L, q = config.batch_size, basis.q
    bounds = boundary_pairs(scenario, basis)
    line = straight_line(scenario, basis)

    rng = np.random.default_rng(config.seed)
    M = smooth_noise_factor(q)
    z = rng.standard_normal((2, L, q - 2))
    z[:, 0] = 0.0
    eps = config.position_noise_scale * (z @ M.T)  # (2, L, q)
    wx = line[:, 0] + eps[0]
    wy = line[:, 1] + eps[1]

    psi = line_heading(scenario) if config.heading_init is None else config.heading_init
    psi_samples = np.full((1, q), psi)
    xi2 = np.repeat(fit_coefficients(basis, bounds.psi, psi_samples), L, axis=0)
    psi_t = xi2[:1] @ basis.P.T
    cc = fit_coefficients(basis, bounds.c, np.cos(psi_t))
    cs = fit_coefficients(basis, bounds.s, np.sin(psi_t))
    cx = fit_coefficients(basis, bounds.x, wx)
    cy = fit_coefficients(basis, bounds.y, wy)
    xi1 = np.hstack([cx, np.repeat(cc, L, axis=0), cy, np.repeat(cs, L, axis=0)])
    return xi1, xi2
