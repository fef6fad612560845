"""Polynomial basis matrices and boundary-condition rows.

A trajectory channel is ``P @ coeffs`` sampled at ``q`` uniform timestamps;
``Pd`` and ``Pdd`` give the first and second time derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Literal, Optional

import numpy as np

BasisKind = Literal["monomial", "bernstein"]


class RankDeficientError(ValueError):
    """Boundary rows are linearly dependent."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def _bernstein(degree: int, tau: np.ndarray) -> np.ndarray:
    """Bernstein polynomials of ``degree`` at ``tau`` in [0, 1], shape (len(tau), degree+1)."""
    if degree < 0:
        return np.zeros((tau.size, 0))
    k = np.arange(degree + 1)
    binom = np.array([comb(degree, j) for j in k], dtype=np.float64)
    return binom * tau[:, None] ** k * (1.0 - tau[:, None]) ** (degree - k)


def evaluate_basis(kind: BasisKind, degree: int, horizon: float, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Basis values and first/second time derivatives at arbitrary times ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    n_v = degree + 1
    if kind == "monomial":
        k = np.arange(n_v, dtype=np.float64)
        P = t[:, None] ** k
        Pd = np.zeros((t.size, n_v))
        Pdd = np.zeros((t.size, n_v))
        Pd[:, 1:] = k[1:] * t[:, None] ** (k[1:] - 1)
        Pdd[:, 2:] = k[2:] * (k[2:] - 1) * t[:, None] ** (k[2:] - 2)
        return P, Pd, Pdd
    if kind == "bernstein":
        tau = t / horizon
        P = _bernstein(degree, tau)
        # d/dt B_{k,n} = n/T (B_{k-1,n-1} - B_{k,n-1})
        B1 = _bernstein(degree - 1, tau)
        Pd = np.zeros((t.size, n_v))
        Pd[:, 1:] += B1
        Pd[:, :-1] -= B1
        Pd *= degree / horizon
        B2 = _bernstein(degree - 2, tau)
        Pdd = np.zeros((t.size, n_v))
        Pdd[:, 2:] += B2
        Pdd[:, 1:-1] -= 2.0 * B2
        Pdd[:, :-2] += B2
        Pdd *= degree * (degree - 1) / horizon**2
        return P, Pd, Pdd
    raise ValueError(f"unknown basis kind {kind!r}")


@dataclass(frozen=True)
class BasisMatrices:
    P: np.ndarray  # (q, n_v)
    Pd: np.ndarray  # (q, n_v), per second
    Pdd: np.ndarray  # (q, n_v), per second^2
    timestamps: np.ndarray  # (q,)
    kind: str
    degree: int
    horizon: float

    @property
    def q(self) -> int:
        return self.P.shape[0]

    @property
    def n_v(self) -> int:
        return self.P.shape[1]

    @property
    def dt(self) -> float:
        return self.horizon / (self.q - 1)

    def at(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Evaluate the same basis at arbitrary times within the horizon."""
        return evaluate_basis(self.kind, self.degree, self.horizon, t)  # type: ignore[arg-type]


def build_basis(basis_kind: BasisKind = "bernstein", degree: int = 10, horizon: float = 10.0, q: int = 50) -> BasisMatrices:
    if degree < 2:
        raise ValueError(f"degree must be >= 2, got {degree}")
    if q < degree + 1:
        raise ValueError(f"q={q} samples underdetermine a degree-{degree} fit (need q >= {degree + 1})")
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    t = np.linspace(0.0, horizon, q)
    P, Pd, Pdd = evaluate_basis(basis_kind, degree, horizon, t)
    return BasisMatrices(_frozen(P), _frozen(Pd), _frozen(Pdd), _frozen(t), basis_kind, degree, float(horizon))


@dataclass(frozen=True)
class ChannelBoundary:
    """Boundary values for one scalar channel; ``None`` leaves the entry free."""

    position: Optional[float] = None
    velocity: Optional[float] = None
    acceleration: Optional[float] = None
    final_position: Optional[float] = None


@dataclass(frozen=True)
class BoundaryPair:
    A: np.ndarray  # (n_b, n_v)
    b: np.ndarray  # (n_b,)

    @property
    def n_b(self) -> int:
        return self.A.shape[0]


def build_boundary(basis: BasisMatrices, spec: ChannelBoundary) -> BoundaryPair:
    rows, vals = [], []
    for matrix, idx, value in (
        (basis.P, 0, spec.position),
        (basis.Pd, 0, spec.velocity),
        (basis.Pdd, 0, spec.acceleration),
        (basis.P, -1, spec.final_position),
    ):
        if value is None:
            continue
        if not np.isfinite(value):
            raise ValueError(f"boundary value must be finite, got {value}")
        rows.append(matrix[idx])
        vals.append(float(value))
    A = np.array(rows, dtype=np.float64).reshape(len(rows), basis.n_v)
    if rows and np.linalg.matrix_rank(A) < len(rows):
        raise RankDeficientError(f"{len(rows)} boundary rows have rank {np.linalg.matrix_rank(A)}")
    return BoundaryPair(_frozen(A), _frozen(np.array(vals, dtype=np.float64)))


def block_boundary(*pairs: BoundaryPair) -> BoundaryPair:
    """Block-diagonal stacking of per-channel boundary pairs."""
    n_rows = sum(p.n_b for p in pairs)
    n_cols = sum(p.A.shape[1] for p in pairs)
    A = np.zeros((n_rows, n_cols))
    r = c = 0
    for p in pairs:
        A[r : r + p.n_b, c : c + p.A.shape[1]] = p.A
        r += p.n_b
        c += p.A.shape[1]
    return BoundaryPair(_frozen(A), _frozen(np.concatenate([p.b for p in pairs])))
