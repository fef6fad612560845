"""Batched equality-constrained QPs sharing one KKT factorization.

Every instance solves ``min 1/2 x'Qx + q_l'x  s.t.  Ax = b`` with the same
``(Q, A, b)``; only ``q_l`` changes. The KKT matrix is factorized once and all
right-hand sides go through a single multi-column back-substitution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SingularKKTError(np.linalg.LinAlgError):
    """The KKT matrix is singular; ``reason`` names the failed precondition."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"singular KKT system ({reason}){': ' + detail if detail else ''}")


_REGULARIZATION = 1e-10


@dataclass(frozen=True)
class KktFactor:
    lu: np.ndarray
    piv: np.ndarray
    n: int  # primal size
    n_b: int  # number of equality rows
    regularized: bool = False


def _check_preconditions(Qbar: np.ndarray, A: np.ndarray) -> None:
    n_b, n = A.shape
    if n_b:
        rank = np.linalg.matrix_rank(A)
        if rank < n_b:
            raise SingularKKTError("rank of A", f"A is {n_b}x{n} with rank {rank}")
        # orthonormal nullspace basis of A
        _, _, vt = np.linalg.svd(A)
        Z = vt[n_b:].T
    else:
        Z = np.eye(n)
    if Z.shape[1]:
        H = Z.T @ Qbar @ Z
        eig = np.linalg.eigvalsh(0.5 * (H + H.T))
        scale = max(1.0, np.abs(Qbar).max())
        if eig[0] <= 1e-12 * scale:
            raise SingularKKTError("curvature on nullspace", f"min reduced eigenvalue {eig[0]:.3e}")


def factorize(Qbar: np.ndarray, A: np.ndarray | None = None) -> KktFactor:
    Qbar = np.asarray(Qbar, dtype=np.float64)
    n = Qbar.shape[0]
    if Qbar.shape != (n, n):
        raise ValueError(f"Qbar must be square, got {Qbar.shape}")
    if not np.allclose(Qbar, Qbar.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(Qbar).max())):
        raise ValueError("Qbar must be symmetric")
    A = np.zeros((0, n)) if A is None else np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.size == 0:
        A = np.zeros((0, n))
    if A.shape[1] != n:
        raise ValueError(f"A has {A.shape[1]} columns, Qbar is {n}x{n}")
    _check_preconditions(Qbar, A)

    n_b = A.shape[0]
    K = np.zeros((n + n_b, n + n_b))
    K[:n, :n] = Qbar
    K[:n, n:] = A.T
    K[n:, :n] = A
    lu, piv = scipy.linalg.lu_factor(K, check_finite=False)
    regularized = False
    diag = np.abs(np.diag(lu))
    if diag.min() <= 1e-14 * diag.max():
        K[n:, n:] -= _REGULARIZATION * np.eye(n_b)
        lu, piv = scipy.linalg.lu_factor(K, check_finite=False)
        regularized = True
    return KktFactor(lu, piv, n, n_b, regularized)


def solve_batch(factor: KktFactor, qbar_batch: np.ndarray, b: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Solve all instances at once.

    ``qbar_batch`` holds one linear term per row, shape (L, n). Returns the
    primal solutions (L, n) and the duals (L, n_b), satisfying
    ``Qbar @ xi + q + A.T @ mu = 0`` and ``A @ xi = b`` per row.
    """
    qbar_batch = np.asarray(qbar_batch, dtype=np.float64)
    if qbar_batch.ndim == 1:
        qbar_batch = qbar_batch[None, :]
    L, n = qbar_batch.shape
    if n != factor.n:
        raise ValueError(f"linear terms have size {n}, factor expects {factor.n}")
    b = np.zeros(factor.n_b) if b is None else np.asarray(b, dtype=np.float64).reshape(-1)
    if b.size != factor.n_b:
        raise ValueError(f"b has size {b.size}, factor expects {factor.n_b}")
    rhs = np.empty((factor.n + factor.n_b, L))
    rhs[: factor.n] = -qbar_batch.T
    rhs[factor.n :] = b[:, None]
    sol = scipy.linalg.lu_solve((factor.lu, factor.piv), rhs, check_finite=False)
    return np.ascontiguousarray(sol[: factor.n].T), np.ascontiguousarray(sol[factor.n :].T)
