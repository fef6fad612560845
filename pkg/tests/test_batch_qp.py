import numpy as np
import pytest
from hypothesis import given, strategies as st

from batchtraj.batch_qp import SingularKKTError, factorize, solve_batch
from support import dense_kkt_solve


def random_qp(rng, n=8, nb=3, psd_rank=None):
    M = rng.standard_normal((n, psd_rank or n))
    Q = M @ M.T
    A = rng.standard_normal((nb, n))
    b = rng.standard_normal(nb)
    return Q, A, b


def test_identity_unconstrained():
    f = factorize(np.eye(2))
    xi, mu = solve_batch(f, np.array([[1.0, -2.0]]))
    np.testing.assert_allclose(xi, [[-1.0, 2.0]])
    assert mu.shape == (1, 0)


def test_identity_one_constraint():
    f = factorize(np.eye(2), np.array([[1.0, 0.0]]))
    xi, mu = solve_batch(f, np.array([1.0, -2.0]), np.array([0.0]))
    np.testing.assert_allclose(xi, [[0.0, 2.0]], atol=1e-15)
    # stationarity: xi + q + A' mu = 0 -> mu = -1
    np.testing.assert_allclose(mu, [[-1.0]])


def test_zero_hessian_square_constraint():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    # det of the KKT matrix [[0, A'], [A, 0]] is det(A)^2 (up to sign), nonzero here
    assert abs(np.linalg.det(A)) == pytest.approx(5.0)
    f = factorize(np.zeros((2, 2)), A)
    xi, _ = solve_batch(f, np.zeros((1, 2)), np.array([1.0, 2.0]))
    np.testing.assert_allclose(A @ xi[0], [1.0, 2.0])


def test_rank_deficient_A():
    with pytest.raises(SingularKKTError) as e:
        factorize(np.eye(3), np.array([[1.0, 0, 0], [2.0, 0, 0]]))
    assert e.value.reason == "rank of A"


def test_no_curvature_on_nullspace():
    Q = np.diag([1.0, 0.0, 0.0])
    with pytest.raises(SingularKKTError) as e:
        factorize(Q, np.array([[0.0, 1.0, 0.0]]))
    assert e.value.reason == "curvature on nullspace"


def test_shape_errors():
    f = factorize(np.eye(3), np.array([[1.0, 0, 0]]))
    with pytest.raises(ValueError):
        solve_batch(f, np.zeros((2, 4)))
    with pytest.raises(ValueError):
        solve_batch(f, np.zeros((2, 3)), np.zeros(2))
    with pytest.raises(ValueError):
        factorize(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_batch_of_eight_matches_dense():
    rng = np.random.default_rng(0)
    Q, A, b = random_qp(rng)
    qs = rng.standard_normal((8, 8))
    xi, mu = solve_batch(factorize(Q, A), qs, b)
    for l in range(8):
        x_ref, mu_ref = dense_kkt_solve(Q, A, qs[l], b)
        np.testing.assert_allclose(xi[l], x_ref, rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(mu[l], mu_ref, rtol=1e-8, atol=1e-10)


@given(seed=st.integers(0, 2**32 - 1), L=st.integers(1, 40), nb=st.integers(0, 4))
def test_batch_equivalence_and_feasibility(seed, L, nb):
    rng = np.random.default_rng(seed)
    # semidefinite Q of rank n - nb still gives a nonsingular KKT for generic A
    Q, A, b = random_qp(rng, 8, nb, psd_rank=8 - nb if nb else 8)
    qs = rng.standard_normal((L, 8))
    xi, mu = solve_batch(factorize(Q, A), qs, b)
    for l in range(L):
        x_ref, _ = dense_kkt_solve(Q, A, qs[l], b)
        assert np.linalg.norm(xi[l] - x_ref) <= 1e-8 * max(1.0, np.linalg.norm(x_ref))
    np.testing.assert_allclose(Q @ xi.T + qs.T + A.T @ mu.T, 0.0, atol=1e-8 * max(1.0, np.abs(xi).max()))
    if nb:
        assert np.abs(xi @ A.T - b).max() <= 1e-9 * max(1.0, np.abs(xi).max())


@given(seed=st.integers(0, 2**32 - 1))
def test_column_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    Q, A, b = random_qp(rng, 6, 2)
    qs = rng.standard_normal((10, 6))
    perm = rng.permutation(10)
    f = factorize(Q, A)
    xi, _ = solve_batch(f, qs, b)
    xp, _ = solve_batch(f, qs[perm], b)
    np.testing.assert_allclose(xp, xi[perm], rtol=1e-12, atol=1e-12)
