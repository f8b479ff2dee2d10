from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from khessian import InvalidOrder, c_const, eigenvalues_sym, is_k_admissible, s_k, s_k_gradient


def minors_oracle(A, k):
    """Sum of principal minors by explicit subset enumeration."""
    n = A.shape[0]
    return sum(np.linalg.det(A[np.ix_(c, c)]) for c in combinations(range(n), k))


def gradient_oracle(A, k, eps=1e-4):
    """Central differences in each entry, all n^2 entries independent."""
    n = A.shape[0]
    G = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            E = np.zeros((n, n))
            E[i, j] = eps
            G[i, j] = (s_k(A + E, k) - s_k(A - E, k)) / (2 * eps)
    return G


def random_sym(rng, n, count):
    B = rng.uniform(-1, 1, (count, n, n))
    return 0.5 * (B + np.swapaxes(B, -1, -2))


ORDERS = [(k, n) for n in (2, 3) for k in range(1, n + 1)]


def test_c_const():
    assert c_const(2, 3) == Fraction(1, 3)
    assert c_const(3, 3) == Fraction(1, 27)
    assert c_const(2, 2) == Fraction(1, 4)
    for n in (1, 2, 3, 4):
        assert c_const(1, n) == 1
    with pytest.raises(InvalidOrder):
        c_const(4, 3)
    with pytest.raises(InvalidOrder):
        c_const(0, 2)


def test_s_k_examples():
    D = np.diag([1.0, 2.0, 3.0])
    assert s_k(D, 1) == 6
    assert s_k(np.eye(3), 2) == 3
    assert s_k(D, 2) == pytest.approx(minors_oracle(D, 2)) == pytest.approx(11)
    assert s_k(D, 3) == pytest.approx(6)
    with pytest.raises(InvalidOrder):
        s_k(np.eye(2), 3)


@pytest.mark.parametrize("k,n", ORDERS)
def test_s_k_matches_minor_enumeration(rng, k, n):
    for A in random_sym(rng, n, 50):
        assert s_k(A, k) == pytest.approx(minors_oracle(A, k), rel=1e-12, abs=1e-12)


def test_gradient_examples():
    a, b, c = 1.5, -0.3, 2.0
    A = np.array([[a, b], [b, c]])
    assert np.allclose(s_k_gradient(A, 2), [[c, -b], [-b, a]])
    assert np.allclose(s_k_gradient(np.diag([4.0, -1.0, 2.0]), 1), np.eye(3))
    assert np.allclose(s_k_gradient(np.eye(3), 2), 2 * np.eye(3))


@pytest.mark.parametrize("k,n", ORDERS)
def test_gradient_matches_finite_differences(rng, k, n):
    for A in random_sym(rng, n, 20):
        assert np.allclose(s_k_gradient(A, k), gradient_oracle(A, k), atol=1e-8)


@pytest.mark.parametrize("k,n", ORDERS)
def test_euler_identity(rng, k, n):
    A = random_sym(rng, n, 1000)
    lhs = np.einsum("...ij,...ij->...", s_k_gradient(A, k), A)
    norm = np.abs(A).max(axis=(-1, -2))
    assert np.all(np.abs(lhs - k * s_k(A, k)) <= 1e-12 * (1 + norm ** k))


@pytest.mark.parametrize("k,n", ORDERS)
def test_directional_derivative(rng, k, n):
    A, B = random_sym(rng, n, 1000), random_sym(rng, n, 1000)
    eps = 1e-5
    fd = (s_k(A + eps * B, k) - s_k(A - eps * B, k)) / (2 * eps)
    exact = np.einsum("...ij,...ij->...", s_k_gradient(A, k), B)
    assert np.all(np.abs(fd - exact) <= 1e-6 * np.maximum(1.0, np.abs(exact)))


@pytest.mark.parametrize("n", [2, 3])
def test_maclaurin_k2_unconditional(rng, n):
    A = 3 * random_sym(rng, n, 1000)
    assert np.all(s_k(A, 2) <= float(c_const(2, n)) * s_k(A, 1) ** 2 + 1e-12)


@pytest.mark.parametrize("k,n", ORDERS)
def test_maclaurin_positive_definite(rng, k, n):
    B = rng.uniform(-1, 1, (1000, n, n))
    A = B @ np.swapaxes(B, -1, -2) + 0.01 * np.eye(n)
    assert np.all(s_k(A, k) <= float(c_const(k, n)) * s_k(A, 1) ** k + 1e-12)


def test_eigenvalue_examples():
    assert np.allclose(eigenvalues_sym(np.eye(3)), [1, 1, 1])
    assert np.allclose(eigenvalues_sym(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])
    assert np.allclose(eigenvalues_sym(np.array([[2.0, 1.0], [1.0, 2.0]])), [1, 3])


@pytest.mark.parametrize("n", [2, 3])
def test_eigenvalues_against_lapack(rng, n):
    A = 5 * random_sym(rng, n, 1000)
    ours = eigenvalues_sym(A)
    ref = np.linalg.eigvalsh(A)
    norm = np.abs(A).max(axis=(-1, -2))[:, None]
    assert np.all(np.abs(ours - ref) <= 1e-9 * (1 + norm))
    assert np.all(np.diff(ours, axis=-1) >= 0)


@pytest.mark.parametrize("n", [2, 3])
def test_eigenvalues_repeated_and_degenerate(n):
    for A in (np.zeros((n, n)), 7 * np.eye(n), np.ones((n, n))):
        assert np.allclose(eigenvalues_sym(A), np.linalg.eigvalsh(A), atol=1e-12)


@pytest.mark.parametrize("k,n", ORDERS)
def test_s_k_is_elementary_symmetric_of_eigenvalues(rng, k, n):
    A = random_sym(rng, n, 1000)
    lam = eigenvalues_sym(A)
    esp = sum(np.prod(lam[:, list(c)], axis=-1) for c in combinations(range(n), k))
    sk = s_k(A, k)
    assert np.all(np.abs(sk - esp) <= 1e-9 * np.maximum(1.0, np.abs(sk)))


def test_admissibility_examples():
    assert is_k_admissible(np.eye(3), 3)
    D = np.diag([1.0, 1.0, -0.1])
    assert s_k(D, 1) == pytest.approx(1.9) and s_k(D, 2) == pytest.approx(0.8)
    assert is_k_admissible(D, 2)
    assert not is_k_admissible(D, 3)


@pytest.mark.parametrize("n", [2, 3])
def test_n_convexity_iff_psd(rng, n):
    # mix of generic and near-PSD matrices so both sides of the equivalence occur
    A = random_sym(rng, n, 1000)
    B = rng.uniform(-1, 1, (1000, n, n))
    A[::2] = (B @ np.swapaxes(B, -1, -2))[::2] - 0.02 * rng.uniform(0, 1, (500, 1, 1)) * np.eye(n)
    A[::4] += 0.05 * np.eye(n)
    lhs = np.all([s_k(A, l) >= 0 for l in range(1, n + 1)], axis=0)
    norm = np.abs(A).max(axis=(-1, -2))
    rhs = eigenvalues_sym(A)[:, 0] >= -1e-9 * (1 + norm)
    assert lhs.any() and (~lhs).any()
    assert np.array_equal(lhs, rhs)
