"""Pointwise algebra of the k-Hessian operator for matrices of order 2 and 3.

All functions accept a single ``(n, n)`` matrix or a stack ``(..., n, n)``
and broadcast over the leading axes. Derivatives treat ``a_ij`` and
``a_ji`` as independent variables.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb

import numpy as np

from .errors import InvalidOrder


def check_order(k: int, n: int) -> None:
    if not (1 <= k <= n <= 3):
        raise InvalidOrder(f"invalid order k={k}, n={n}")


def c_const(k: int, n: int) -> Fraction:
    """Maclaurin constant ``binom(n, k) / n**k`` as an exact ratio."""
    if not (1 <= k <= n):
        raise InvalidOrder(f"invalid order k={k}, n={n}")
    return Fraction(comb(n, k), n ** k)


def _order(A: np.ndarray) -> int:
    n = A.shape[-1]
    if A.shape[-2] != n or n not in (1, 2, 3):
        raise InvalidOrder(f"unsupported matrix shape {A.shape[-2:]}")
    return n


def _sigma2(A):
    n = A.shape[-1]
    s = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            s = s + A[..., i, i] * A[..., j, j] - A[..., i, j] * A[..., j, i]
    return s


def _det3(A):
    return (A[..., 0, 0] * (A[..., 1, 1] * A[..., 2, 2] - A[..., 1, 2] * A[..., 2, 1])
            - A[..., 0, 1] * (A[..., 1, 0] * A[..., 2, 2] - A[..., 1, 2] * A[..., 2, 0])
            + A[..., 0, 2] * (A[..., 1, 0] * A[..., 2, 1] - A[..., 1, 1] * A[..., 2, 0]))


def s_k(A, k: int):
    """Sum of all ``k x k`` principal minors of ``A``."""
    A = np.asarray(A, dtype=float)
    n = _order(A)
    check_order(k, n)
    if k == 1:
        return np.trace(A, axis1=-2, axis2=-1)
    if k == 2:
        return _sigma2(A)
    return _det3(A)


def s_k_gradient(A, k: int) -> np.ndarray:
    """Matrix of partial derivatives ``dS_k / da_ij``."""
    A = np.asarray(A, dtype=float)
    n = _order(A)
    check_order(k, n)
    eye = np.broadcast_to(np.eye(n), A.shape)
    if k == 1:
        return eye.copy()
    At = np.swapaxes(A, -1, -2)
    if k == 2:
        tr = np.trace(A, axis1=-2, axis2=-1)[..., None, None]
        return tr * eye - At
    # k == n == 3: cofactor matrix
    G = np.empty_like(A)
    for i in range(3):
        for j in range(3):
            r = [p for p in range(3) if p != i]
            c = [q for q in range(3) if q != j]
            minor = (A[..., r[0], c[0]] * A[..., r[1], c[1]]
                     - A[..., r[0], c[1]] * A[..., r[1], c[0]])
            G[..., i, j] = minor if (i + j) % 2 == 0 else -minor
    return G


def eigenvalues_sym(A) -> np.ndarray:
    """Ascending eigenvalues of symmetric matrices from the characteristic polynomial."""
    A = np.asarray(A, dtype=float)
    n = _order(A)
    if n == 1:
        return A[..., 0, :].copy()
    if n == 2:
        a, b, c = A[..., 0, 0], A[..., 0, 1], A[..., 1, 1]
        mid = 0.5 * (a + c)
        rad = np.hypot(0.5 * (a - c), b)
        return np.stack([mid - rad, mid + rad], axis=-1)

    # trigonometric solution of the depressed cubic
    a00, a11, a22 = A[..., 0, 0], A[..., 1, 1], A[..., 2, 2]
    off = A[..., 0, 1] ** 2 + A[..., 0, 2] ** 2 + A[..., 1, 2] ** 2
    q = (a00 + a11 + a22) / 3.0
    p2 = (a00 - q) ** 2 + (a11 - q) ** 2 + (a22 - q) ** 2 + 2.0 * off
    p = np.sqrt(p2 / 6.0)
    safe_p = np.where(p > 0, p, 1.0)
    B = (A - q[..., None, None] * np.eye(3)) / safe_p[..., None, None]
    r = np.clip(_det3(B) / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    hi = q + 2.0 * p * np.cos(phi)
    lo = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    mid = 3.0 * q - hi - lo
    out = np.stack([lo, mid, hi], axis=-1)
    return np.sort(out, axis=-1)


def is_k_admissible(A, k: int):
    """True where ``S_j(A) > 0`` for every ``j <= k``."""
    ok = True
    for j in range(1, k + 1):
        ok = np.logical_and(ok, s_k(A, j) > 0)
    return ok
