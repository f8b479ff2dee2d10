"""Compiled Gauss-Seidel sweeps. Arrays are flat in node order (axis 1 fastest)."""
import numba
import numpy as np


@numba.njit(cache=True)
def gauss_seidel_csr(indptr, indices, data, b, x):
    for i in range(b.shape[0]):
        diag = 0.0
        acc = b[i]
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j == i:
                diag += data[p]
            else:
                acc -= data[p] * x[j]
        x[i] = acc / diag


@numba.njit(cache=True)
def _radicand2(u, p, strides, n, h2, inv_c, f):
    lap = 0.0
    d = np.empty(3)
    for i in range(n):
        si = strides[i]
        d[i] = (u[p + si] - 2.0 * u[p] + u[p - si]) / h2
        lap += d[i]
    s2 = 0.0
    for i in range(n):
        si = strides[i]
        for j in range(i + 1, n):
            sj = strides[j]
            c = (u[p + si + sj] + u[p - si - sj] - u[p + si - sj] - u[p - si + sj]) / (4.0 * h2)
            s2 += d[i] * d[j] - c * c
    return lap * lap + inv_c * (f - s2)


@numba.njit(cache=True)
def radicand2_field(u, f, m, n, h, inv_c, out):
    """Radicand of the k=2 update at every interior node of ``u``."""
    M = m + 1
    strides = np.array([1, M, M * M])
    h2 = h * h
    top = m - 1 if n == 3 else 1
    for i3 in range(1, top + 1):
        for i2 in range(1, m):
            for i1 in range(1, m):
                p = i1 + M * i2 + (M * M * i3 if n == 3 else 0)
                out[p] = _radicand2(u, p, strides, n, h2, inv_c, f[p])


@numba.njit(cache=True)
def gs2_sweep(u, f, rad, m, n, h, inv_c, clamp, frozen):
    """One row-order sweep of the k=2 pointwise update.

    ``frozen`` takes the radicand from ``rad`` (partial variant); otherwise
    it is recomputed from the most recent values. Returns the largest change
    and the first node with a negative radicand (``-1`` if none, only
    reported when ``clamp`` is off).
    """
    M = m + 1
    strides = np.array([1, M, M * M])
    h2 = h * h
    top = m - 1 if n == 3 else 1
    maxdiff = 0.0
    for i3 in range(1, top + 1):
        for i2 in range(1, m):
            for i1 in range(1, m):
                p = i1 + M * i2 + (M * M * i3 if n == 3 else 0)
                if frozen:
                    r = rad[p]
                else:
                    r = _radicand2(u, p, strides, n, h2, inv_c, f[p])
                if r < 0.0:
                    if not clamp:
                        return maxdiff, p
                    r = 0.0
                nb = 0.0
                for i in range(n):
                    nb += u[p + strides[i]] + u[p - strides[i]]
                new = (nb - h2 * np.sqrt(r)) / (2.0 * n)
                diff = abs(new - u[p])
                if diff > maxdiff:
                    maxdiff = diff
                u[p] = new
    return maxdiff, -1
