"""Dense reference operators for tiny grids.

Everything here is assembled from explicit one-dimensional trigonometric
sums combined by Kronecker products.  No FFT is involved, which makes these
matrices an independent check on the spectral path.  Sizes grow like
``n^(2d)``; ``n = 8, d = 3`` (512 unknowns) is the intended scale.
"""
from functools import reduce

import numpy as np
from scipy import linalg

__all__ = [
    "derivative_matrix_1d",
    "laplacian_matrix_1d",
    "gradient_matrices",
    "laplacian_matrix",
    "operator_matrix",
    "dense_solve",
    "dense_form_bound",
]


def _modes(n, L):
    m = np.arange(n)
    k = np.where(m <= n // 2, m, m - n) * (2 * np.pi / L)
    return m, k


def _trig_matrix(n, L, symbol):
    """``M[a, b] = (1/n) sum_k symbol(k) exp(i k (x_a - x_b))``, real part."""
    m, k = _modes(n, L)
    x = m * (L / n)
    phase = np.exp(1j * np.outer(x, k))
    M = (phase * symbol(k)) @ phase.conj().T / n
    return M.real


def derivative_matrix_1d(n, L):
    """First derivative; the Nyquist mode is dropped as in the spectral path."""
    def sym(k):
        s = 1j * k
        s[n // 2] = 0.0
        return s
    return _trig_matrix(n, L, sym)


def laplacian_matrix_1d(n, L):
    return _trig_matrix(n, L, lambda k: -(k**2) + 0j)


def _embed(A, axis, d, n):
    eye = np.eye(n)
    return reduce(np.kron, [A if j == axis else eye for j in range(d)])


def gradient_matrices(d, n, L):
    D1 = derivative_matrix_1d(n, L)
    return [_embed(D1, j, d, n) for j in range(d)]


def laplacian_matrix(d, n, L):
    L1 = laplacian_matrix_1d(n, L)
    return sum(_embed(L1, j, d, n) for j in range(d))


def operator_matrix(grid, b, mu):
    """Dense ``mu - Laplacian + b . grad`` on row-major flattened fields."""
    d, n, L = grid.d, grid.n, grid.L
    A = mu * np.eye(n**d) - laplacian_matrix(d, n, L)
    for bj, Dj in zip(b, gradient_matrices(d, n, L)):
        A += np.ravel(bj)[:, None] * Dj
    return A


def dense_solve(grid, b, mu, f):
    """Direct LU solve of ``(mu - Laplacian + b . grad) u = f``."""
    A = operator_matrix(grid, b, mu)
    return linalg.solve(A, np.ravel(f)).reshape(grid.shape)


def dense_form_bound(grid, b, lam):
    """Largest eigenvalue of ``(lam - Laplacian)^(-1/2) |b|^2 (lam - Laplacian)^(-1/2)``."""
    Lap = laplacian_matrix(grid.d, grid.n, grid.L)
    w, V = linalg.eigh(lam * np.eye(Lap.shape[0]) - Lap)
    half = (V / np.sqrt(w)) @ V.T
    mag2 = np.ravel(np.sum(np.asarray(b) ** 2, axis=0))
    M = half @ (mag2[:, None] * half)
    return float(linalg.eigvalsh(M)[-1])
