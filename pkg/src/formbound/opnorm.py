"""Lower-bound estimation of operator ``p -> p`` norms.

The estimator is the p-norm power method (Boyd; Higham): with ``p'`` the
conjugate exponent and ``dual_p(y) = sign(y) |y|^(p-1) / ||y||_p^(p-1)``,
iterate ``z = A^T dual_p(A x)``, ``x = dual_{p'}(z)``.  Every iterate has
``||x||_p = 1``, so ``||A x||_p`` is a certified lower bound on ``||A||_p``;
the sequence is nondecreasing and stops when ``||z||_{p'} <= z . x``.

Norms are plain ``l^p`` sums.  The grid's cell volume cancels in the ratio
``||A x|| / ||x||``, so the estimate equals the quadrature-weighted norm.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter

__all__ = ["LinearMap", "OpNormEstimate", "estimate_opnorm_p", "dense_matrix"]


@dataclass(frozen=True)
class LinearMap:
    """A field-to-field linear map together with its transpose."""

    apply: object
    adjoint: object
    name: str = "op"

    def __call__(self, u):
        return self.apply(u)

    @property
    def T(self):
        return LinearMap(self.adjoint, self.apply, f"{self.name}^T")

    @classmethod
    def symmetric(cls, apply, name="op"):
        return cls(apply, apply, name)


@dataclass(frozen=True)
class OpNormEstimate:
    value: float
    converged: bool
    iterations: int
    vector: np.ndarray | None = None

    def __float__(self):
        return self.value


def _norm(x, p):
    a = np.abs(x)
    m = a.max()
    if m == 0:
        return 0.0
    if p == 2:
        return float(np.linalg.norm(x))
    return float(m * np.sum((a / m) ** p) ** (1.0 / p))


def _dual(y, p):
    """``sign(y) |y|^(p-1) / ||y||_p^(p-1)``, the unit-norm dual vector."""
    ny = _norm(y, p)
    if ny == 0:
        return np.zeros_like(y)
    a = np.abs(y) / ny
    return np.sign(y) * a ** (p - 1)


def estimate_opnorm_p(op, p, shape, probes=4, iters=30, seed=0, starts=(), rtol=1e-6):
    """Multi-start p-norm power method.

    Parameters
    ----------
    op : LinearMap
    p : float
        Exponent, ``p >= 2`` (``p = 2`` reduces to the ordinary power method
        on ``A^T A``).
    shape : tuple
        Field shape accepted by ``op``.
    probes : int
        Number of Gaussian random starts.
    starts : sequence of ndarray
        Extra deterministic starting fields tried before the random ones.
    rtol : float
        Relative tolerance for the stopping test ``||z||_{p'} <= z . x``.

    Returns
    -------
    OpNormEstimate
        ``value`` is the best ratio found; ``converged`` is true if the best
        start met the stopping test within ``iters`` iterations.
    """
    if not p >= 1:
        raise InvalidParameter(f"p must be >= 1, got {p}")
    q = p / (p - 1) if p > 1 else np.inf
    rng = np.random.default_rng(seed)
    candidates = [np.asarray(s, dtype=float) for s in starts]
    candidates += [rng.standard_normal(shape) for _ in range(probes)]
    best = OpNormEstimate(0.0, True, 0)
    for x0 in candidates:
        nx = _norm(x0, p)
        if nx == 0:
            continue
        x = x0 / nx
        gamma, done, it = 0.0, False, 0
        for it in range(1, iters + 1):
            y = op.apply(x)
            g = _norm(y, p)
            if g > gamma:
                gamma, xbest = g, x
            if g == 0:
                done = True
                break
            z = op.adjoint(_dual(y, p))
            zx = float(np.vdot(z, x))
            if _norm(z, q) <= zx * (1 + rtol):
                done = True
                break
            x = _dual(z, q)
        if gamma > best.value:
            best = OpNormEstimate(gamma, done, it, xbest)
    return best


def dense_matrix(op, shape):
    """Assemble ``op`` column by column; only sensible on tiny grids."""
    size = int(np.prod(shape))
    cols = np.empty((size, size))
    e = np.zeros(size)
    for i in range(size):
        e[i] = 1.0
        cols[:, i] = np.ravel(op.apply(e.reshape(shape)))
        e[i] = 0.0
    return cols
