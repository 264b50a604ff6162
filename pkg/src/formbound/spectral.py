"""Fourier-multiplier calculus on the periodic box ``[0, L)^d``.

Scalar fields are real ``ndarray`` objects of shape ``grid.shape``; vector
fields carry the component index first, shape ``(d,) + grid.shape``.  Every
constant-coefficient operator (Laplacian, gradient, Bessel potentials, heat
smoothing) is diagonal in the Fourier basis and is applied exactly through
its symbol on the ``rfftn`` half-lattice, so real input always gives real
output.

Odd symbols (``i k_j``) are zeroed on the Nyquist planes: the lattice point
``-n/2`` has no partner ``+n/2``, and keeping it would break both realness
and the antisymmetry of the discrete derivative.
"""
from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
import scipy.fft as sfft
from scipy.special import roots_legendre

from .errors import ConvergenceFailure, InvalidParameter

__all__ = [
    "TorusGrid",
    "FourierMultiplier",
    "gradient",
    "divergence",
    "laplacian",
    "bessel_apply",
    "bessel_apply_quadrature",
    "heat_smooth",
    "lp_norm",
    "multiply",
    "check_scalar",
    "check_vector",
]

DEFAULT_MAX_POINTS = 2**24


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid with ``n`` points per axis on ``[0, L)^d``.

    Parameters
    ----------
    d : int
        Spatial dimension, at least 3.
    n : int
        Points per axis (even; a power of two keeps the FFTs fast).
    L : float
        Edge length of the box.
    max_points : int
        Memory budget for ``n**d``.
    workers : int or None
        Thread count handed to :mod:`scipy.fft`.  Does not take part in
        equality, so grids differing only in threading compare equal.
    """

    d: int = 3
    n: int = 32
    L: float = 2 * math.pi
    max_points: int = field(default=DEFAULT_MAX_POINTS, compare=False, repr=False)
    workers: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise InvalidParameter(f"dimension d must be an integer >= 3, got {self.d}")
        if int(self.n) != self.n or self.n < 2 or self.n % 2:
            raise InvalidParameter(f"n must be an even integer >= 2, got {self.n}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InvalidParameter(f"edge length L must be positive, got {self.L}")
        if self.n**self.d > self.max_points:
            raise InvalidParameter(
                f"grid has {self.n ** self.d} points, over the budget of {self.max_points}"
            )

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def size(self):
        return self.n**self.d

    @property
    def h(self):
        """Grid spacing."""
        return self.L / self.n

    @property
    def volume(self):
        return self.L**self.d

    @property
    def cell_volume(self):
        return self.h**self.d

    @property
    def center(self):
        return np.full(self.d, self.L / 2)

    @cached_property
    def _axis_k(self):
        full = 2 * np.pi * sfft.fftfreq(self.n, d=self.h)
        half = 2 * np.pi * sfft.rfftfreq(self.n, d=self.h)
        return full, half

    @cached_property
    def wavenumbers(self):
        """Per-axis wavenumbers on the ``rfftn`` lattice, broadcastable."""
        full, half = self._axis_k
        out = []
        for j in range(self.d):
            kj = half if j == self.d - 1 else full
            shape = [1] * self.d
            shape[j] = kj.size
            out.append(kj.reshape(shape))
        return tuple(out)

    @cached_property
    def ksq(self):
        """``|k|^2`` on the half lattice."""
        total = 0
        for kj in self.wavenumbers:
            total = total + kj**2
        return np.asarray(total)

    @cached_property
    def derivative_symbols(self):
        """``i k_j`` with the Nyquist plane of axis ``j`` removed."""
        out = []
        for kj in self.wavenumbers:
            k = kj.copy()
            k[np.isclose(np.abs(k), np.pi * self.n / self.L)] = 0.0
            out.append(1j * k)
        return tuple(out)

    @cached_property
    def spectral_shape(self):
        return self.shape[:-1] + (self.n // 2 + 1,)

    def coordinates(self):
        """Node coordinates ``x_j = h * m``, as sparse broadcastable arrays."""
        x = self.h * np.arange(self.n)
        return np.meshgrid(*([x] * self.d), indexing="ij", sparse=True)

    def fft(self, u):
        return sfft.rfftn(u, axes=tuple(range(-self.d, 0)), workers=self.workers)

    def ifft(self, uh):
        return sfft.irfftn(
            uh, s=self.shape, axes=tuple(range(-self.d, 0)), workers=self.workers
        )

    def random_field(self, rng, smooth=None):
        """Standard normal samples, optionally low-passed by ``exp(-smooth |k|^2)``."""
        u = rng.standard_normal(self.shape)
        if smooth:
            u = heat_smooth(self, smooth, u)
        return u


def check_scalar(grid, u, name="u"):
    u = np.asarray(u, dtype=float)
    if u.shape != grid.shape:
        raise InvalidParameter(f"{name} has shape {u.shape}, expected {grid.shape}")
    if not np.all(np.isfinite(u)):
        raise InvalidParameter(f"{name} contains non-finite values")
    return u


def check_vector(grid, v, name="b"):
    v = np.asarray(v, dtype=float)
    if v.shape != (grid.d,) + grid.shape:
        raise InvalidParameter(
            f"{name} has shape {v.shape}, expected {(grid.d,) + grid.shape}"
        )
    if not np.all(np.isfinite(v)):
        raise InvalidParameter(f"{name} contains non-finite values")
    return v


class FourierMultiplier:
    """A diagonal operator given by its symbol on the half lattice.

    ``symbol`` is a callable ``grid -> array`` broadcastable to
    ``grid.spectral_shape``.  Multipliers compose with ``*``.
    """

    def __init__(self, symbol, name="multiplier"):
        self._symbol = symbol
        self.name = name

    def symbol(self, grid):
        return np.broadcast_to(self._symbol(grid), grid.spectral_shape)

    def apply(self, grid, u):
        return grid.ifft(self.symbol(grid) * grid.fft(u))

    __call__ = apply

    def __mul__(self, other):
        return FourierMultiplier(
            lambda g: self._symbol(g) * other._symbol(g), f"{self.name}*{other.name}"
        )

    def __repr__(self):
        return f"FourierMultiplier({self.name})"

    @classmethod
    def bessel(cls, mu, alpha):
        """``(mu - Laplacian)^(-alpha)``."""
        if not mu > 0:
            raise InvalidParameter(f"mu must be positive, got {mu}")
        return cls(lambda g: (mu + g.ksq) ** (-alpha), f"bessel({mu},{alpha})")

    @classmethod
    def heat(cls, eps):
        if eps < 0:
            raise InvalidParameter(f"smoothing width must be >= 0, got {eps}")
        return cls(lambda g: np.exp(-eps * g.ksq), f"heat({eps})")


def gradient(grid, u):
    """Spectral gradient; returns an array of shape ``(d,) + grid.shape``."""
    uh = grid.fft(u)
    return np.stack([grid.ifft(s * uh) for s in grid.derivative_symbols])


def divergence(grid, v):
    """Spectral divergence, the negative adjoint of :func:`gradient`."""
    total = 0
    for s, vj in zip(grid.derivative_symbols, v):
        total = total + s * grid.fft(vj)
    return grid.ifft(total)


def laplacian(grid, u):
    return grid.ifft(-grid.ksq * grid.fft(u))


def bessel_apply(grid, mu, alpha, u):
    """Apply ``(mu - Laplacian)^(-alpha)`` through its exact symbol.

    Negative ``alpha`` is allowed and gives the positive fractional power.
    """
    if not mu > 0:
        raise InvalidParameter(f"mu must be positive, got {mu}")
    if alpha == 0:
        return np.array(u, dtype=float, copy=True)
    if alpha == 1:
        symbol = 1.0 / (mu + grid.ksq)
    else:
        symbol = (mu + grid.ksq) ** (-alpha)
    return grid.ifft(symbol * grid.fft(u))


def _gauss_segment(nodes, a=0.0, b=1.0):
    x, w = roots_legendre(nodes)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _quadrature_symbol(ksq, mu, alpha, nodes):
    """Quadrature approximation of ``(mu + ksq)^(-alpha)``.

    The integral over ``t`` is split at ``t = mu``.  On ``[0, mu]`` the
    substitution ``t = mu s^(1/(1-alpha))`` absorbs ``t^(-alpha)``; on
    ``[mu, inf)`` the substitution ``t = mu s^(-1/alpha)`` maps the tail to
    ``(0, 1]`` with a bounded integrand.
    """
    s, w = _gauss_segment(nodes)
    m = mu + ksq[..., None]
    head = mu ** (1 - alpha) / (1 - alpha) * np.sum(w / (mu * s ** (1 / (1 - alpha)) + m), axis=-1)
    tail = mu ** (1 - alpha) / alpha * np.sum(w / (mu + m * s ** (1 / alpha)), axis=-1)
    return math.sin(math.pi * alpha) / math.pi * (head + tail)


def bessel_apply_quadrature(grid, mu, alpha, u, tol=1e-10, max_nodes=4096, full_output=False):
    """Apply ``(mu - Laplacian)^(-alpha)`` through the resolvent integral

    ``sin(pi alpha)/pi * int_0^inf t^(-alpha) (t + mu - Laplacian)^(-1) dt``.

    Each quadrature node contributes one Laplacian resolvent; the weighted
    resolvents are summed in Fourier space.  The node count on each segment
    doubles until successive results differ by less than ``tol`` (relative,
    sup over the lattice).

    Returns
    -------
    ndarray, or (ndarray, float) if ``full_output``
        The field and the last observed change, used as error estimate.
    """
    if not 0 < alpha < 1:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}")
    if not mu > 0:
        raise InvalidParameter(f"mu must be positive, got {mu}")
    # one evaluation per distinct |k|^2 keeps the node sweep cheap
    ksq_unique, inverse = np.unique(grid.ksq, return_inverse=True)
    nodes = 16
    prev = _quadrature_symbol(ksq_unique, mu, alpha, nodes)
    while True:
        nodes *= 2
        cur = _quadrature_symbol(ksq_unique, mu, alpha, nodes)
        err = float(np.max(np.abs(cur - prev) / np.abs(cur)))
        if err <= tol:
            break
        if nodes >= max_nodes:
            raise ConvergenceFailure(
                f"quadrature did not reach tol={tol} with {nodes} nodes", achieved=err
            )
        prev = cur
    symbol = cur[inverse].reshape(grid.ksq.shape)
    out = grid.ifft(symbol * grid.fft(u))
    return (out, err) if full_output else out


def heat_smooth(grid, eps, u):
    """Apply ``exp(eps * Laplacian)``; ``eps = 0`` is the identity."""
    if eps < 0:
        raise InvalidParameter(f"smoothing width must be >= 0, got {eps}")
    if eps == 0:
        return np.array(u, dtype=float, copy=True)
    u = np.asarray(u, dtype=float)
    if u.ndim == grid.d + 1:
        return np.stack([heat_smooth(grid, eps, c) for c in u])
    return grid.ifft(np.exp(-eps * grid.ksq) * grid.fft(u))


def lp_norm(grid, u, p):
    """Trapezoidal ``L^p`` norm with cell volume ``(L/n)^d``; ``p = inf`` is the max."""
    u = np.asarray(u)
    if p == np.inf:
        return float(np.max(np.abs(u))) if u.size else 0.0
    if not p >= 1:
        raise InvalidParameter(f"p must be >= 1 or inf, got {p}")
    a = np.abs(u)
    scale = a.max() if a.size else 0.0
    if scale == 0:
        return 0.0
    # rescale to avoid overflow of |u|^p for large p
    return float(scale * (grid.cell_volume * np.sum((a / scale) ** p)) ** (1.0 / p))


def _pad(grid, uh_full, m):
    n = grid.n
    out = np.zeros((m,) * grid.d, dtype=complex)
    keep = np.r_[0 : n // 2, m - n // 2 + 1 : m]
    src = np.r_[0 : n // 2, n // 2 + 1 : n]
    out[np.ix_(*([keep] * grid.d))] = uh_full[np.ix_(*([src] * grid.d))]
    return out


def multiply(grid, a, b, dealias=False):
    """Pointwise product, optionally de-aliased by 3/2-rule zero padding."""
    if not dealias:
        return a * b
    a = np.broadcast_to(a, grid.shape)
    b = np.broadcast_to(b, grid.shape)
    n, m = grid.n, 3 * grid.n // 2
    m += m % 2
    axes = tuple(range(grid.d))
    ah = _pad(grid, sfft.fftn(a, axes=axes, workers=grid.workers), m)
    bh = _pad(grid, sfft.fftn(b, axes=axes, workers=grid.workers), m)
    scale = (m / n) ** grid.d
    prod = sfft.ifftn(ah, workers=grid.workers).real * sfft.ifftn(bh, workers=grid.workers).real
    ph = sfft.fftn(prod, workers=grid.workers)
    out = np.zeros(grid.shape, dtype=complex)
    keep = np.r_[0 : n // 2, m - n // 2 + 1 : m]
    dst = np.r_[0 : n // 2, n // 2 + 1 : n]
    out[np.ix_(*([dst] * grid.d))] = ph[np.ix_(*([keep] * grid.d))]
    return sfft.ifftn(out, workers=grid.workers).real * scale
