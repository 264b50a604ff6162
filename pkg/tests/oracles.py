"""Reference computations that avoid the library's FFT path."""
import mpmath
import numpy as np


def mp_contraction(delta, p, dps=50):
    mpmath.mp.dps = dps
    d, p = mpmath.mpf(delta), mpmath.mpf(p)
    s = mpmath.sqrt(d)
    num = p / 2 * d + (p - 2) / 2 * s
    den = p - 1 - (p - 1) * (p - 2) / 2 * s - p * (p - 2) / 4 * d
    return num ** (1 / p) * den ** (-1 / p)


def mp_md(d, dps=50):
    mpmath.mp.dps = dps
    d = mpmath.mpf(d)
    return mpmath.sqrt(mpmath.pi) * (2 * mpmath.e) ** mpmath.mpf(-0.5) * d ** (d / 2) * (d - 1) ** (-(d - 1) / 2)


def mode(grid, k):
    """``cos(2 pi k . x / L)`` sampled on the grid, with its |k|^2."""
    x = grid.coordinates()
    w = 2 * np.pi / grid.L
    phase = sum(kj * w * xj for kj, xj in zip(k, x))
    return np.broadcast_to(np.cos(phase), grid.shape).copy(), (w**2) * sum(kj * kj for kj in k)


def central_difference(grid, u, axis, order=4):
    """Fourth-order periodic finite difference."""
    h = grid.h
    r = lambda s: np.roll(u, -s, axis=axis)
    return (-r(2) + 8 * r(1) - 8 * r(-1) + r(-2)) / (12 * h)


def bessel_direct(ksq, mu, alpha):
    return (mu + ksq) ** (-alpha)
