"""Regularity diagnostics for resolvent outputs.

Bessel-potential norms use the unit shift, ``||u||_{alpha,p} =
||(1 - Laplacian)^(alpha/2) u||_p``, independent of the ``mu`` used by the
resolvent; the two conventions agree up to constants on a fixed grid.
"""
from dataclasses import asdict, dataclass
import math

import numpy as np

from .drift import drift_power
from .errors import InvalidParameter
from .opnorm import LinearMap, estimate_opnorm_p
from .resolvent import (
    ResolventProblem,
    _theta_transpose,
    contraction_constant,
    theta_apply,
)
from .spectral import bessel_apply, gradient, lp_norm

__all__ = [
    "RegularityReport",
    "sobolev_norm",
    "smoothing_ratio",
    "holder_estimate",
    "gradient_bounds",
    "gradient_bound_check",
    "principal_inequality_check",
    "loglog_slope",
]


@dataclass
class RegularityReport:
    sobolev_ratio: float = math.nan
    holder_gamma_hat: float = math.nan
    holder_seminorm: float = math.nan
    grad_bound_slopes: tuple = (math.nan, math.nan)
    principal_lhs: float = math.nan
    principal_rhs: float = math.nan
    sobolev_convention: str = "(1 - Laplacian)^(alpha/2)"

    def to_dict(self):
        return asdict(self)


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(x, y, 1)[0])


def sobolev_norm(grid, u, alpha, p):
    """``||(1 - Laplacian)^(alpha/2) u||_p``; ``alpha`` may be negative."""
    return lp_norm(grid, bessel_apply(grid, 1.0, -alpha / 2.0, u), p)


def smoothing_ratio(prob, probes=4, iters=20, seed=0):
    """Estimated norm of the resolvent from ``W^(-1+2/r,p)`` to ``W^(1+2/q,p)``.

    Equivalently the ``p -> p`` norm of
    ``J^(1+2/q) Theta J^(1-2/r)`` with ``J^s = (1 - Laplacian)^(s/2)``,
    estimated by the p-norm power method (a lower bound).  The constant
    field is included among the starts.
    """
    if prob.r is None:
        raise InvalidParameter("smoothing_ratio needs r and q on the problem")
    grid, r, q = prob.grid, prob.r, prob.q
    up, down = 1.0 + 2.0 / q, 1.0 - 2.0 / r

    def fwd(h):
        return bessel_apply(grid, 1.0, -up / 2, theta_apply(prob, bessel_apply(grid, 1.0, -down / 2, h)))

    def adj(h):
        return bessel_apply(grid, 1.0, -down / 2, _theta_transpose(prob, bessel_apply(grid, 1.0, -up / 2, h)))

    est = estimate_opnorm_p(LinearMap(fwd, adj, "smoothing"), prob.p, grid.shape, probes, iters,
                            seed, starts=[np.ones(grid.shape)])
    return est.value


def _dyadic_shifts(n):
    s, out = 1, []
    while s <= n // 2:
        out.append(s)
        s *= 2
    return out


def holder_estimate(grid, u, drop_fine=2, drop_coarse=1):
    """Fit a Hölder exponent from sup-norm increments at dyadic scales.

    ``omega(h) = max_j max_x |u(x + h e_j) - u(x)|`` for shifts of ``2^m``
    cells (``h <= L/2``).  The exponent is the log-log slope over the scales
    left after dropping ``drop_fine`` finest and ``drop_coarse`` coarsest ones,
    clipped to ``[0, 1]``; the seminorm is ``max omega(h) / h^gamma`` over all
    scales.  A constant field gives ``(1.0, 0.0)``.

    Returns
    -------
    gamma_hat, seminorm : float
    """
    u = np.asarray(u, dtype=float)
    shifts = _dyadic_shifts(grid.n)
    hs = np.array([s * grid.h for s in shifts])
    omega = np.array([
        max(float(np.max(np.abs(np.roll(u, -s, axis=ax) - u))) for ax in range(grid.d))
        for s in shifts
    ])
    if np.all(omega == 0):
        return 1.0, 0.0
    keep = slice(drop_fine, len(shifts) - drop_coarse)
    hk, wk = hs[keep], omega[keep]
    if hk.size < 2 or np.any(wk <= 0):
        raise InvalidParameter(f"grid n={grid.n} leaves fewer than two usable scales")
    gamma = min(max(loglog_slope(hk, wk), 0.0), 1.0)
    return gamma, float(np.max(omega / hs**gamma))


def gradient_bounds(grid, u, p):
    """``(||grad u||_p, ||grad |grad u|^(p/2)||_2^(2/p))``."""
    gu = gradient(grid, u)
    mag = np.sqrt(np.sum(gu**2, axis=0))
    first = lp_norm(grid, mag, p)
    w = gradient(grid, mag ** (p / 2))
    second = lp_norm(grid, np.sqrt(np.sum(w**2, axis=0)), 2) ** (2.0 / p)
    return first, second


def gradient_bound_check(drift, p, mus, fs, mu1=0.0, neumann_tol=1e-10, delta=None):
    """Measure both gradient bounds of ``u = Theta(mu) f`` along ``mus``.

    For each ``mu`` the ratios to ``||f||_p`` are maximized over ``fs``; slopes
    are fitted against ``log(mu - mu1)``.  The check passes when the slopes are
    at most ``-1/2 + 0.1`` and ``1/p - 1/2 + 0.1``.

    Returns
    -------
    dict
        ``slopes``, ``targets``, the per-mu ratios and ``passed``.
    """
    grid = drift.grid
    mus = [float(m) for m in mus]
    if any(m <= mu1 for m in mus):
        raise InvalidParameter("every mu must exceed mu1")
    first, second = [], []
    for mu in mus:
        prob = ResolventProblem(mu, p, drift, neumann_tol, delta=delta)
        a = b = 0.0
        for f in fs:
            fn = lp_norm(grid, f, p)
            if fn == 0:
                continue
            g1, g2 = gradient_bounds(grid, theta_apply(prob, f), p)
            a, b = max(a, g1 / fn), max(b, g2 / fn)
        first.append(a)
        second.append(b)
    shifted = [m - mu1 for m in mus]
    if min(first) > 0 and min(second) > 0 and len(mus) > 1:
        slopes = (loglog_slope(shifted, first), loglog_slope(shifted, second))
    else:
        slopes = (-math.inf, -math.inf)
    targets = (-0.5, 1.0 / p - 0.5)
    return {
        "mus": mus,
        "grad_ratio": first,
        "grad_power_ratio": second,
        "slopes": slopes,
        "targets": targets,
        "passed": slopes[0] <= targets[0] + 0.1 and slopes[1] <= targets[1] + 0.1,
    }


def principal_inequality_check(drift, p, mu, f, delta_hat):
    """Both sides of the principal inequality for ``u = (mu - Laplacian)^(-1) |b|^(1-2/p) f``:

    ``lhs = delta (lam ||grad u||_p^p + ||grad |grad u|^(p/2)||_2^2)``,
    ``rhs = c(delta, p)^p ||f||_p^p``, with ``delta = delta_hat``.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise InvalidParameter("principal inequality is stated for f >= 0")
    grid = drift.grid
    _, b_comp = drift_power(drift, p)
    if drift.is_zero:
        b_comp = np.zeros(grid.shape) if p > 2 else b_comp
    u = bessel_apply(grid, mu, 1.0, b_comp * f)
    g1, g2 = gradient_bounds(grid, u, p)
    lhs = delta_hat * (drift.lam * g1**p + g2**p)
    rhs = contraction_constant(delta_hat, p) ** p * lp_norm(grid, f, p) ** p
    return lhs, rhs
