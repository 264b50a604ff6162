"""Drift fields: catalog construction, mollification, powers, form bounds.

A drift is stored as a :class:`DriftField`, a vector field together with the
shift ``lam`` and the claimed form bound ``delta_claimed``.  Singular catalog
drifts are always materialized through :func:`mollify_drift`, so the stored
samples are finite.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import spectral
from .errors import AdmissibilityViolation, ConfigError, InvalidParameter
from .spectral import bessel_apply, check_vector, heat_smooth

__all__ = [
    "DriftSpec",
    "DriftField",
    "WeakClassConstants",
    "make_hardy_drift",
    "make_smooth_drift",
    "make_drift",
    "mollify_drift",
    "drift_power",
    "estimate_form_bound",
    "estimate_weak_form_bound",
    "weak_class_constants",
    "hardy_constant",
]

KINDS = ("hardy", "smooth-trig", "file", "zero")


@dataclass(frozen=True)
class DriftSpec:
    """Declarative description of a catalog drift.

    ``cutoff`` and ``eps`` are the mollification level: samples with
    ``|x - center| > cutoff`` or ``|b| > cutoff`` are zeroed, then the field is
    smoothed by ``exp(eps * Laplacian)``.
    """

    kind: str
    c: float = 0.2
    amplitudes: tuple = (0.1, 0.1, 0.1)
    path: str | None = None
    cutoff: float = math.inf
    eps: float = 0.0
    lam: float = 1.0
    delta: float | None = None
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown drift kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "hardy" and not self.c > 0:
            raise ConfigError(f"hardy drift needs c > 0, got {self.c}")
        if self.kind == "file" and not self.path:
            raise ConfigError("file drift needs a path")
        if self.eps < 0:
            raise ConfigError(f"smoothing width eps must be >= 0, got {self.eps}")
        if not self.cutoff > 0:
            raise ConfigError(f"cutoff level must be > 0, got {self.cutoff}")
        if not self.lam > 0:
            raise ConfigError(f"lam must be > 0, got {self.lam}")

    @property
    def label(self):
        return self.name or self.kind


@dataclass(frozen=True, eq=False)
class DriftField:
    """A vector field ``b`` on ``grid`` with shift ``lam`` and claimed bound."""

    grid: spectral.TorusGrid
    b: np.ndarray
    lam: float = 1.0
    delta_claimed: float = 0.0
    name: str = "drift"
    magnitude: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = check_vector(self.grid, self.b)
        if not self.lam > 0:
            raise InvalidParameter(f"lam must be positive, got {self.lam}")
        if self.delta_claimed < 0:
            raise InvalidParameter(f"delta_claimed must be >= 0, got {self.delta_claimed}")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)
        mag = np.sqrt(np.sum(b**2, axis=0))
        mag.setflags(write=False)
        object.__setattr__(self, "magnitude", mag)

    @property
    def is_zero(self):
        return not np.any(self.b)

    def scaled(self, s):
        """The drift ``s * b``; the claimed bound scales by ``s**2``."""
        return DriftField(self.grid, s * self.b, self.lam, s * s * self.delta_claimed, self.name)

    def with_b(self, b, name=None):
        return DriftField(self.grid, b, self.lam, self.delta_claimed, name or self.name)

    @classmethod
    def zero(cls, grid, lam=1.0):
        return cls(grid, np.zeros((grid.d,) + grid.shape), lam, 0.0, "zero")


@dataclass(frozen=True)
class WeakClassConstants:
    m_d: float
    p_minus: float
    p_plus: float


def hardy_constant(d):
    """Best constant ``(2/(d-2))**2`` of the Hardy inequality."""
    return (2.0 / (d - 2)) ** 2


def hardy_center(grid):
    """Singular point: the box center shifted half a cell along every axis."""
    return grid.center + grid.h / 2


def _offsets(grid, center):
    x = grid.coordinates()
    return [xj - cj for xj, cj in zip(x, center)]


def mollify_drift(grid, b_raw, cutoff, eps, center=None):
    """Truncate and heat-smooth a raw drift.

    Samples where ``|x - center| > cutoff`` or ``|b_raw| > cutoff`` are set to
    zero, then every component goes through ``exp(eps * Laplacian)``.
    ``center`` defaults to the box center.
    """
    if eps < 0:
        raise InvalidParameter(f"smoothing width must be >= 0, got {eps}")
    if not cutoff > 0:
        raise InvalidParameter(f"cutoff must be > 0, got {cutoff}")
    b_raw = np.asarray(b_raw, dtype=float)
    if center is None:
        center = grid.center
    radius = np.sqrt(sum(o**2 for o in _offsets(grid, center)))
    mag = np.sqrt(np.sum(b_raw**2, axis=0))
    keep = (radius <= cutoff) & (mag <= cutoff)
    return heat_smooth(grid, eps, np.where(keep, b_raw, 0.0))


def make_hardy_drift(grid, c, spec=None):
    """Mollified Hardy drift ``c (x - x0) / |x - x0|^2``.

    ``x0`` sits half a cell off the nodes so the raw samples are finite.  The
    claimed form bound is ``c**2 * 4 / (d - 2)**2``.
    """
    if not c > 0:
        raise InvalidParameter(f"hardy drift needs c > 0, got {c}")
    spec = spec or DriftSpec("hardy", c=c)
    center = hardy_center(grid)
    off = _offsets(grid, center)
    r2 = sum(o**2 for o in off)
    b_raw = np.stack([np.broadcast_to(c * o / r2, grid.shape) for o in off])
    b = mollify_drift(grid, b_raw, spec.cutoff, spec.eps, center=center)
    return DriftField(grid, b, spec.lam, c * c * hardy_constant(grid.d), spec.label)


def make_smooth_drift(grid, amplitudes, spec=None):
    """Trigonometric drift ``b_j = a_j (sin(2 pi x_{j+1}/L) + cos(2 pi x_j/L))``.

    The cosine part gives the field a nonzero divergence.  The claimed bound
    is ``max|b|**2 / lam``, valid for any bounded drift.
    """
    a = np.broadcast_to(np.asarray(amplitudes, dtype=float), (grid.d,))
    spec = spec or DriftSpec("smooth-trig", amplitudes=tuple(a))
    x = grid.coordinates()
    w = 2 * np.pi / grid.L
    b = np.stack(
        [
            np.broadcast_to(a[j] * (np.sin(w * x[(j + 1) % grid.d]) + np.cos(w * x[j])), grid.shape)
            for j in range(grid.d)
        ]
    )
    if math.isfinite(spec.cutoff) or spec.eps:
        b = mollify_drift(grid, b, spec.cutoff, spec.eps)
    sup = float(np.max(np.sqrt(np.sum(b**2, axis=0))))
    delta = spec.delta if spec.delta is not None else sup**2 / spec.lam
    return DriftField(grid, b, spec.lam, delta, spec.label)


def make_drift(grid, spec):
    """Materialize a :class:`DriftSpec` on ``grid``."""
    if spec.kind == "hardy":
        return make_hardy_drift(grid, spec.c, spec)
    if spec.kind == "smooth-trig":
        return make_smooth_drift(grid, spec.amplitudes, spec)
    if spec.kind == "zero":
        return DriftField.zero(grid, spec.lam)
    from .fieldio import read_field

    b, file_grid = read_field(spec.path)
    if (file_grid.d, file_grid.n) != (grid.d, grid.n) or not math.isclose(file_grid.L, grid.L):
        raise ConfigError(f"{spec.path}: grid {file_grid} does not match {grid}")
    if b.shape != (grid.d,) + grid.shape:
        raise ConfigError(f"{spec.path}: expected a vector field, got shape {b.shape}")
    if spec.delta is None:
        raise ConfigError(f"{spec.path}: file drifts need an explicit delta")
    if math.isfinite(spec.cutoff) or spec.eps:
        b = mollify_drift(grid, b, spec.cutoff, spec.eps)
    return DriftField(grid, b, spec.lam, spec.delta, spec.label)


def drift_power(drift, p):
    """Return ``(|b|^(2/p - 1) b, |b|^(1 - 2/p))``, with ``0`` where ``b = 0``.

    At ``p = 2`` the second factor is identically one.
    """
    if not p >= 2:
        raise InvalidParameter(f"p must be >= 2, got {p}")
    mag = drift.magnitude
    if p == 2:
        return np.array(drift.b), np.ones(drift.grid.shape)
    nz = mag > 0
    safe = np.where(nz, mag, 1.0)
    b_pow = np.where(nz, safe ** (2.0 / p - 1.0), 0.0) * drift.b
    b_comp = np.where(nz, safe ** (1.0 - 2.0 / p), 0.0)
    return b_pow, b_comp


def _power_iteration(apply, grid, probes, iters, seed, tol):
    """Largest eigenvalue of a symmetric PSD map by multi-start power iteration.

    Returns the best Rayleigh quotient seen and the residual
    ``||A v - rho v|| / ||v||`` at the vector that produced it.
    """
    root = np.random.SeedSequence(seed)
    best, best_res = 0.0, 0.0
    for child in root.spawn(probes):
        rng = np.random.default_rng(child)
        v = rng.standard_normal(grid.shape)
        v /= np.linalg.norm(v)
        for _ in range(iters):
            av = apply(v)
            rho = float(np.vdot(v, av))
            res = float(np.linalg.norm(av - rho * v))
            if rho > best:
                best, best_res = rho, res
            nrm = np.linalg.norm(av)
            if nrm == 0 or res <= tol * max(rho, 1e-300):
                break
            v = av / nrm
    return best, best_res


def estimate_form_bound(drift, probes=4, iters=200, seed=0, tol=1e-8):
    """Estimate ``delta = || |b| (lam - Laplacian)^(-1/2) ||_{2->2}^2``.

    Power iteration on ``(lam - Laplacian)^(-1/2) |b|^2 (lam - Laplacian)^(-1/2)``.
    The returned value is a Rayleigh quotient, hence a lower bound on the
    grid operator norm.

    Returns
    -------
    delta_hat : float
    residual : float
    """
    if probes < 1 or iters < 1:
        raise InvalidParameter("probes and iters must be >= 1")
    if drift.is_zero:
        return 0.0, 0.0
    grid, lam = drift.grid, drift.lam
    w = drift.magnitude**2

    def apply(v):
        return bessel_apply(grid, lam, 0.5, w * bessel_apply(grid, lam, 0.5, v))

    return _power_iteration(apply, grid, probes, iters, seed, tol)


def estimate_weak_form_bound(drift, probes=4, iters=200, seed=0, tol=1e-8):
    """Estimate ``|| |b|^(1/2) (lam - Laplacian)^(-1/4) ||_{2->2}^2`` the same way."""
    if probes < 1 or iters < 1:
        raise InvalidParameter("probes and iters must be >= 1")
    if drift.is_zero:
        return 0.0
    grid, lam = drift.grid, drift.lam
    w = drift.magnitude

    def apply(v):
        return bessel_apply(grid, lam, 0.25, w * bessel_apply(grid, lam, 0.25, v))

    return _power_iteration(apply, grid, probes, iters, seed, tol)[0]


def weak_class_constants(d, delta):
    """Constants ``m_d`` and the exponent window ``(p_-, p_+)`` of the weak class.

    ``p_+`` is ``inf`` at ``delta = 0``.  ``m_d * delta = 1`` is the degenerate
    case ``p_- = p_+ = 2``; anything larger is rejected.
    """
    if int(d) != d or d < 3:
        raise InvalidParameter(f"d must be an integer >= 3, got {d}")
    if delta < 0:
        raise InvalidParameter(f"delta must be >= 0, got {delta}")
    m_d = math.sqrt(math.pi) / math.sqrt(2 * math.e) * d ** (d / 2) * (d - 1) ** (-(d - 1) / 2)
    x = m_d * delta
    if x > 1:
        raise AdmissibilityViolation(f"m_d * delta = {x:.6g} >= 1: weak-class window is empty")
    root = math.sqrt(1 - x)
    p_plus = math.inf if root == 1 else 2 / (1 - root)
    return WeakClassConstants(m_d, 2 / (1 + root), p_plus)
