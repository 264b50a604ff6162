"""Resolvent of ``-Laplacian + b . grad`` by Neumann-series perturbation.

With ``R = (mu - Laplacian)^(-1)``, ``W = |b|^(1 - 2/p)`` and
``D v = |b|^(2/p - 1) b . grad v`` the drift term factors as
``b . grad = W D``, and

    (mu - Laplacian + b . grad)^(-1) = R - Q (1 + T)^(-1) G,
    G = D R,   Q = R W,   T = D R W.

``(1 + T)^(-1)`` is summed as a Neumann series, which converges whenever
``||T||_{p->p} < 1``; the contraction constant ``c(delta, p)`` bounds that
norm for a form-bounded drift.  Every operator here also has an explicit
transpose so the p-norm estimator in :mod:`formbound.opnorm` can use it.
"""
from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

from .drift import drift_power, estimate_form_bound
from .errors import (
    AdmissibilityViolation,
    CalibrationFailure,
    DivergenceDetected,
    InvalidParameter,
)
from .opnorm import LinearMap, estimate_opnorm_p
from .spectral import bessel_apply, divergence, gradient, lp_norm, multiply

__all__ = [
    "ResolventProblem",
    "NeumannReport",
    "ConstantsLedger",
    "CalibrationResult",
    "contraction_constant",
    "admissible_p_range",
    "apply_Gp",
    "apply_Qp",
    "apply_Tp",
    "apply_Gp_r",
    "apply_Qp_q",
    "apply_operator",
    "operator_map",
    "neumann_inverse",
    "theta_apply",
    "theta_factored_apply",
    "theta_map",
    "pseudo_resolvent_defect",
    "mu_to_identity_defect",
    "quasicontraction_check",
    "calibrate_mu0",
    "default_rq",
]


def contraction_constant(delta, p):
    """``c(delta, p)``, the bound on ``||T_p||_{p->p}``.

    ``c^p = (p/2 delta + (p-2)/2 sqrt(delta)) /
    (p - 1 - (p-1)(p-2)/2 sqrt(delta) - p(p-2)/4 delta)``.
    Equals ``sqrt(delta)`` at ``p = 2`` and is below one iff
    ``sqrt(delta) < 2/p``.
    """
    if delta < 0:
        raise InvalidParameter(f"delta must be >= 0, got {delta}")
    if not p >= 2:
        raise InvalidParameter(f"p must be >= 2, got {p}")
    s = math.sqrt(delta)
    num = p / 2 * delta + (p - 2) / 2 * s
    den = p - 1 - (p - 1) * (p - 2) / 2 * s - p * (p - 2) / 4 * delta
    if den <= 0:
        raise AdmissibilityViolation(
            f"c(delta={delta:g}, p={p:g}) is vacuous: denominator base {den:.6g} <= 0"
        )
    return (num / den) ** (1.0 / p)


def admissible_p_range(delta):
    """Half-open interval ``[2, 2/sqrt(delta))`` of admissible exponents."""
    if not 0 <= delta < 1:
        raise AdmissibilityViolation(f"need 0 <= delta < 1, got {delta}")
    return 2.0, (math.inf if delta == 0 else 2.0 / math.sqrt(delta))


def default_rq(p):
    """Interior defaults ``r = (2 + p)/2``, ``q = 2p``."""
    return (2.0 + p) / 2.0, 2.0 * p


@dataclass(frozen=True)
class NeumannReport:
    terms_used: int
    last_term_ratio: float
    tail_bound: float
    converged: bool
    ratios: tuple = field(default=(), repr=False)


@dataclass
class ConstantsLedger:
    """Calibrated and fitted constants; ``nan`` where not measured."""

    c_delta_p: float = math.nan
    mu0: float = math.nan
    C1: float = math.nan
    C2: float = math.nan
    K1r: float = math.nan
    K2q: float = math.nan
    K1: float = math.nan
    K2: float = math.nan
    mu1: float = math.nan


@dataclass(frozen=True, eq=False)
class ResolventProblem:
    """One application of the resolvent: ``(mu, p, drift)`` plus tolerances.

    ``delta`` is the form bound used for admissibility (defaults to the
    drift's claimed bound).  ``r`` and ``q`` are only needed by the factored
    representation.
    """

    mu: float
    p: float
    drift: object
    neumann_tol: float = 1e-10
    neumann_max_terms: int = 400
    r: float | None = None
    q: float | None = None
    delta: float | None = None
    dealias: bool = False

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidParameter(f"mu must be positive, got {self.mu}")
        if not self.p >= 2:
            raise AdmissibilityViolation(f"p must be >= 2, got {self.p}")
        delta = self.delta_used
        if delta > 0 and not self.p < 2 / math.sqrt(delta):
            raise AdmissibilityViolation(
                f"p = {self.p:g} is outside [2, 2/sqrt(delta)) for delta = {delta:g}"
            )
        if (self.r is None) != (self.q is None):
            raise InvalidParameter("r and q must be given together")
        if self.r is not None and not 2 <= self.r < self.p < self.q < math.inf:
            raise AdmissibilityViolation(
                f"need 2 <= r < p < q < inf, got r={self.r}, p={self.p}, q={self.q}"
            )
        if self.neumann_tol <= 0 or self.neumann_max_terms < 1:
            raise InvalidParameter("neumann_tol must be > 0 and neumann_max_terms >= 1")

    @property
    def delta_used(self):
        return self.drift.delta_claimed if self.delta is None else self.delta

    @property
    def grid(self):
        return self.drift.grid

    def at(self, mu=None, **changes):
        """Copy with a different ``mu`` (or other fields)."""
        kw = dict(
            mu=self.mu, p=self.p, drift=self.drift, neumann_tol=self.neumann_tol,
            neumann_max_terms=self.neumann_max_terms, r=self.r, q=self.q,
            delta=self.delta, dealias=self.dealias,
        )
        if mu is not None:
            kw["mu"] = mu
        kw.update(changes)
        return ResolventProblem(**kw)

    @cached_property
    def _weights(self):
        return drift_power(self.drift, self.p)

    @property
    def b_pow(self):
        return self._weights[0]

    @property
    def b_comp(self):
        return self._weights[1]

    def _mul(self, a, u):
        return multiply(self.grid, a, u, self.dealias)

    def R(self, u, alpha=1.0):
        return bessel_apply(self.grid, self.mu, alpha, u)

    def D(self, v):
        """``b^(2/p) . grad v``."""
        g = gradient(self.grid, v)
        return sum(self._mul(bj, gj) for bj, gj in zip(self.b_pow, g))

    def Dt(self, w):
        """Transpose of :meth:`D`: ``-div(b^(2/p) w)``."""
        return -divergence(self.grid, np.stack([self._mul(bj, w) for bj in self.b_pow]))

    def W(self, u):
        return self._mul(self.b_comp, u)


def apply_Gp(prob, f):
    """``G_p f = b^(2/p) . grad (mu - Laplacian)^(-1) f``."""
    return prob.D(prob.R(f))


def apply_Qp(prob, f):
    """``Q_p f = (mu - Laplacian)^(-1) |b|^(1-2/p) f``."""
    return prob.R(prob.W(f))


def apply_Tp(prob, f):
    """``T_p f = b^(2/p) . grad (mu - Laplacian)^(-1) |b|^(1-2/p) f``."""
    return prob.D(prob.R(prob.W(f)))


def _apply_Tp_t(prob, f):
    return prob.W(prob.R(prob.Dt(f)))


def _rq(prob):
    if prob.r is None:
        raise InvalidParameter("this operation needs r and q on the problem")
    return prob.r, prob.q


def apply_Gp_r(prob, f):
    """``G_p(r) f = b^(2/p) . grad (mu - Laplacian)^(-1/2-1/r) f``."""
    r, _ = _rq(prob)
    return prob.D(prob.R(f, 0.5 + 1.0 / r))


def apply_Qp_q(prob, f):
    """``Q_p(q) f = (mu - Laplacian)^(-1/2+1/q) |b|^(1-2/p) f``."""
    _, q = _rq(prob)
    return prob.R(prob.W(f), 0.5 - 1.0 / q)


def apply_operator(prob, u, mu=None):
    """``(mu - Laplacian + b . grad) u`` with the same products as the resolvent."""
    mu = prob.mu if mu is None else mu
    grid = prob.grid
    lap = grid.ifft(-grid.ksq * grid.fft(u))
    return mu * u - lap + prob.W(prob.D(u))


def operator_map(prob, name):
    """:class:`LinearMap` (with transpose) for ``"G"``, ``"Q"``, ``"T"``, ``"Gr"``, ``"Qq"``."""
    maps = {
        "G": (lambda f: apply_Gp(prob, f), lambda f: prob.R(prob.Dt(f))),
        "Q": (lambda f: apply_Qp(prob, f), lambda f: prob.W(prob.R(f))),
        "T": (lambda f: apply_Tp(prob, f), lambda f: _apply_Tp_t(prob, f)),
        "Gr": (
            lambda f: apply_Gp_r(prob, f),
            lambda f: prob.R(prob.Dt(f), 0.5 + 1.0 / _rq(prob)[0]),
        ),
        "Qq": (
            lambda f: apply_Qp_q(prob, f),
            lambda f: prob.W(prob.R(f, 0.5 - 1.0 / _rq(prob)[1])),
        ),
    }
    fwd, adj = maps[name]
    return LinearMap(fwd, adj, f"{name}(mu={prob.mu:g}, p={prob.p:g})")


def neumann_inverse(prob, g, transpose=False):
    """Sum ``(1 + T_p)^(-1) g = sum_k (-T_p)^k g``.

    Terms are added until ``||term_k||_p <= neumann_tol * ||g||_p`` or the term
    budget runs out.  Three consecutive term ratios ``>= 1`` raise
    :class:`DivergenceDetected`.

    Returns
    -------
    x : ndarray
    report : NeumannReport
    """
    step = (lambda v: _apply_Tp_t(prob, v)) if transpose else (lambda v: apply_Tp(prob, v))
    p = prob.p
    grid = prob.grid
    gnorm = lp_norm(grid, g, p)
    x = np.array(g, dtype=float, copy=True)
    if gnorm == 0 or prob.drift.is_zero:
        return x, NeumannReport(1, 0.0, 0.0, True)
    term, tnorm = x, gnorm
    ratios = []
    growing = 0
    k = 1
    while tnorm > prob.neumann_tol * gnorm and k < prob.neumann_max_terms:
        term = -step(term)
        new = lp_norm(grid, term, p)
        ratio = new / tnorm
        ratios.append(ratio)
        tnorm = new
        x += term
        k += 1
        growing = growing + 1 if ratio >= 1 else 0
        if growing >= 3:
            report = NeumannReport(k, ratio, math.inf, False, tuple(ratios))
            raise DivergenceDetected(
                f"Neumann series diverging at mu={prob.mu:g}, p={prob.p:g}: "
                f"term ratio {ratio:.3g} >= 1 for 3 terms",
                report,
            )
    last = ratios[-1] if ratios else 0.0
    tail = tnorm * last / (1 - last) if last < 1 else math.inf
    return x, NeumannReport(k, last, tail, tnorm <= prob.neumann_tol * gnorm, tuple(ratios))


def theta_apply(prob, f, full_output=False):
    """Resolvent ``(mu - Laplacian)^(-1) f - Q_p (1 + T_p)^(-1) G_p f``."""
    u0 = prob.R(f)
    if prob.drift.is_zero:
        rep = NeumannReport(1, 0.0, 0.0, True)
        return (u0, rep) if full_output else u0
    x, rep = neumann_inverse(prob, prob.D(u0))
    u = u0 - apply_Qp(prob, x)
    return (u, rep) if full_output else u


def _theta_transpose(prob, f):
    u0 = prob.R(f)
    if prob.drift.is_zero:
        return u0
    x, _ = neumann_inverse(prob, prob.W(u0), transpose=True)
    return u0 - prob.R(prob.Dt(x))


def theta_map(prob):
    return LinearMap(lambda f: theta_apply(prob, f), lambda f: _theta_transpose(prob, f),
                     f"Theta(mu={prob.mu:g})")


def theta_factored_apply(prob, f, full_output=False):
    """Factored resolvent with the fractional splittings set by ``r`` and ``q``:

    ``R - R^(1/2+1/q) Q_p(q) (1 + T_p)^(-1) G_p(r) R^(1/2-1/r)``,
    writing ``R^a`` for ``(mu - Laplacian)^(-a)``.
    """
    r, q = _rq(prob)
    u0 = prob.R(f)
    if prob.drift.is_zero:
        rep = NeumannReport(1, 0.0, 0.0, True)
        return (u0, rep) if full_output else u0
    g = apply_Gp_r(prob, prob.R(f, 0.5 - 1.0 / r))
    x, rep = neumann_inverse(prob, g)
    u = u0 - prob.R(apply_Qp_q(prob, x), 0.5 + 1.0 / q)
    return (u, rep) if full_output else u


def pseudo_resolvent_defect(prob, nu, f):
    """``||Theta(mu) f - Theta(nu) f - (nu - mu) Theta(mu) Theta(nu) f||_p / ||f||_p``."""
    grid, p = prob.grid, prob.p
    fn = lp_norm(grid, f, p)
    if fn == 0:
        return 0.0
    other = prob.at(nu)
    tn = theta_apply(other, f)
    lhs = theta_apply(prob, f) - tn
    rhs = (nu - prob.mu) * theta_apply(prob, tn)
    return lp_norm(grid, lhs - rhs, p) / fn


def mu_to_identity_defect(prob, f):
    """``||mu Theta(mu) f - f||_p / ||f||_p``."""
    grid, p = prob.grid, prob.p
    fn = lp_norm(grid, f, p)
    if fn == 0:
        return 0.0
    return lp_norm(grid, prob.mu * theta_apply(prob, f) - f, p) / fn


def quasicontraction_check(prob, mu0, probes=4, iters=20, seed=0):
    """Return ``(||Theta(mu)||_{p->p} * (mu - mu0), mu0)``; passes when ``<= 1.05``.

    The constant field is always among the starting vectors: it is the
    extremal vector in the drift-free case.
    """
    if not prob.mu > mu0:
        raise InvalidParameter(f"mu = {prob.mu} must exceed mu0 = {mu0}")
    grid = prob.grid
    est = estimate_opnorm_p(theta_map(prob), prob.p, grid.shape, probes, iters, seed,
                            starts=[np.ones(grid.shape)])
    return est.value * (prob.mu - mu0), mu0


@dataclass(frozen=True)
class CalibrationResult:
    mu0: float
    delta_hat: float
    c_delta_p: float
    mus: tuple
    tp_norms: tuple
    neumann_ratios: tuple
    admissible: tuple


def calibrate_mu0(drift, p, mu_grid, probes=4, iters=20, seed=0, delta_hat=None,
                  form_probes=4, form_iters=200):
    """Smallest ``mu`` on ``mu_grid`` where ``T_p`` is a certified-looking contraction.

    A grid point qualifies when the estimated ``||T_p||_{p->p}`` is at most
    ``c(delta_hat, p)`` and a Neumann solve at that ``mu`` shows term ratios
    below one.  The form bound is estimated when not supplied.

    Raises
    ------
    CalibrationFailure
        If no grid point qualifies.
    """
    mus = [float(m) for m in mu_grid]
    if any(b <= a for a, b in zip(mus, mus[1:])):
        raise InvalidParameter("mu grid must be strictly ascending")
    if not mus:
        raise CalibrationFailure("empty mu grid")
    if delta_hat is None:
        delta_hat = estimate_form_bound(drift, form_probes, form_iters, seed)[0]
    if drift.is_zero:
        return CalibrationResult(mus[0], 0.0, 0.0, tuple(mus), (0.0,) * len(mus),
                                 (0.0,) * len(mus), (True,) * len(mus))
    try:
        admissible_p_range(delta_hat)
        c = contraction_constant(delta_hat, p)
    except AdmissibilityViolation as exc:
        raise CalibrationFailure(str(exc)) from exc
    if not c < 1:
        raise CalibrationFailure(f"p = {p:g} is outside the window for delta_hat = {delta_hat:.4g} (c = {c:.4g})")
    grid = drift.grid
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(grid.shape)
    norms, ratios, ok = [], [], []
    for mu in mus:
        prob = ResolventProblem(mu, p, drift, delta=delta_hat)
        tn = estimate_opnorm_p(operator_map(prob, "T"), p, grid.shape, probes, iters, seed).value
        try:
            _, rep = neumann_inverse(prob.at(neumann_max_terms=60), g)
            ratio = max(rep.ratios[-3:]) if rep.ratios else 0.0
        except DivergenceDetected as exc:
            ratio = exc.report.last_term_ratio
        norms.append(tn)
        ratios.append(ratio)
        ok.append(tn <= c and ratio < 1)
    for mu, good in zip(mus, ok):
        if good:
            return CalibrationResult(mu, delta_hat, c, tuple(mus), tuple(norms), tuple(ratios), tuple(ok))
    raise CalibrationFailure(
        f"no mu in {mus} satisfies ||T_p|| <= c = {c:.4g} (estimates {np.round(norms, 4).tolist()})"
    )
