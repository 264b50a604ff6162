"""Invariant-suite runner, parameter sweeps and report emission.

A check is a pure function of a :class:`SuiteContext`.  It returns its
inputs, measured values, the bound it was compared with and the derived
verdict.  :func:`run_suite` executes the selected checks in dependency order
(form bound, calibration, constants, resolvent, semigroup, regularity) and
merges the records into a :class:`DiagnosticsReport`.

Seeds are derived per check from the root seed and the check name, so the
measured values do not depend on which other checks ran or on how they were
scheduled across threads.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
import csv
import io
import json
import math
import os
import threading
import time
import zlib

import numpy as np

from . import __version__
from .config import from_dict
from .dense import dense_form_bound, dense_solve, gradient_matrices, laplacian_matrix
from .drift import (
    DriftField,
    estimate_form_bound,
    estimate_weak_form_bound,
    make_drift,
    weak_class_constants,
)
from .errors import (
    AdmissibilityViolation,
    CalibrationFailure,
    DivergenceDetected,
    FormBoundError,
)
from .opnorm import LinearMap, estimate_opnorm_p
from .regularity import (
    gradient_bound_check,
    holder_estimate,
    loglog_slope,
    principal_inequality_check,
    smoothing_ratio,
)
from .resolvent import (
    ConstantsLedger,
    ResolventProblem,
    apply_operator,
    calibrate_mu0,
    contraction_constant,
    mu_to_identity_defect,
    operator_map,
    pseudo_resolvent_defect,
    quasicontraction_check,
    theta_apply,
    theta_factored_apply,
    theta_map,
)
from .semigroup import (
    SemigroupStepper,
    check_linf_contraction,
    check_positivity,
    check_quasicontraction_lp,
    trotter_convergence,
)
from .spectral import TorusGrid, bessel_apply, bessel_apply_quadrature, lp_norm

__all__ = [
    "CheckRecord",
    "DiagnosticsReport",
    "SuiteContext",
    "CHECKS",
    "SUITES",
    "suite_checks",
    "run_suite",
    "run_calibration",
    "sweep",
    "write_sweep_csv",
    "SWEEP_COLUMNS",
]


# ---------------------------------------------------------------- records


@dataclass
class CheckRecord:
    name: str
    phase: str
    inputs: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    bound: dict = field(default_factory=dict)
    passed: bool = False
    status: str = "ok"
    message: str = ""
    runtime: float = 0.0

    def to_dict(self):
        return _plain(asdict(self))


def _plain(obj):
    """Recursively convert numpy scalars and arrays to JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _flatten(prefix, value, out):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, value))
    return out


@dataclass
class DiagnosticsReport:
    """Everything one suite run measured.

    ``constants`` maps drift label, then ``p`` (as a string), to a
    :class:`ConstantsLedger` dictionary.
    """

    checks: list
    constants: dict
    metadata: dict
    config: dict
    aborted: bool = False

    @property
    def passed(self):
        return not self.aborted and all(c.passed for c in self.checks)

    @property
    def divergence(self):
        return any(c.status == "divergence" for c in self.checks)

    @property
    def exit_code(self):
        if self.divergence:
            return 3
        return 0 if self.passed else 1

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def measured_values(self):
        """``{check name: measured}``, the part that must reproduce bit-exactly."""
        return {c.name: c.to_dict()["measured"] for c in self.checks}

    def to_dict(self):
        return {
            "metadata": _plain(self.metadata),
            "passed": self.passed,
            "aborted": self.aborted,
            "exit_code": self.exit_code,
            "constants": _plain(self.constants),
            "checks": [c.to_dict() for c in self.checks],
            "config": _plain(self.config),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, data):
        checks = [CheckRecord(**c) for c in data["checks"]]
        return cls(checks, data.get("constants", {}), data.get("metadata", {}),
                   data.get("config", {}), data.get("aborted", False))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def csv_rows(self):
        """Long format: one row per scalar measured value."""
        rows = []
        for c in self.checks:
            for key, value in _flatten("", c.to_dict()["measured"], []):
                rows.append([c.name, c.status, c.passed, f"{c.runtime:.3f}", key, value])
        return rows

    def write(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        jpath = os.path.join(out_dir, "report.json")
        with open(jpath, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
        cpath = os.path.join(out_dir, "checks.csv")
        with open(cpath, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["check", "status", "passed", "runtime_s", "quantity", "value"])
            w.writerows(self.csv_rows())
        return jpath, cpath

    def to_markdown(self):
        meta = self.metadata
        lines = [
            "# Diagnostics report",
            "",
            f"- version: {meta.get('version', '?')}",
            f"- suite: {meta.get('suite', '?')}",
            f"- seed: {meta.get('seed', '?')}",
            f"- grid: {meta.get('grid', '?')}",
            f"- verdict: {'PASS' if self.passed else 'FAIL'}"
            + (" (aborted)" if self.aborted else "")
            + (" (Neumann divergence detected)" if self.divergence else ""),
            "",
            "## Checks",
            "",
            "| check | phase | status | pass | runtime [s] | summary |",
            "|---|---|---|---|---|---|",
        ]
        for c in self.checks:
            lines.append(
                f"| {c.name} | {c.phase} | {c.status} | {'yes' if c.passed else 'NO'} "
                f"| {c.runtime:.2f} | {_summary(c)} |"
            )
        if self.constants:
            lines += ["", "## Constants", "", "| drift | p | " + " | ".join(_LEDGER_FIELDS) + " |",
                      "|---|---|" + "---|" * len(_LEDGER_FIELDS)]
            for label, per_p in self.constants.items():
                for p, led in per_p.items():
                    vals = " | ".join(_fmt(led.get(k, math.nan)) for k in _LEDGER_FIELDS)
                    lines.append(f"| {label} | {p} | {vals} |")
        failed = [c for c in self.checks if not c.passed]
        if failed:
            lines += ["", "## Failures", ""]
            for c in failed:
                lines.append(f"- **{c.name}** ({c.status}): {c.message or 'bound not met'}")
        return "\n".join(lines) + "\n"


_LEDGER_FIELDS = [f for f in ConstantsLedger.__dataclass_fields__]


def _fmt(v):
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, (int, float)):
        return f"{v:.4g}"
    return str(v)


def _summary(c, limit=4):
    items = [(k, v) for k, v in _flatten("", c.to_dict()["measured"], [])
             if isinstance(v, (int, float, bool))]
    text = ", ".join(f"{k}={_fmt(v)}" for k, v in items[:limit])
    return text + (", ..." if len(items) > limit else "")


# ---------------------------------------------------------------- context


class SuiteContext:
    """Shared, lazily filled state of one suite run.

    Drifts are materialized once per ``(spec, grid)``; the form-bound and
    calibration phases fill ``delta_hat`` and ``calibration`` before any
    dependent check runs.
    """

    def __init__(self, config):
        self.config = config
        g = config.grid
        self.grid = TorusGrid(g.d, g.n, g.L, workers=config.threads)
        self._drifts = {}
        self._lock = threading.Lock()
        self.delta_hat = {}
        self.calibration = {}
        self.ledger = {}

    # -- randomness

    def seed(self, *tags):
        key = [zlib.crc32(str(t).encode()) for t in tags]
        ss = np.random.SeedSequence(self.config.seed, spawn_key=key)
        return int(ss.generate_state(1, np.uint64)[0])

    def rng(self, *tags):
        return np.random.default_rng(self.seed(*tags))

    def fields(self, grid, count, *tags, nonnegative=False):
        """Heat-smoothed Gaussian test fields, width scaled with the box."""
        rng = self.rng("fields", *tags)
        eps = self.config.field_smoothing * (grid.L / (2 * math.pi)) ** 2
        out = []
        for _ in range(count):
            f = grid.random_field(rng, smooth=eps)
            out.append(np.maximum(f, 0.0) if nonnegative else f)
        return out

    # -- grids and drifts

    def make_grid(self, n=None, L=None):
        g = self.config.grid
        return TorusGrid(g.d, g.n if n is None else n, g.L if L is None else L,
                         workers=self.config.threads)

    def drift(self, spec, grid=None):
        grid = grid or self.grid
        key = (spec, grid)
        with self._lock:
            if key not in self._drifts:
                self._drifts[key] = make_drift(grid, spec)
            return self._drifts[key]

    @property
    def specs(self):
        return list(self.config.drift)

    def singular_spec(self):
        """The Hardy catalog entry, or the first drift when there is none."""
        return self.config.first_drift("hardy") or self.config.drift[0]

    def smooth_spec(self):
        return self.config.first_drift("smooth-trig") or self.config.drift[0]

    # -- tolerances

    @property
    def tol(self):
        return self.config.tolerances

    def problem(self, mu, p, drift, **kw):
        kw.setdefault("neumann_tol", self.tol.neumann_tol)
        kw.setdefault("neumann_max_terms", self.tol.neumann_max_terms)
        kw.setdefault("dealias", self.config.dealias)
        return ResolventProblem(mu, p, drift, **kw)

    def mu0(self, spec, p):
        cal = self.calibration.get((spec.label, float(p)))
        return cal.mu0 if cal is not None else self.config.resolvent.mu_grid[0]

    def admissible(self, spec, p):
        delta = self.drift(spec).delta_claimed
        return p >= 2 and (delta == 0 or p < 2 / math.sqrt(delta))

    def calibration_ps(self):
        c = self.config
        ps = set(c.resolvent.p) | set(c.resolvent.contraction_p) | set(c.regularity.principal_p)
        ps |= {c.semigroup.p, c.trotter.p, c.regularity.holder_p, c.regularity.smoothing_prq[0]}
        return sorted(float(p) for p in ps)


# ---------------------------------------------------------------- registry


@dataclass(frozen=True)
class _Check:
    name: str
    phase: str
    func: object
    needs: tuple


CHECKS = {}
PHASES = ("form", "calibration", "constants", "resolvent", "semigroup", "regularity", "meta")


def _check(name, phase, needs=()):
    def deco(func):
        CHECKS[name] = _Check(name, phase, func, tuple(needs))
        return func
    return deco


def _rel(a, b):
    nb = np.linalg.norm(np.ravel(b))
    return float(np.linalg.norm(np.ravel(a) - np.ravel(b)) / nb) if nb else float(np.linalg.norm(a))


# ---- form bound


@_check("form_bound", "form")
def _form_bound(ctx):
    t = ctx.tol
    measured, ok = {}, True
    for spec in ctx.specs:
        dr = ctx.drift(spec)
        dh, res = estimate_form_bound(dr, t.form_probes, t.form_iters, ctx.seed("form", spec.label), t.form_tol)
        weak = estimate_weak_form_bound(dr, t.form_probes, t.form_iters, ctx.seed("weak", spec.label), t.form_tol)
        ctx.delta_hat[spec.label] = dh
        measured[spec.label] = {"delta_hat": dh, "residual": res, "delta_claimed": dr.delta_claimed,
                                "weak_delta_hat": weak}
        # the estimate is a lower bound, so it may not exceed the claim
        ok &= dh <= dr.delta_claimed * 1.05 + 1e-12 and res <= 1e-4 * max(dh, 1e-300) + 1e-14
    return {"probes": t.form_probes, "iters": t.form_iters}, measured, \
        {"delta_hat": "<= 1.05 * delta_claimed", "residual": "<= 1e-4 * delta_hat"}, ok


@_check("form_bound_scaling", "form")
def _form_bound_scaling(ctx):
    spec = ctx.singular_spec()
    dr = ctx.drift(spec)
    t = ctx.tol
    s = 2.0
    d1, _ = estimate_form_bound(dr, t.form_probes, t.form_iters, ctx.seed("scale"), t.form_tol)
    d2, _ = estimate_form_bound(dr.scaled(s), t.form_probes, t.form_iters, ctx.seed("scale"), t.form_tol)
    ratio = d2 / d1 if d1 else s * s
    return {"drift": spec.label, "scale": s}, {"delta_hat": d1, "delta_hat_scaled": d2, "ratio": ratio}, \
        {"ratio": s * s, "rtol": 1e-6}, abs(ratio - s * s) <= 1e-6 * s * s


@_check("form_bound_refinement", "form")
def _form_bound_refinement(ctx):
    t = ctx.tol
    coarse = ctx.make_grid(n=ctx.grid.n // 2)
    measured, ok = {}, True
    for spec in ctx.specs:
        vals = []
        for g in (coarse, ctx.grid):
            vals.append(estimate_form_bound(ctx.drift(spec, g), t.form_probes, t.form_iters,
                                            ctx.seed("refine", spec.label), t.form_tol)[0])
        change = abs(vals[1] - vals[0]) / vals[1] if vals[1] else 0.0
        measured[spec.label] = {"n": [coarse.n, ctx.grid.n], "delta_hat": vals, "relative_change": change}
        ok &= change <= 0.05
    return {}, measured, {"relative_change": "<= 0.05"}, ok


@_check("dense_form_bound", "form")
def _dense_form_bound(ctx):
    g = ctx.make_grid(n=ctx.config.resolvent.dense_n)
    measured, ok = {}, True
    for spec in ctx.specs:
        dr = ctx.drift(spec, g)
        est, _ = estimate_form_bound(dr, ctx.tol.form_probes, 1000, ctx.seed("dense-form", spec.label), 1e-12)
        exact = dense_form_bound(g, dr.b, dr.lam)
        err = abs(est - exact) / exact if exact else abs(est)
        measured[spec.label] = {"power_iteration": est, "dense_eig": exact, "relative_error": err}
        ok &= err <= 1e-6
    return {"n": g.n}, measured, {"relative_error": "<= 1e-6"}, ok


# ---- calibration


@_check("calibration", "calibration", needs=("form_bound",))
def _calibration(ctx):
    c = ctx.config
    measured, ok = {}, True
    for spec in ctx.specs:
        dr = ctx.drift(spec)
        dh = ctx.delta_hat[spec.label]
        for p in ctx.calibration_ps():
            if not ctx.admissible(spec, p):
                continue
            cal = calibrate_mu0(dr, p, c.resolvent.mu_grid, c.tolerances.opnorm_probes,
                                c.tolerances.opnorm_iters, ctx.seed("cal", spec.label, p), delta_hat=dh)
            ctx.calibration[(spec.label, p)] = cal
            ctx.ledger.setdefault(spec.label, {}).setdefault(p, {}).update(
                c_delta_p=cal.c_delta_p, mu0=cal.mu0, mu1=cal.mu0)
            measured[f"{spec.label}/p={p:g}"] = {"mu0": cal.mu0, "c_delta_p": cal.c_delta_p,
                                                 "tp_norm_at_mu0": cal.tp_norms[cal.mus.index(cal.mu0)]}
            ok &= cal.mu0 in cal.mus
    return {"mu_grid": list(c.resolvent.mu_grid)}, measured, {"mu0": "first grid mu with ||T_p|| <= c"}, ok


# ---- closed-form constants


def _mp_contraction(delta, p):
    import mpmath

    mpmath.mp.dps = 40
    d, p = mpmath.mpf(delta), mpmath.mpf(p)
    s = mpmath.sqrt(d)
    num = p / 2 * d + (p - 2) / 2 * s
    den = p - 1 - (p - 1) * (p - 2) / 2 * s - p * (p - 2) / 4 * d
    return float((num / den) ** (1 / p))


def _mp_md(d):
    import mpmath

    mpmath.mp.dps = 40
    d = mpmath.mpf(d)
    return float(mpmath.sqrt(mpmath.pi / (2 * mpmath.e)) * d ** (d / 2) * (d - 1) ** (-(d - 1) / 2))


@_check("closed_form_constants", "constants")
def _closed_form(ctx):
    p2 = {str(d): abs(contraction_constant(d, 2) - math.sqrt(d)) for d in (0.01, 0.25, 0.81)}
    c3 = contraction_constant(0.25, 3)
    ref3 = _mp_contraction(0.25, 3)
    m3 = weak_class_constants(3, 0.1).m_d
    ok = max(p2.values()) <= 1e-12 and abs(c3 - ref3) <= 1e-9 and abs(m3 - 1.9751) <= 1e-3 \
        and abs(m3 - _mp_md(3)) <= 1e-12
    return {}, {"p2_abs_error": p2, "c_0.25_3": c3, "c_0.25_3_reference": ref3, "m_3": m3}, \
        {"p2_abs_error": "<= 1e-12", "c_0.25_3": "within 1e-9 of reference", "m_3": "within 1e-3 of 1.9751"}, ok


@_check("remark_consistency", "constants")
def _remark(ctx):
    rng = ctx.rng("remark")
    below, above = [], []
    while len(below) < 200 or len(above) < 200:
        delta, p = rng.uniform(0, 1), rng.uniform(2, 12)
        (below if math.sqrt(delta) < 2 / p else above).append((delta, p))
    below, above = below[:200], above[:200]
    c_below = [contraction_constant(d, p) for d, p in below]
    n_ge, n_violation = 0, 0
    for d, p in above:
        try:
            n_ge += contraction_constant(d, p) >= 1
        except AdmissibilityViolation:
            n_violation += 1
    ok = max(c_below) < 1 and n_ge + n_violation == len(above)
    return {"samples": 200}, {"max_c_below": max(c_below), "above_c_ge_1": n_ge,
                              "above_violation": n_violation}, \
        {"max_c_below": "< 1", "above": "all >= 1 or inadmissible"}, ok


@_check("weak_class_window", "constants")
def _weak_window(ctx):
    d = ctx.grid.d
    m = weak_class_constants(d, 0.0).m_d
    rows, ok = [], True
    for frac in (0.1, 0.5, 0.9, 0.999):
        w = weak_class_constants(d, frac / m)
        rows.append({"m_d_delta": frac, "p_minus": w.p_minus, "p_plus": w.p_plus})
        ok &= 1 < w.p_minus < 2 < w.p_plus
    edge = weak_class_constants(d, 1.0 / m)
    ok &= abs(edge.p_minus - 2) < 1e-6 and abs(edge.p_plus - 2) < 1e-6
    return {"d": d}, {"m_d": m, "window": rows, "edge": [edge.p_minus, edge.p_plus]}, \
        {"window": "1 < p_- < 2 < p_+"}, ok


# ---- resolvent


@_check("dense_oracle", "resolvent")
def _dense_oracle(ctx):
    c = ctx.config
    g = ctx.make_grid(n=c.resolvent.dense_n)
    spec = ctx.smooth_spec()
    dr = ctx.drift(spec, g)
    mu, p = c.resolvent.mu[0], 2.0
    f = g.random_field(ctx.rng("dense"))
    u = theta_apply(ctx.problem(mu, p, dr), f)
    err = _rel(u, dense_solve(g, dr.b, mu, f))
    return {"n": g.n, "drift": spec.label, "mu": mu, "p": p}, {"relative_l2_error": err}, \
        {"relative_l2_error": "<= 1e-8"}, err <= 1e-8


@_check("residual", "resolvent")
def _residual(ctx):
    c = ctx.config
    tol = ctx.tol.neumann_tol
    measured, ok = {}, True
    for spec in ctx.specs:
        dr = ctx.drift(spec)
        f = ctx.grid.random_field(ctx.rng("residual", spec.label))
        for p in c.resolvent.p:
            if not ctx.admissible(spec, p):
                continue
            for mu in c.resolvent.mu:
                prob = ctx.problem(mu, p, dr)
                u, rep = theta_apply(prob, f, full_output=True)
                res = lp_norm(ctx.grid, apply_operator(prob, u) - f, p) / lp_norm(ctx.grid, f, p)
                measured[f"{spec.label}/p={p:g}/mu={mu:g}"] = {"relative_residual": res,
                                                               "terms": rep.terms_used}
                ok &= res <= 10 * tol
    return {"neumann_tol": tol}, measured, {"relative_residual": f"<= {10 * tol:g}"}, ok


@_check("contraction", "resolvent", needs=("calibration",))
def _contraction(ctx):
    c = ctx.config
    spec = ctx.singular_spec()
    dr = ctx.drift(spec)
    dh = ctx.delta_hat[spec.label]
    measured, ok = {}, True
    for p in c.resolvent.contraction_p:
        if not ctx.admissible(spec, p):
            continue
        mu0 = ctx.mu0(spec, p)
        cst = contraction_constant(dh, p)
        for mu in [mu0] + [m for m in c.resolvent.mu if m > mu0]:
            prob = ctx.problem(mu, p, dr, delta=dh)
            est = estimate_opnorm_p(operator_map(prob, "T"), p, ctx.grid.shape,
                                    c.resolvent.contraction_probes, c.tolerances.opnorm_iters,
                                    ctx.seed("contraction", p, mu))
            measured[f"p={p:g}/mu={mu:g}"] = {"tp_norm": est.value, "c_delta_p": cst,
                                               "ratio": est.value / cst if cst else 0.0}
            ok &= est.value <= 1.05 * cst
    return {"drift": spec.label, "delta_hat": dh, "probes": c.resolvent.contraction_probes}, measured, \
        {"tp_norm": "<= 1.05 * c(delta_hat, p)"}, ok


@_check("mu_scaling", "resolvent")
def _mu_scaling(ctx):
    c = ctx.config
    sc = c.scaling
    g = ctx.make_grid(n=sc.n, L=sc.L)
    base = ctx.singular_spec()
    spec = replace(base, cutoff=sc.cutoff, eps=sc.eps)
    if spec.kind == "hardy":
        spec = replace(spec, c=sc.c)
    dr = ctx.drift(spec, g)
    measured, ok = {}, True
    for p in sc.p:
        if not (dr.delta_claimed == 0 or p < 2 / math.sqrt(dr.delta_claimed)):
            continue
        gn, qn = [], []
        for mu in sc.mu:
            prob = ctx.problem(mu, p, dr)
            start = [np.ones(g.shape)]
            for name, acc in (("G", gn), ("Q", qn)):
                acc.append(estimate_opnorm_p(operator_map(prob, name), p, g.shape, c.tolerances.opnorm_probes,
                                             c.tolerances.opnorm_iters, ctx.seed("scaling", name, p, mu),
                                             starts=start).value)
        targets = (-0.5 + 1 / p, -0.5 - 1 / p)
        if dr.is_zero:
            slopes, good = (math.nan, math.nan), True
        else:
            slopes = (loglog_slope(sc.mu, gn), loglog_slope(sc.mu, qn))
            good = abs(slopes[0] - targets[0]) <= 0.1 and abs(slopes[1] - targets[1]) <= 0.1
        ok &= good
        ctx.ledger.setdefault(base.label, {}).setdefault(float(p), {}).update(
            C1=max(v * m ** (0.5 - 1 / p) for v, m in zip(gn, sc.mu)),
            C2=max(v * m ** (0.5 + 1 / p) for v, m in zip(qn, sc.mu)))
        measured[f"p={p:g}"] = {"G_norms": gn, "Q_norms": qn, "G_slope": slopes[0], "Q_slope": slopes[1],
                                "G_target": targets[0], "Q_target": targets[1]}
    return {"drift": spec.label, "n": g.n, "L": g.L, "mu": list(sc.mu), "cutoff": sc.cutoff, "eps": sc.eps}, \
        measured, {"slopes": "within 0.1 of -1/2+1/p (G) and -1/2-1/p (Q)"}, ok


@_check("factorization", "resolvent")
def _factorization(ctx):
    c = ctx.config
    p = 3.0
    mu = c.resolvent.mu[0]
    measured, ok = {}, True
    for spec in ctx.specs:
        if not ctx.admissible(spec, p):
            continue
        dr = ctx.drift(spec)
        f = ctx.fields(ctx.grid, 1, "factorization", spec.label)[0]
        u = theta_apply(ctx.problem(mu, p, dr), f)
        for r, q in c.resolvent.rq:
            v = theta_factored_apply(ctx.problem(mu, p, dr, r=r, q=q), f)
            err = _rel(v, u)
            measured[f"{spec.label}/r={r:g}/q={q:g}"] = {"relative_difference": err}
            ok &= err <= 1e-6
        # K_{1,r}, K_{2,q}: only their boundedness in mu is meaningful
        r, q = c.resolvent.rq[0]
        kg, kq = [], []
        for m in c.resolvent.mu:
            prob = ctx.problem(m, p, dr, r=r, q=q)
            kg.append(estimate_opnorm_p(operator_map(prob, "Gr"), p, ctx.grid.shape, c.tolerances.opnorm_probes,
                                        c.tolerances.opnorm_iters, ctx.seed("K1r", spec.label, m)).value)
            kq.append(estimate_opnorm_p(operator_map(prob, "Qq"), p, ctx.grid.shape, c.tolerances.opnorm_probes,
                                        c.tolerances.opnorm_iters, ctx.seed("K2q", spec.label, m)).value)
        ctx.ledger.setdefault(spec.label, {}).setdefault(p, {}).update(K1r=max(kg), K2q=max(kq))
        measured[f"{spec.label}/K"] = {"r": r, "q": q, "Gr_norms": kg, "Qq_norms": kq}
    return {"p": p, "mu": mu, "rq": c.resolvent.rq}, measured, {"relative_difference": "<= 1e-6"}, ok


@_check("quadrature", "resolvent")
def _quadrature(ctx):
    g = ctx.grid
    u = g.random_field(ctx.rng("quadrature"))
    measured, worst = {}, 0.0
    for alpha in np.round(np.arange(0.1, 1.0, 0.1), 10):
        exact = bessel_apply(g, 1.0, alpha, u)
        approx, estimate = bessel_apply_quadrature(g, 1.0, alpha, u, full_output=True)
        err = float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact)))
        measured[f"alpha={alpha:g}"] = {"relative_error": err, "error_estimate": estimate}
        worst = max(worst, err)
    return {"mu": 1.0, "n": g.n}, measured, {"relative_error": "<= 1e-6"}, worst <= 1e-6


@_check("pseudo_resolvent", "resolvent")
def _pseudo(ctx):
    c = ctx.config
    spec = ctx.smooth_spec()
    dr = ctx.drift(spec)
    mu, nu = c.resolvent.pseudo_mu[:2]
    f = ctx.fields(ctx.grid, 1, "pseudo")[0]
    measured, ok = {}, True
    for p in c.resolvent.p:
        if not ctx.admissible(spec, p):
            continue
        d = pseudo_resolvent_defect(ctx.problem(mu, p, dr), nu, f)
        measured[f"p={p:g}"] = {"defect": d}
        ok &= d <= 1e-6
    return {"drift": spec.label, "mu": mu, "nu": nu}, measured, {"defect": "<= 1e-6"}, ok


@_check("mu_to_identity", "resolvent")
def _mu_identity(ctx):
    c = ctx.config
    p = c.resolvent.p[0]
    f = ctx.fields(ctx.grid, 1, "identity")[0]
    measured, ok = {}, True
    for spec in ctx.specs:
        dr = ctx.drift(spec)
        ds = [mu_to_identity_defect(ctx.problem(mu, p, dr), f) for mu in c.resolvent.identity_mu]
        dec = all(b < a for a, b in zip(ds, ds[1:]))
        measured[spec.label] = {"defects": ds, "strictly_decreasing": dec,
                                "decay_factor": ds[0] / ds[-1] if ds[-1] else math.inf}
        ok &= dec
    return {"p": p, "mu": list(c.resolvent.identity_mu)}, measured, {"defects": "strictly decreasing in mu"}, ok


@_check("resolvent_quasicontraction", "resolvent", needs=("calibration",))
def _resolvent_qc(ctx):
    c = ctx.config
    measured, ok = {}, True
    for spec in ctx.specs:
        dr = ctx.drift(spec)
        for p in c.resolvent.p:
            if not ctx.admissible(spec, p):
                continue
            mu0 = ctx.mu0(spec, p)
            for mu in c.resolvent.mu:
                if mu <= mu0:
                    continue
                ratio, _ = quasicontraction_check(ctx.problem(mu, p, dr), mu0, c.tolerances.theta_probes,
                                                  c.tolerances.theta_iters, ctx.seed("qc", spec.label, p, mu))
                measured[f"{spec.label}/p={p:g}/mu={mu:g}"] = {"ratio": ratio, "mu0": mu0}
                ok &= ratio <= 1.05
    return {}, measured, {"ratio": "<= 1.05"}, ok


@_check("divergence_signal", "resolvent")
def _divergence(ctx):
    """Far outside the admissible regime the Neumann series must report divergence."""
    spec = ctx.singular_spec()
    dr = ctx.drift(spec)
    scale = 50.0
    mu = ctx.config.resolvent.mu_grid[0]
    if dr.is_zero:
        return {"drift": spec.label}, {"diverged": False}, {"diverged": "n/a for b = 0"}, True
    # delta=0 switches off the admissibility gate on purpose
    prob = ctx.problem(mu, 2.0, dr.scaled(scale), delta=0.0)
    f = ctx.fields(ctx.grid, 1, "divergence")[0]
    try:
        theta_apply(prob, f)
        diverged, ratio = False, math.nan
    except DivergenceDetected as exc:
        diverged, ratio = True, exc.report.last_term_ratio
    return {"drift": spec.label, "scale": scale, "mu": mu, "p": 2.0}, \
        {"diverged": diverged, "last_term_ratio": ratio}, {"diverged": True}, diverged


@_check("opnorm_dense_oracle", "resolvent")
def _opnorm_dense(ctx):
    c = ctx.config
    g = ctx.make_grid(n=c.resolvent.dense_n)
    spec = ctx.smooth_spec()
    dr = ctx.drift(spec, g)
    p, mu = 3.0, c.resolvent.mu_grid[0]
    prob = ctx.problem(mu, p, dr)
    # T = D R W assembled densely from explicit trigonometric sums
    A = c.resolvent.mu_grid[0] * np.eye(g.size) - laplacian_matrix(g.d, g.n, g.L)
    R = np.linalg.inv(A)
    D = sum(np.ravel(bj)[:, None] * Dj for bj, Dj in zip(prob.b_pow, gradient_matrices(g.d, g.n, g.L)))
    T = D @ R * np.ravel(prob.b_comp)[None, :]
    mat = LinearMap(lambda x: (T @ np.ravel(x)).reshape(g.shape), lambda y: (T.T @ np.ravel(y)).reshape(g.shape))
    fast = estimate_opnorm_p(operator_map(prob, "T"), p, g.shape, c.tolerances.opnorm_probes, 100,
                             ctx.seed("opdense", "fast")).value
    dense = estimate_opnorm_p(mat, p, g.shape, 64, 100, ctx.seed("opdense", "dense")).value
    # Riesz-Thorin upper bound from the 1- and inf-norms
    upper = np.abs(T).sum(axis=0).max() ** (1 / p) * np.abs(T).sum(axis=1).max() ** (1 - 1 / p)
    err = abs(fast - dense) / dense if dense else abs(fast)
    ok = err <= 0.02 and fast <= upper * (1 + 1e-12)
    return {"n": g.n, "p": p, "mu": mu, "drift": spec.label}, \
        {"estimate": fast, "dense_multistart": dense, "riesz_thorin_upper": upper, "relative_gap": err}, \
        {"relative_gap": "<= 0.02", "estimate": "<= riesz_thorin_upper"}, ok


# ---- semigroup


def _stepper(ctx, spec, p, t, steps, grid=None):
    return SemigroupStepper(ctx.drift(spec, grid), p, t, steps, ctx.tol.neumann_tol)


@_check("semigroup_positivity", "semigroup")
def _positivity(ctx):
    sg = ctx.config.semigroup
    spec = ctx.singular_spec()
    st = _stepper(ctx, spec, sg.p, sg.t, sg.steps)
    worst = math.inf
    for f in ctx.fields(ctx.grid, sg.samples, "positivity", nonnegative=True):
        fmax = float(np.max(f))
        if fmax > 0:
            worst = min(worst, check_positivity(st, f) / fmax)
    tol = ctx.tol.positivity_tol
    return {"drift": spec.label, "t": sg.t, "steps": sg.steps, "samples": sg.samples}, \
        {"min_excursion": worst}, {"min_excursion": f">= {-tol:g}"}, worst >= -tol


@_check("semigroup_linf", "semigroup")
def _linf(ctx):
    sg = ctx.config.semigroup
    spec = ctx.singular_spec()
    st = _stepper(ctx, spec, sg.p, sg.t, sg.steps)
    ratios = [check_linf_contraction(st, f) for f in ctx.fields(ctx.grid, sg.samples, "linf")]
    return {"drift": spec.label, "t": sg.t, "steps": sg.steps}, {"max_ratio": max(ratios)}, \
        {"max_ratio": "<= 1 + 1e-6"}, max(ratios) <= 1 + 1e-6


@_check("semigroup_quasicontraction", "semigroup", needs=("calibration",))
def _semigroup_qc(ctx):
    sg = ctx.config.semigroup
    spec = ctx.singular_spec()
    st = _stepper(ctx, spec, sg.p, sg.t, sg.steps)
    mu0 = ctx.mu0(spec, sg.p)
    omegas = [check_quasicontraction_lp(st, f) for f in ctx.fields(ctx.grid, sg.samples, "omega")]
    return {"drift": spec.label, "p": sg.p, "t": sg.t, "steps": sg.steps}, \
        {"omega_hat": max(omegas), "mu0": mu0}, {"omega_hat": "<= 1.25 * mu0"}, max(omegas) <= 1.25 * mu0


@_check("trotter", "semigroup")
def _trotter(ctx):
    tr = ctx.config.trotter
    base = ctx.singular_spec()
    specs = [replace(base, cutoff=cut, eps=eps, name=f"{base.label}[{cut:g},{eps:g}]") for cut, eps in tr.levels]
    drifts = [ctx.drift(s) for s in specs]
    # the claim must not depend on the mollification level
    drifts = [DriftField(d.grid, d.b, d.lam, drifts[-1].delta_claimed, d.name) for d in drifts]
    f = ctx.fields(ctx.grid, 1, "trotter")[0]
    defects = trotter_convergence(drifts, tr.t, f, tr.p, tr.steps, neumann_tol=ctx.tol.neumann_tol)
    mono = all(b <= 1.1 * a for a, b in zip(defects, defects[1:]))
    return {"drift": base.label, "levels": tr.levels, "t": tr.t, "steps": tr.steps, "p": tr.p}, \
        {"defects": defects, "monotone_within_slack": mono}, \
        {"defects": "d_(j+1) <= 1.1 d_j and last <= 1e-6"}, mono and defects[-1] <= 1e-6


# ---- regularity


@_check("smoothing", "regularity")
def _smoothing(ctx):
    rc = ctx.config.regularity
    p, r, q = rc.smoothing_prq
    spec = ctx.singular_spec()
    ratios = []
    for n in rc.smoothing_n:
        g = ctx.make_grid(n=int(n))
        prob = ctx.problem(rc.smoothing_mu, p, ctx.drift(spec, g), r=r, q=q)
        ratios.append(smoothing_ratio(prob, ctx.tol.opnorm_probes, ctx.tol.opnorm_iters, ctx.seed("smoothing", n)))
    spread = max(ratios) / min(ratios)
    return {"drift": spec.label, "n": list(rc.smoothing_n), "p": p, "r": r, "q": q, "mu": rc.smoothing_mu}, \
        {"ratios": ratios, "spread": spread}, {"spread": "<= 2"}, spread <= 2


@_check("holder", "regularity")
def _holder(ctx):
    rc = ctx.config.regularity
    spec = ctx.singular_spec()
    g = ctx.make_grid(n=rc.holder_n)
    dr = ctx.drift(spec, g)
    d, p = g.d, rc.holder_p
    target = 1 - (d - 2) / p
    prob = ctx.problem(rc.holder_mu, p, dr)
    gammas, semis = [], []
    for f in ctx.fields(g, rc.holder_samples, "holder"):
        gam, semi = holder_estimate(g, theta_apply(prob, f), rc.drop_fine, rc.drop_coarse)
        gammas.append(gam)
        semis.append(semi)
    ok = min(gammas) >= target - 0.15 and p > d - 2 and dr.delta_claimed < (2 / (d - 2)) ** 2
    return {"drift": spec.label, "n": g.n, "p": p, "mu": rc.holder_mu}, \
        {"gamma_hat": gammas, "seminorm": semis, "min_gamma_hat": min(gammas), "target": target}, \
        {"min_gamma_hat": f">= {target - 0.15:.4f}"}, ok


@_check("gradient_bounds", "regularity", needs=("calibration",))
def _gradient(ctx):
    c = ctx.config
    measured, ok = {}, True
    for spec in ctx.specs:
        dr = ctx.drift(spec)
        fs = ctx.fields(ctx.grid, 2, "gradient", spec.label)
        for p in c.resolvent.p:
            if not ctx.admissible(spec, p):
                continue
            mu1 = ctx.mu0(spec, p)
            res = gradient_bound_check(dr, p, c.regularity.grad_mu, fs, mu1=0.0,
                                       neumann_tol=ctx.tol.neumann_tol)
            shifted = [m - mu1 for m in res["mus"]]
            ctx.ledger.setdefault(spec.label, {}).setdefault(float(p), {}).update(
                K1=max(a * s**0.5 for a, s in zip(res["grad_ratio"], shifted)),
                K2=max(b * s ** (0.5 - 1 / p) for b, s in zip(res["grad_power_ratio"], shifted)))
            measured[f"{spec.label}/p={p:g}"] = {"slopes": list(res["slopes"]), "targets": list(res["targets"])}
            ok &= res["passed"]
    return {"mu": list(c.regularity.grad_mu)}, measured, {"slopes": "<= target + 0.1"}, ok


@_check("principal_inequality", "regularity", needs=("form_bound",))
def _principal(ctx):
    rc = ctx.config.regularity
    measured, ok = {}, True
    for spec in ctx.specs:
        dr = ctx.drift(spec)
        dh = ctx.delta_hat[spec.label]
        f = ctx.fields(ctx.grid, 1, "principal", spec.label, nonnegative=True)[0]
        for p in rc.principal_p:
            if not ctx.admissible(spec, p) or (dh > 0 and p >= 2 / math.sqrt(dh)):
                continue
            for mu in rc.principal_mu:
                lhs, rhs = principal_inequality_check(dr, p, mu, f, dh)
                measured[f"{spec.label}/p={p:g}/mu={mu:g}"] = {"lhs": lhs, "rhs": rhs}
                ok &= lhs <= 1.05 * rhs
    return {"mu": list(rc.principal_mu)}, measured, {"lhs": "<= 1.05 * rhs"}, ok


# ---- meta


_REPRO_SUBSET = ("remark_consistency", "dense_oracle", "quadrature", "pseudo_resolvent")


@_check("reproducibility", "meta")
def _reproducibility(ctx):
    runs = []
    for _ in range(2):
        sub = SuiteContext(ctx.config)
        runs.append(json.dumps([_plain(CHECKS[n].func(sub)[1]) for n in _REPRO_SUBSET], sort_keys=True))
    same = runs[0] == runs[1]
    return {"checks": list(_REPRO_SUBSET)}, {"identical": same}, {"identical": True}, same


# ---------------------------------------------------------------- suites


_ACCEPTANCE = (
    "closed_form_constants", "remark_consistency", "dense_oracle", "residual", "contraction",
    "mu_scaling", "factorization", "quadrature", "pseudo_resolvent", "mu_to_identity",
    "semigroup_positivity", "semigroup_linf", "semigroup_quasicontraction", "trotter",
    "smoothing", "holder", "principal_inequality", "reproducibility",
)
_QUICK = (
    "closed_form_constants", "remark_consistency", "weak_class_window", "dense_oracle",
    "dense_form_bound", "opnorm_dense_oracle",
)

SUITES = {
    "full": tuple(CHECKS),
    "acceptance": _ACCEPTANCE,
    "quick": _QUICK,
    "resolvent": tuple(n for n, c in CHECKS.items() if c.phase == "resolvent"),
    "semigroup": tuple(n for n, c in CHECKS.items() if c.phase == "semigroup"),
    "regularity": tuple(n for n, c in CHECKS.items() if c.phase == "regularity"),
}


def suite_checks(suite):
    """Resolve suite and check names (comma-separated, mixable) to ordered check names.

    Prerequisites are added and the result is sorted by phase.
    """
    names = []
    for item in (s.strip() for s in suite.split(",")):
        if item:
            names.extend(SUITES.get(item, (item,)))
    unknown = [n for n in names if n not in CHECKS]
    if unknown or not names:
        from .errors import ConfigError

        raise ConfigError(f"unknown suite or checks {unknown or suite!r}; suites: {sorted(SUITES)}")
    todo = list(dict.fromkeys(names))
    i = 0
    while i < len(todo):
        for dep in CHECKS[todo[i]].needs:
            if dep not in todo:
                todo.append(dep)
        i += 1
    order = list(CHECKS)
    return sorted(todo, key=lambda n: (PHASES.index(CHECKS[n].phase), order.index(n)))


def _run_one(ctx, name):
    chk = CHECKS[name]
    t0 = time.perf_counter()
    rec = CheckRecord(name, chk.phase)
    try:
        rec.inputs, rec.measured, rec.bound, passed = chk.func(ctx)
        rec.passed = bool(passed)
        rec.status = "ok" if rec.passed else "fail"
    except DivergenceDetected as exc:
        rec.status, rec.message = "divergence", str(exc)
    except CalibrationFailure:
        raise
    except FormBoundError as exc:
        rec.status, rec.message = "error", f"{type(exc).__name__}: {exc}"
    rec.runtime = time.perf_counter() - t0
    return rec


def _ledger_dict(ctx):
    out = {}
    for label, per_p in ctx.ledger.items():
        out[label] = {f"{p:g}": asdict(ConstantsLedger(**vals)) for p, vals in sorted(per_p.items())}
    return out


def _metadata(ctx, suite):
    import scipy

    g = ctx.grid
    return {
        "version": __version__,
        "suite": suite,
        "seed": ctx.config.seed,
        "threads": ctx.config.threads,
        "grid": {"d": g.d, "n": g.n, "L": g.L},
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def run_suite(config, suite=None, progress=None):
    """Run a suite and return its :class:`DiagnosticsReport`.

    Parameters
    ----------
    config : ExperimentConfig
    suite : str, optional
        Suite name or comma-separated check names; defaults to
        ``config.suite``.
    progress : callable, optional
        Called with each finished :class:`CheckRecord`.

    A :class:`CalibrationFailure` aborts the run: the checks not yet run are
    recorded with status ``skipped`` and the report is marked aborted.
    """
    suite = suite or config.suite
    names = suite_checks(suite)
    ctx = SuiteContext(config)
    records = {}
    aborted = False
    serial = [n for n in names if CHECKS[n].phase in ("form", "calibration")]
    parallel = [n for n in names if n not in serial and n != "reproducibility"]
    tail = [n for n in names if n == "reproducibility"]

    def emit(rec):
        records[rec.name] = rec
        if progress:
            progress(rec)

    try:
        for name in serial:
            emit(_run_one(ctx, name))
    except CalibrationFailure as exc:
        rec = CheckRecord("calibration", "calibration", status="error", message=str(exc))
        emit(rec)
        aborted = True
    if not aborted:
        if config.threads > 1 and len(parallel) > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                for rec in pool.map(lambda n: _run_one(ctx, n), parallel):
                    emit(rec)
        else:
            for name in parallel:
                emit(_run_one(ctx, name))
        for name in tail:
            emit(_run_one(ctx, name))
    checks = [records.get(n) or CheckRecord(n, CHECKS[n].phase, status="skipped", message="suite aborted")
              for n in names]
    return DiagnosticsReport(checks, _ledger_dict(ctx), _metadata(ctx, suite), config.to_dict(), aborted)


def run_calibration(config):
    """Form-bound estimation and mu0 calibration only; returns the report."""
    return run_suite(config, "form_bound,calibration")


def replay(report_dict, suite=None):
    """Re-run the suite stored in a report from its embedded config and seed."""
    cfg = from_dict(report_dict["config"])
    return run_suite(cfg, suite or report_dict["metadata"]["suite"])


# ---------------------------------------------------------------- sweeps


SWEEP_COLUMNS = {
    "mu": ["drift", "p", "mu", "theta_norm", "T_norm", "G_norm", "Q_norm", "neumann_terms", "identity_defect"],
    "delta": ["drift", "scale", "delta", "delta_hat", "p", "c_delta_p", "mu", "T_norm"],
    "p": ["drift", "p", "delta_hat", "c_delta_p", "mu", "T_norm", "G_norm", "Q_norm"],
    "n": ["drift", "n", "delta_hat", "weak_delta_hat", "p", "mu", "T_norm", "mu0"],
}


def _norm(ctx, prob, name, *tags):
    t = ctx.tol
    if name == "theta":
        op, probes, iters = theta_map(prob), t.theta_probes, t.theta_iters
    else:
        op, probes, iters = operator_map(prob, name), t.opnorm_probes, t.opnorm_iters
    return estimate_opnorm_p(op, prob.p, prob.grid.shape, probes, iters, ctx.seed("sweep", name, *tags),
                             starts=[np.ones(prob.grid.shape)]).value


def sweep(config, axis):
    """Evaluate one parameter axis and return ``(columns, rows)``.

    Columns (see ``SWEEP_COLUMNS``):

    ``mu``
        for every drift and ``p`` in ``resolvent.p``: estimated norms of
        Theta, ``T_p``, ``G_p``, ``Q_p``, the Neumann term count and
        ``||mu Theta f - f||_p / ||f||_p``.
    ``delta``
        the Hardy (or first) drift scaled so its claimed bound equals each
        value; ``c_delta_p`` is evaluated at the claimed bound and is empty
        when inadmissible.
    ``p``
        ``c(delta_hat, p)`` and operator norms at ``resolvent.mu[0]``.
    ``n``
        form-bound estimates, ``||T_p||`` and calibrated ``mu0`` per grid size.

    Norms are p-norm power-method lower bounds; ``nan`` marks points outside
    the admissible range.
    """
    if axis not in SWEEP_COLUMNS:
        from .errors import ConfigError

        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {sorted(SWEEP_COLUMNS)}")
    ctx = SuiteContext(config)
    values = list(getattr(config.sweep, axis))
    rows = []
    mu_ref, p_ref = config.resolvent.mu[0], config.resolvent.p[0]
    if axis == "mu":
        for spec in ctx.specs:
            dr = ctx.drift(spec)
            f = ctx.fields(ctx.grid, 1, "sweep-mu")[0]
            for p in config.resolvent.p:
                if not ctx.admissible(spec, p):
                    continue
                for mu in values:
                    prob = ctx.problem(mu, p, dr)
                    _, rep = theta_apply(prob, f, full_output=True)
                    rows.append([spec.label, p, mu, _norm(ctx, prob, "theta", spec.label, p, mu),
                                 _norm(ctx, prob, "T", spec.label, p, mu), _norm(ctx, prob, "G", spec.label, p, mu),
                                 _norm(ctx, prob, "Q", spec.label, p, mu), rep.terms_used,
                                 mu_to_identity_defect(prob, f)])
    elif axis == "delta":
        spec = ctx.singular_spec()
        dr = ctx.drift(spec)
        dh = estimate_form_bound(dr, ctx.tol.form_probes, ctx.tol.form_iters, ctx.seed("sweep-delta"))[0]
        for delta in values:
            s = math.sqrt(delta / dr.delta_claimed) if dr.delta_claimed else 0.0
            scaled = DriftField(dr.grid, s * dr.b, dr.lam, delta, dr.name)
            for p in config.resolvent.p:
                try:
                    c = contraction_constant(delta, p)
                    prob = ctx.problem(mu_ref, p, scaled)
                    tn = _norm(ctx, prob, "T", delta, p)
                except AdmissibilityViolation:
                    c, tn = math.nan, math.nan
                rows.append([spec.label, s, delta, s * s * dh, p, c, mu_ref, tn])
    elif axis == "p":
        for spec in ctx.specs:
            dr = ctx.drift(spec)
            dh = estimate_form_bound(dr, ctx.tol.form_probes, ctx.tol.form_iters, ctx.seed("sweep-p", spec.label))[0]
            for p in values:
                try:
                    c = contraction_constant(dh, p)
                    prob = ctx.problem(mu_ref, p, dr)
                    norms = [_norm(ctx, prob, k, spec.label, p) for k in ("T", "G", "Q")]
                except AdmissibilityViolation:
                    c, norms = math.nan, [math.nan] * 3
                rows.append([spec.label, p, dh, c, mu_ref] + norms)
    else:
        for n in values:
            g = ctx.make_grid(n=int(n))
            for spec in ctx.specs:
                dr = ctx.drift(spec, g)
                t = ctx.tol
                dh = estimate_form_bound(dr, t.form_probes, t.form_iters, ctx.seed("sweep-n", spec.label, n))[0]
                weak = estimate_weak_form_bound(dr, t.form_probes, t.form_iters, ctx.seed("sweep-nw", spec.label, n))
                if ctx.admissible(spec, p_ref):
                    prob = ctx.problem(mu_ref, p_ref, dr)
                    tn = _norm(ctx, prob, "T", spec.label, n)
                    try:
                        mu0 = calibrate_mu0(dr, p_ref, config.resolvent.mu_grid, t.opnorm_probes, t.opnorm_iters,
                                            ctx.seed("sweep-cal", spec.label, n), delta_hat=dh).mu0
                    except CalibrationFailure:
                        mu0 = math.nan
                else:
                    tn = mu0 = math.nan
                rows.append([spec.label, int(n), dh, weak, p_ref, mu_ref, tn, mu0])
    return SWEEP_COLUMNS[axis], rows


def write_sweep_csv(path_or_file, columns, rows):
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    finally:
        if own:
            fh.close()


def sweep_csv_text(columns, rows):
    buf = io.StringIO()
    write_sweep_csv(buf, columns, rows)
    return buf.getvalue()
