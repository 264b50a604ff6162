"""TOML experiment configuration.

The configuration is a tree of dataclasses.  :func:`load_config` parses and
validates it; :func:`dump_config` writes TOML that parses back to an equal
object.
"""
from dataclasses import asdict, dataclass, field, fields, is_dataclass
import math

import tomli
import tomli_w

from .drift import DriftSpec
from .errors import AdmissibilityViolation, ConfigError

__all__ = [
    "GridConfig",
    "Tolerances",
    "ResolventConfig",
    "SemigroupConfig",
    "TrotterConfig",
    "ScalingConfig",
    "RegularityConfig",
    "SweepConfig",
    "ExperimentConfig",
    "load_config",
    "loads_config",
    "dump_config",
    "default_config",
]


@dataclass
class GridConfig:
    d: int = 3
    n: int = 32
    L: float = 2 * math.pi


@dataclass
class Tolerances:
    neumann_tol: float = 1e-10
    neumann_max_terms: int = 400
    opnorm_probes: int = 4
    opnorm_iters: int = 30
    form_probes: int = 4
    form_iters: int = 200
    form_tol: float = 1e-8
    theta_probes: int = 2
    theta_iters: int = 8
    # semigroup undershoot allowed, relative to ||f||_inf
    positivity_tol: float = 1e-8


@dataclass
class ResolventConfig:
    p: list = field(default_factory=lambda: [2.0, 3.0])
    mu: list = field(default_factory=lambda: [100.0, 1000.0])
    rq: list = field(default_factory=lambda: [[2.5, 6.0], [2.5, 10.0]])
    mu_grid: list = field(default_factory=lambda: [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0])
    contraction_p: list = field(default_factory=lambda: [2.0, 3.0, 4.5])
    contraction_probes: int = 16
    dense_n: int = 8
    pseudo_mu: list = field(default_factory=lambda: [50.0, 100.0])
    identity_mu: list = field(default_factory=lambda: [100.0, 1000.0, 10000.0])


@dataclass
class SemigroupConfig:
    p: float = 3.0
    t: float = 0.1
    steps: int = 32
    samples: int = 10


@dataclass
class TrotterConfig:
    levels: list = field(default_factory=lambda: [[1.0, 0.1], [1.5, 0.03], [2.25, 0.01], [3.0, 0.0]])
    p: float = 3.0
    t: float = 0.1
    steps: int = 32


@dataclass
class ScalingConfig:
    n: int = 32
    L: float = 1.0
    c: float = 0.2
    cutoff: float = math.inf
    eps: float = 0.0
    p: list = field(default_factory=lambda: [3.0, 4.5])
    mu: list = field(default_factory=lambda: [100.0, 1000.0, 10000.0])


@dataclass
class RegularityConfig:
    holder_n: int = 48
    holder_mu: float = 10.0
    holder_p: float = 3.0
    holder_samples: int = 5
    drop_fine: int = 2
    drop_coarse: int = 1
    smoothing_n: list = field(default_factory=lambda: [16, 24, 32])
    smoothing_prq: list = field(default_factory=lambda: [3.0, 2.5, 6.0])
    smoothing_mu: float = 10.0
    principal_mu: list = field(default_factory=lambda: [1000.0, 10000.0])
    principal_p: list = field(default_factory=lambda: [2.0, 3.0, 4.5])
    grad_mu: list = field(default_factory=lambda: [100.0, 1000.0, 10000.0])


@dataclass
class SweepConfig:
    mu: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    p: list = field(default_factory=list)
    n: list = field(default_factory=list)


def _default_drifts():
    return [
        DriftSpec("hardy", c=0.2, cutoff=3.0, eps=0.01, lam=1.0, name="hardy"),
        DriftSpec("smooth-trig", amplitudes=(0.1, 0.1, 0.1), lam=1.0, name="smooth"),
    ]


@dataclass
class ExperimentConfig:
    seed: int = 0
    threads: int = 1
    out: str = "formbound-out"
    suite: str = "full"
    dealias: bool = False
    field_smoothing: float = 0.5
    grid: GridConfig = field(default_factory=GridConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    resolvent: ResolventConfig = field(default_factory=ResolventConfig)
    semigroup: SemigroupConfig = field(default_factory=SemigroupConfig)
    trotter: TrotterConfig = field(default_factory=TrotterConfig)
    scaling: ScalingConfig = field(default_factory=ScalingConfig)
    regularity: RegularityConfig = field(default_factory=RegularityConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    drift: list = field(default_factory=_default_drifts)

    def drift_by_name(self, name):
        for spec in self.drift:
            if spec.label == name:
                return spec
        raise ConfigError(f"no drift named {name!r}")

    def first_drift(self, kind):
        for spec in self.drift:
            if spec.kind == kind:
                return spec
        return None

    def validate(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.grid.d < 3:
            raise ConfigError("grid.d must be >= 3")
        if not self.drift:
            raise ConfigError("at least one [[drift]] table is required")
        names = [s.label for s in self.drift]
        if len(set(names)) != len(names):
            raise ConfigError(f"drift names must be unique, got {names}")
        for spec in self.drift:
            if spec.kind == "smooth-trig" and len(spec.amplitudes) not in (1, self.grid.d):
                raise ConfigError(f"drift {spec.label}: need 1 or d amplitudes")
        for p in self.resolvent.p:
            if p < 2:
                raise AdmissibilityViolation(f"resolvent.p entry {p} < 2")
        for r, q in self.resolvent.rq:
            for p in self.resolvent.p:
                if r < p < q and r < 2:
                    raise AdmissibilityViolation(f"(r, q) = ({r}, {q}) needs r >= 2")
            if not 2 <= r < q:
                raise AdmissibilityViolation(f"(r, q) = ({r}, {q}) needs 2 <= r < q")
        p, r, q = self.regularity.smoothing_prq
        if not 2 <= r < p < q:
            raise AdmissibilityViolation(f"smoothing (p, r, q) = {(p, r, q)} needs 2 <= r < p < q")
        for name in ("mu", "mu_grid", "identity_mu", "pseudo_mu"):
            vals = getattr(self.resolvent, name)
            if any(v <= 0 for v in vals):
                raise ConfigError(f"resolvent.{name} entries must be positive")
        if any(b <= a for a, b in zip(self.resolvent.mu_grid, self.resolvent.mu_grid[1:])):
            raise ConfigError("resolvent.mu_grid must be strictly ascending")
        if self.semigroup.t <= 0 or self.semigroup.steps < 1:
            raise ConfigError("semigroup needs t > 0 and steps >= 1")
        for level in self.trotter.levels:
            if len(level) != 2 or level[0] <= 0 or level[1] < 0:
                raise ConfigError(f"trotter level {level} must be [cutoff > 0, eps >= 0]")
        return self

    def to_dict(self):
        out = _to_plain(self)
        out["drift"] = [_drift_to_dict(s) for s in self.drift]
        return out


def _drift_to_dict(spec):
    d = asdict(spec)
    d["amplitudes"] = list(d["amplitudes"])
    return {k: v for k, v in d.items() if v is not None}


def _to_plain(obj):
    if is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"[{where}] must be a table")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"[{where}] unknown keys: {sorted(unknown)}")
    kw = {}
    for name, value in data.items():
        default = getattr(cls(), name) if name in known else None
        if is_dataclass(default):
            value = _build(type(default), value, f"{where}.{name}" if where else name)
        elif isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        elif isinstance(default, bool) and not isinstance(value, bool):
            raise ConfigError(f"[{where}] {name} must be a boolean")
        elif isinstance(default, int) and not isinstance(default, bool) and not isinstance(value, int):
            raise ConfigError(f"[{where}] {name} must be an integer")
        kw[name] = value
    return cls(**kw)


def _floatify(v):
    if isinstance(v, list):
        return [_floatify(x) for x in v]
    if isinstance(v, int) and not isinstance(v, bool):
        return float(v)
    return v


def from_dict(data):
    data = dict(data)
    drifts = data.pop("drift", None)
    try:
        cfg = _build(ExperimentConfig, data, "")
        # numeric lists are stored as floats so that round trips compare equal
        for section in (cfg.resolvent, cfg.scaling, cfg.regularity, cfg.sweep, cfg.trotter):
            for f in fields(section):
                v = getattr(section, f.name)
                if isinstance(v, list) and f.name not in ("smoothing_n", "n"):
                    setattr(section, f.name, _floatify(v))
        if drifts is not None:
            if not isinstance(drifts, list):
                raise ConfigError("drift must be an array of tables ([[drift]])")
            specs = []
            for i, d in enumerate(drifts):
                d = dict(d)
                if "amplitudes" in d:
                    d["amplitudes"] = tuple(float(a) for a in d["amplitudes"])
                for key in ("c", "cutoff", "eps", "lam", "delta"):
                    if isinstance(d.get(key), int):
                        d[key] = float(d[key])
                try:
                    specs.append(DriftSpec(**d))
                except TypeError as exc:
                    raise ConfigError(f"[[drift]] #{i + 1}: {exc}") from exc
            cfg.drift = specs
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def loads_config(text):
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        # tomli reports "(at line L, column C)"
        raise ConfigError(f"malformed TOML: {exc}") from exc
    return from_dict(data)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return loads_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump_config(cfg):
    return tomli_w.dumps(cfg.to_dict())


def default_config(**overrides):
    cfg = ExperimentConfig()
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg.validate()
