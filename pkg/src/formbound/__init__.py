"""Resolvents and semigroups of ``-Laplacian + b . grad`` for form-bounded drifts.

Pseudospectral operator calculus on the periodic box, the Neumann-series
representation of the resolvent, backward-Euler semigroups built from it,
and diagnostics that measure the associated operator bounds.
"""
__version__ = "0.1.0"

from .drift import (
    DriftField,
    DriftSpec,
    estimate_form_bound,
    estimate_weak_form_bound,
    make_drift,
    weak_class_constants,
)
from .errors import (
    AdmissibilityViolation,
    CalibrationFailure,
    ConfigError,
    ConvergenceFailure,
    DivergenceDetected,
    FormBoundError,
    InvalidParameter,
)
from .opnorm import LinearMap, estimate_opnorm_p
from .resolvent import (
    ConstantsLedger,
    ResolventProblem,
    calibrate_mu0,
    contraction_constant,
    theta_apply,
    theta_factored_apply,
)
from .semigroup import SemigroupStepper, semigroup_apply
from .spectral import TorusGrid, bessel_apply, lp_norm

__all__ = [
    "__version__",
    "TorusGrid",
    "bessel_apply",
    "lp_norm",
    "DriftSpec",
    "DriftField",
    "make_drift",
    "estimate_form_bound",
    "estimate_weak_form_bound",
    "weak_class_constants",
    "LinearMap",
    "estimate_opnorm_p",
    "ResolventProblem",
    "ConstantsLedger",
    "contraction_constant",
    "theta_apply",
    "theta_factored_apply",
    "calibrate_mu0",
    "SemigroupStepper",
    "semigroup_apply",
    "FormBoundError",
    "InvalidParameter",
    "AdmissibilityViolation",
    "ConvergenceFailure",
    "DivergenceDetected",
    "CalibrationFailure",
    "ConfigError",
]
