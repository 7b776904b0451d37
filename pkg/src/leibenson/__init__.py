"""Closed-form Barenblatt profiles of the Leibenson equation, the explicit
coefficients of the associated degenerate SDE, a reproducible parallel
particle engine, and quadrature-backed verification of every checkable
identity (mass, weak forms, integrability certificates, the explicit d=3
maximal function of a sphere's surface measure)."""

from .errors import (
    BoundaryError,
    ConvergenceError,
    DomainError,
    EmptyEnsemble,
    LeibensonError,
    NumericalBlowup,
    RegimeError,
    SingularityError,
)
from .field import FieldEvaluator, RadialLaw
from .maximal import CapGeometry, cap_area, cap_height, maximal_surface_bruteforce, maximal_surface_d3
from .params import (
    LeibensonParams,
    RegimeReport,
    classify_regime,
    derive_constants,
    normalization_constant,
    normalization_constant_by_quadrature,
    unit_sphere_area,
)
from .quad import (
    CertificateReport,
    QuadratureResult,
    RadialBump,
    certify_uniqueness_bounds,
    certify_superposition,
    fpe_weak_residual,
    integrate_radial,
    leibenson_weak_residual,
    standard_test_functions,
    weak_residual_pair,
)
from .sde import (
    CouplingDiagnostic,
    NoiseSource,
    ParticleEnsemble,
    SDEConfig,
    init_ensemble,
    simulate,
    simulate_coupled,
    step,
)
from .stats import (
    FlowRestartResult,
    VerificationReport,
    build_report,
    flow_restart_check,
    kolmogorov_quantile_99,
    ks_radial,
    moment2_rel_err,
    support_violation,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryError", "ConvergenceError", "DomainError", "EmptyEnsemble",
    "LeibensonError", "NumericalBlowup", "RegimeError", "SingularityError",
    "FieldEvaluator", "RadialLaw",
    "CapGeometry", "cap_area", "cap_height",
    "maximal_surface_bruteforce", "maximal_surface_d3",
    "LeibensonParams", "RegimeReport", "classify_regime", "derive_constants",
    "normalization_constant", "normalization_constant_by_quadrature", "unit_sphere_area",
    "CertificateReport", "QuadratureResult", "RadialBump",
    "certify_uniqueness_bounds", "certify_superposition",
    "fpe_weak_residual", "integrate_radial", "leibenson_weak_residual",
    "standard_test_functions", "weak_residual_pair",
    "CouplingDiagnostic", "NoiseSource", "ParticleEnsemble", "SDEConfig",
    "init_ensemble", "simulate", "simulate_coupled", "step",
    "FlowRestartResult", "VerificationReport", "build_report", "flow_restart_check",
    "kolmogorov_quantile_99", "ks_radial", "moment2_rel_err", "support_violation",
    "__version__",
]
