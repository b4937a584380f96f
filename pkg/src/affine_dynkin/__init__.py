"""Generator calculus for affine models on R+^m x R^n.

Exact moment semigroups via the generator matrix exponential, iterated
Dynkin expansions with computable remainder envelopes, Levy-generator
representations of space derivatives, and weak-order time stepping with
telescoping error audits.
"""

__version__ = "0.1.0"

from .errors import (
    AffineDynkinError,
    ConfigError,
    DegreeOverflow,
    DimensionMismatch,
    HashMismatch,
    InadmissibleModel,
    PolynomialParseError,
    UnsupportedOperation,
)
from .generator import (
    CumulantTable,
    GeneratorMatrix,
    apply_generator,
    apply_generator_slice,
    cumulants_to_moments,
    generator_matrix,
    generator_power,
    levy_generator_apply,
    moments_to_cumulants,
)
from .model import (
    AffineModel,
    JumpKernel,
    load_model,
    model_fingerprint,
    parse_model,
    serialize_model,
    validate_admissibility,
)
from .polyalg import (
    MultiIndex,
    Polynomial,
    monomial_basis,
    parse_polynomial,
    render_polynomial,
)
from .scheme import (
    ConvergenceReport,
    SchemeConfig,
    StepOperator,
    convergence_study,
    euler_mc,
    moment_stability_check,
    propagate,
    step_operator,
    telescoping_audit,
)
from .semigroup import (
    BoundCertificate,
    ExpansionResult,
    MomentTable,
    commutation_check,
    convolution_identity_check,
    derivative_representation,
    dynkin_expand,
    exact_semigroup,
    gronwall_check,
    growth_constant,
    moment_table,
    remainder,
    remainder_bound,
    space_derivative,
    weight_norm,
    weight_polynomial,
)
from .verification import IdentityRow, run_suite

__all__ = [
    "__version__",
    "AffineDynkinError",
    "AffineModel",
    "BoundCertificate",
    "ConfigError",
    "ConvergenceReport",
    "CumulantTable",
    "DegreeOverflow",
    "DimensionMismatch",
    "ExpansionResult",
    "GeneratorMatrix",
    "HashMismatch",
    "IdentityRow",
    "InadmissibleModel",
    "JumpKernel",
    "MomentTable",
    "MultiIndex",
    "Polynomial",
    "PolynomialParseError",
    "SchemeConfig",
    "StepOperator",
    "UnsupportedOperation",
    "apply_generator",
    "apply_generator_slice",
    "commutation_check",
    "convergence_study",
    "convolution_identity_check",
    "cumulants_to_moments",
    "derivative_representation",
    "dynkin_expand",
    "euler_mc",
    "exact_semigroup",
    "generator_matrix",
    "generator_power",
    "gronwall_check",
    "growth_constant",
    "levy_generator_apply",
    "load_model",
    "model_fingerprint",
    "moment_stability_check",
    "moment_table",
    "moments_to_cumulants",
    "monomial_basis",
    "parse_model",
    "parse_polynomial",
    "propagate",
    "remainder",
    "remainder_bound",
    "render_polynomial",
    "run_suite",
    "serialize_model",
    "space_derivative",
    "step_operator",
    "telescoping_audit",
    "validate_admissibility",
    "weight_norm",
    "weight_polynomial",
]
