"""Operational quantities of bounded operators on l^p sequence spaces."""

__version__ = "0.1.0"

from .errors import (
    BadDimensions,
    BudgetInfeasible,
    ConfigError,
    DegenerateBasis,
    DegenerateFunctionals,
    DimensionMismatch,
    ExhaustedSubspace,
    IncompatibleTails,
    InvalidWitness,
    OpquantError,
    UnsupportedTail,
    ZeroVector,
)
from .construction import (
    BiorthogonalSystem,
    CaseReport,
    CoreApproximation,
    budget_bound,
    build_biorthogonal,
    build_core_approximants,
    check_coefficient_bound,
    check_dense_intersection,
    run_invariance_case,
    sub_basis_coefficients,
    verify_near_isometry,
    verify_transfer_bounds,
)
from .operators import (
    DenseMatrix,
    Diagonal,
    FiniteRankPlus,
    Operator,
    RestrictedOperatorData,
    WeightedShift,
    apply,
    operator_from_dict,
    operator_norm,
    operator_norm_bracket,
    restricted_extremes,
    restricted_min_modulus,
    restricted_norm,
    restriction_data,
    truncate_operator,
    window_action_matrix,
)
from .quantities import (
    QuantityEstimate,
    coordinate_subset_value,
    delta_kK,
    gamma_k,
    grassmann_search,
    limit_estimate,
    nabla_kK,
    svd_oracle,
    tau_k,
)
from .seqspace import (
    ELL1,
    ELL2,
    ELLINF,
    LinearFunctional,
    SpaceConfig,
    Subspace,
    TailVector,
    canonical,
    functional_from_representer,
    gram,
    inner_product,
    linear_combine,
    norm,
    norming_functional,
    pairing,
    project_into_kernels,
    scaled,
    truncate,
    unit_vector,
    zero_vector,
)

__all__ = [
    "BadDimensions",
    "BudgetInfeasible",
    "ConfigError",
    "DegenerateBasis",
    "DegenerateFunctionals",
    "DimensionMismatch",
    "ExhaustedSubspace",
    "IncompatibleTails",
    "InvalidWitness",
    "OpquantError",
    "UnsupportedTail",
    "ZeroVector",
    "ELL1",
    "ELL2",
    "ELLINF",
    "BiorthogonalSystem",
    "CaseReport",
    "CoreApproximation",
    "DenseMatrix",
    "Diagonal",
    "FiniteRankPlus",
    "budget_bound",
    "build_biorthogonal",
    "build_core_approximants",
    "check_coefficient_bound",
    "check_dense_intersection",
    "run_invariance_case",
    "sub_basis_coefficients",
    "verify_near_isometry",
    "verify_transfer_bounds",
    "Operator",
    "QuantityEstimate",
    "RestrictedOperatorData",
    "WeightedShift",
    "apply",
    "coordinate_subset_value",
    "delta_kK",
    "gamma_k",
    "grassmann_search",
    "limit_estimate",
    "nabla_kK",
    "operator_from_dict",
    "operator_norm",
    "operator_norm_bracket",
    "restricted_extremes",
    "restricted_min_modulus",
    "restricted_norm",
    "restriction_data",
    "svd_oracle",
    "tau_k",
    "truncate_operator",
    "window_action_matrix",
    "LinearFunctional",
    "SpaceConfig",
    "Subspace",
    "TailVector",
    "canonical",
    "functional_from_representer",
    "gram",
    "inner_product",
    "linear_combine",
    "norm",
    "norming_functional",
    "pairing",
    "project_into_kernels",
    "scaled",
    "truncate",
    "unit_vector",
    "zero_vector",
    "__version__",
]
