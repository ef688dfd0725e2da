"""Regularized functional PCA for sampled functional data in an RKHS.

Observations are noisy images of random smooth curves under a linear sampling
operator (point evaluations or basis truncation).  The package provides the
kernels and operators, a spiked synthetic model, the constrained regularized
PCA estimator with function-space reconstruction, projector-based subspace
metrics, reference convergence-rate curves, and a Monte Carlo harness that
verifies the predicted rates at desk scale.
"""

from .errors import (
    BracketFailureError,
    ConfigError,
    DegenerateFitError,
    EigenFailureError,
    IllConditionedGramError,
    InvalidPointsError,
    NoSolutionError,
    NotOrthonormalError,
    RepresentationMismatchError,
    SampledFPCAError,
    SingularGramError,
)
from .kernels import EigenExpansion, Kernel, kernel_l2_inner_sections, sobolev1_kernel
from .sampling import (
    RepresenterExpansion,
    SamplingOperator,
    apply_operator,
    apply_to_components,
    condition_b1,
    eigen_seminorm_gram,
    make_basis_truncation,
    make_time_sampling,
    min_norm_interpolant,
    nullspace_width,
    operator_from_config,
    orthonormality_defect,
    seminorm_defect,
    uniform_points,
)
from .model import (
    AssumptionReport,
    Dataset,
    SpikedModel,
    check_assumptions,
    default_components,
    generate_dataset,
    model_from_config,
)
from .estimator import (
    FunctionSubspace,
    SampledFunctionalPCA,
    SubspaceEstimate,
    elbow_scan,
    reconstruct_functions,
    regularized_pca,
    sample_covariance,
    solve_constrained,
)
from .metrics import (
    L2GramContext,
    function_subspace_distance,
    l2_context,
    principal_angles,
    subspace_distance,
)
from .theory import (
    RatePrediction,
    critical_radius,
    growth_function,
    minimax_lower_bounds,
    predicted_rates,
)
from .experiments import (
    ExperimentConfig,
    Figure1Result,
    RateExperimentResult,
    fit_loglog_slope,
    run_figure1_demo,
    run_rate_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "BracketFailureError",
    "ConfigError",
    "Dataset",
    "DegenerateFitError",
    "EigenExpansion",
    "EigenFailureError",
    "ExperimentConfig",
    "Figure1Result",
    "FunctionSubspace",
    "IllConditionedGramError",
    "InvalidPointsError",
    "Kernel",
    "L2GramContext",
    "NoSolutionError",
    "NotOrthonormalError",
    "RatePrediction",
    "RateExperimentResult",
    "RepresentationMismatchError",
    "RepresenterExpansion",
    "SampledFPCAError",
    "SampledFunctionalPCA",
    "SamplingOperator",
    "SingularGramError",
    "SpikedModel",
    "SubspaceEstimate",
    "apply_operator",
    "apply_to_components",
    "check_assumptions",
    "condition_b1",
    "critical_radius",
    "default_components",
    "eigen_seminorm_gram",
    "elbow_scan",
    "fit_loglog_slope",
    "function_subspace_distance",
    "generate_dataset",
    "growth_function",
    "kernel_l2_inner_sections",
    "l2_context",
    "make_basis_truncation",
    "make_time_sampling",
    "min_norm_interpolant",
    "minimax_lower_bounds",
    "model_from_config",
    "nullspace_width",
    "operator_from_config",
    "orthonormality_defect",
    "predicted_rates",
    "principal_angles",
    "reconstruct_functions",
    "regularized_pca",
    "run_figure1_demo",
    "run_rate_experiment",
    "sample_covariance",
    "seminorm_defect",
    "sobolev1_kernel",
    "solve_constrained",
    "subspace_distance",
    "uniform_points",
]
