"""Complex-valued Gaussian process regression with kernel and pseudo-kernel."""

from .augmented import (
    AugmentedFactor,
    AugmentedMatrix,
    augmented_from_blocks,
    augmented_from_composite,
    composite_matrix,
    solve_augmented,
    to_augmented,
    to_composite,
    transform_matrix,
)
from .estimators import (
    WCGPR,
    CompositePredictive,
    PredictiveDistribution,
    ProperCGPR,
    SecondOrderStats,
    composite_gpr_predict,
    lmmse,
    lmmse_error_cov,
    log_marginal_likelihood,
    proper_cgpr_predict,
    properness_residual,
    reduction_residual,
    wcgpr_predict,
    wlmmse,
    wlmmse_weights,
)
from .exceptions import NumericalStructureError, SingularMatrixError, StructuralError, WCGPRError
from .experiment import ExperimentConfig, ExperimentReport, mse_db, run_single, run_sweep
from .kernels import (
    KernelPair,
    augmented_gram,
    composite_gram,
    filter_induced_kernel,
    gram,
    proper_pair,
    squared_exponential_pair,
    validate_kernel_pair,
)
from .noise import NoiseModel
from .synthesis import (
    Axis,
    Grid,
    GridSampleFunction,
    WidelyLinearFilterModel,
    empirical_second_order,
    exponential_filter_taps,
    generate_improper_gp,
    generate_improper_noise,
)

__version__ = "0.1.0"
