"""Median-of-means minimax regression.

Fit linear predictors by minimizing the worst-case median block loss
increment, with optional l1/slope regularization; generate heavy-tailed
and maliciously corrupted synthetic data; and verify the block conditions
and theorem chains numerically.
"""
from ._kernels import active_backend, available_backends
from .blocks import (
    BlockVector,
    block_increment,
    count_blocks_satisfying,
    median,
    multiplier_component,
    quad_component,
)
from .datagen import CorruptionSpec, NoiseSpec, corrupt, emit_dataset, generate
from .errors import (
    ConfigError,
    DimensionError,
    DivergenceError,
    EmptyLambdaWindow,
    GridCapExceeded,
    HypothesisViolated,
    MomregError,
    OddBlockCountRequired,
    OddLengthRequired,
    ParseError,
    ProbeOutOfRegime,
    TooManyBlocks,
)
from .model import (
    BlockPartition,
    Dataset,
    DesignSpec,
    LinearPredictor,
    load_dataset,
    make_partition,
    permute_dataset,
    population_l2_distance,
    predict,
    save_dataset,
)
from .objective import (
    AdversaryBudget,
    ConditionParams,
    ObjectiveConfig,
    PhiResult,
    Regularizer,
    default_slope_weights,
    lambda_window,
    med_increment,
    phi_hat,
    phi_lambda_hat,
    prox_psi,
    psi,
)
from .solver import (
    GridSpec,
    OracleFit,
    SolverConfig,
    SolverResult,
    erm_fit,
    lasso_fit,
    mom_minimax_fit,
    oracle_grid_fit,
)
from .verify import (
    ConditionReport,
    DeltaEstimate,
    LemmaCheckReport,
    LemmaProbe,
    LemmaViolation,
    Theorem1Diagnostic,
    Theorem2Diagnostic,
    check_condition_one,
    check_condition_two,
    dual_norm,
    estimate_delta,
    estimate_expected_multiplier,
    excess_risk,
    lemma_reg_check,
    lemma_sweep,
    norming_functional,
    sample_sphere_probes,
    support_recovery_error,
    theorem1_check,
    theorem2_check,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryBudget",
    "BlockPartition",
    "BlockVector",
    "ConditionParams",
    "ConditionReport",
    "ConfigError",
    "CorruptionSpec",
    "Dataset",
    "DeltaEstimate",
    "DesignSpec",
    "DimensionError",
    "DivergenceError",
    "EmptyLambdaWindow",
    "GridCapExceeded",
    "GridSpec",
    "HypothesisViolated",
    "LemmaCheckReport",
    "LemmaProbe",
    "LemmaViolation",
    "LinearPredictor",
    "MomregError",
    "NoiseSpec",
    "ObjectiveConfig",
    "OddBlockCountRequired",
    "OddLengthRequired",
    "OracleFit",
    "ParseError",
    "PhiResult",
    "ProbeOutOfRegime",
    "Regularizer",
    "SolverConfig",
    "SolverResult",
    "Theorem1Diagnostic",
    "Theorem2Diagnostic",
    "TooManyBlocks",
    "active_backend",
    "available_backends",
    "block_increment",
    "check_condition_one",
    "check_condition_two",
    "corrupt",
    "count_blocks_satisfying",
    "default_slope_weights",
    "dual_norm",
    "emit_dataset",
    "erm_fit",
    "estimate_delta",
    "estimate_expected_multiplier",
    "excess_risk",
    "generate",
    "lasso_fit",
    "lambda_window",
    "lemma_reg_check",
    "lemma_sweep",
    "load_dataset",
    "make_partition",
    "med_increment",
    "median",
    "mom_minimax_fit",
    "multiplier_component",
    "norming_functional",
    "oracle_grid_fit",
    "permute_dataset",
    "phi_hat",
    "phi_lambda_hat",
    "population_l2_distance",
    "predict",
    "prox_psi",
    "psi",
    "quad_component",
    "sample_sphere_probes",
    "save_dataset",
    "support_recovery_error",
    "theorem1_check",
    "theorem2_check",
]
