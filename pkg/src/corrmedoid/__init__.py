"""Medoid finding with far fewer than n^2 distance evaluations.

The core algorithm is a sequential-halving bandit that shares one
reference sample across all surviving candidates per round, so estimate
noise is correlated and cancels in comparisons. Exact, uniform-sampling,
and UCB baselines plus hardness analysis and a seeded benchmark harness
round out the package.
"""

from .analysis import (
    BoundCheckResult,
    BoundViolation,
    HardnessReport,
    MedoidTieError,
    estimate_rho,
    estimate_sigma,
    hardness,
    joint_negativity,
    rho_bounds_check,
)
from .baselines import exact_medoid, meddit, rand_medoid
from .dataset import (
    Dataset,
    FormatError,
    SyntheticSpec,
    digit_dataset,
    gen_synthetic,
    load_dense,
    load_idx,
    load_sparse,
    save_dense,
    save_sparse,
    subsample,
    to_dense,
    to_sparse,
)
from .halving import (
    CorrShConfig,
    RoundTrace,
    RunResult,
    ceil_log2,
    corr_seq_halving,
    doubling_corrsh,
    round_budget,
)
from .harness import (
    CurvePoint,
    ExperimentResult,
    ExperimentSpec,
    TrialRecord,
    emit,
    find_zero_error_budget,
    run_experiment,
    zero_error_budget,
)
from .metrics import (
    VALID_METRICS,
    dist,
    pairs_dist,
    pairwise_block,
    row_norms,
    sum_block,
    theta_all,
    theta_exact,
)
from .sampling import derive_seed, make_rng, sample_without_replacement, splitmix64

__version__ = "0.1.0"

__all__ = [
    "BoundCheckResult",
    "BoundViolation",
    "CorrShConfig",
    "CurvePoint",
    "Dataset",
    "ExperimentResult",
    "ExperimentSpec",
    "FormatError",
    "HardnessReport",
    "MedoidTieError",
    "RoundTrace",
    "RunResult",
    "SyntheticSpec",
    "TrialRecord",
    "VALID_METRICS",
    "ceil_log2",
    "corr_seq_halving",
    "derive_seed",
    "digit_dataset",
    "dist",
    "doubling_corrsh",
    "emit",
    "estimate_rho",
    "estimate_sigma",
    "exact_medoid",
    "find_zero_error_budget",
    "gen_synthetic",
    "hardness",
    "joint_negativity",
    "load_dense",
    "load_idx",
    "load_sparse",
    "make_rng",
    "meddit",
    "pairs_dist",
    "pairwise_block",
    "rand_medoid",
    "rho_bounds_check",
    "round_budget",
    "row_norms",
    "run_experiment",
    "sample_without_replacement",
    "save_dense",
    "save_sparse",
    "splitmix64",
    "subsample",
    "sum_block",
    "theta_all",
    "theta_exact",
    "to_dense",
    "to_sparse",
    "zero_error_budget",
]
