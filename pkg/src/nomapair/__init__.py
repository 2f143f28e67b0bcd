"""Multicell downlink NOMA: simulation, optimal pair power split, learned pairing.

The numeric layers build on each other: `netsim` samples channel
realizations, `rates` prices one transmission pair in closed form,
`assignment` encodes and scores whole pairing plans, `baselines` holds the
exhaustive search and the two reference heuristics, and `policy` plus
`training` learn a pointer network with a score-based gradient estimator on
the hand-rolled `autodiff` kernel. `estimators` wraps the strategies in a
scikit-learn fit/predict API, and `cli` / `presets` / `configfile` form the
command line harness.
"""

from .assignment import (
    Assignment,
    aggregate_rate,
    canonicalize,
    evaluate_permutation,
    format_assignment,
    from_permutation,
)
from .baselines import (
    DEFAULT_BUDGET,
    EnumerationBudgetError,
    candidate_count,
    exhaustive_noma,
    optimal_oma,
    random_heuristic,
)
from .estimators import (
    ExhaustiveSolver,
    OrthogonalSolver,
    PairingSolver,
    PointerPolicySolver,
    RandomPairingSolver,
)
from .netsim import (
    DatasetFormatError,
    NetworkConfig,
    NetworkInstance,
    load_dataset,
    pad_with_surrogates,
    sample_instance,
    save_dataset,
)
from .policy import PolicyConfig, RolloutBatch, init_parameters, rollout_batch
from .presets import PRESETS, get_preset, preset_names
from .rates import RadioParams, nonsic_rate, oma_rate, optimal_alpha, pair_rate, sic_rate
from .training import TrainConfig, TrainingState, read_metrics, train

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "DEFAULT_BUDGET",
    "DatasetFormatError",
    "EnumerationBudgetError",
    "ExhaustiveSolver",
    "NetworkConfig",
    "NetworkInstance",
    "OrthogonalSolver",
    "PRESETS",
    "PairingSolver",
    "PointerPolicySolver",
    "PolicyConfig",
    "RadioParams",
    "RandomPairingSolver",
    "RolloutBatch",
    "TrainConfig",
    "TrainingState",
    "aggregate_rate",
    "candidate_count",
    "canonicalize",
    "evaluate_permutation",
    "exhaustive_noma",
    "format_assignment",
    "from_permutation",
    "get_preset",
    "init_parameters",
    "load_dataset",
    "nonsic_rate",
    "oma_rate",
    "optimal_alpha",
    "optimal_oma",
    "pad_with_surrogates",
    "pair_rate",
    "preset_names",
    "random_heuristic",
    "read_metrics",
    "rollout_batch",
    "sample_instance",
    "save_dataset",
    "sic_rate",
    "train",
]
