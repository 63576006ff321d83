"""Selective data acquisition for accurate and fair models.

Decide how many new training examples to buy for each data slice, under
a cost budget, to jointly minimize model loss and the spread of losses
across slices. Learning curves fitted per slice feed a convex budget
allocation, wrapped in an iterative loop that caps how fast the data
imbalance may drift.
"""

from .acquisition import (
    AcquisitionLog,
    IterativeConfig,
    get_change_ratio,
    get_imbalance_ratio,
    increase_limit,
    run_iterative,
    uniform_allocate,
    water_filling_allocate,
)
from .curves import (
    CurveEstimationConfig,
    CurvePoint,
    PowerLawCurve,
    estimate_curves,
    fit_power_law,
    subset_schedule,
)
from .harness import (
    ComparisonReport,
    ExperimentConfig,
    compare_estimation_modes,
    emit_plot_data,
    load_config,
    run_experiment,
)
from .model import (
    Budget,
    LossReport,
    SlicePartition,
    SliceState,
    log_loss,
    loss_report,
    normalize_costs,
    unfairness,
)
from .optimizer import (
    AllocationPlan,
    AllocationProblem,
    objective,
    one_shot_allocate,
    solve_continuous,
)
from .oracle import (
    LossOracle,
    SyntheticWorld,
    TrainerEndpoint,
    TrainerProcess,
    synthetic_eval,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionLog",
    "AllocationPlan",
    "AllocationProblem",
    "Budget",
    "ComparisonReport",
    "CurveEstimationConfig",
    "CurvePoint",
    "ExperimentConfig",
    "IterativeConfig",
    "LossOracle",
    "LossReport",
    "PowerLawCurve",
    "SlicePartition",
    "SliceState",
    "SyntheticWorld",
    "TrainerEndpoint",
    "TrainerProcess",
    "compare_estimation_modes",
    "emit_plot_data",
    "estimate_curves",
    "fit_power_law",
    "get_change_ratio",
    "get_imbalance_ratio",
    "increase_limit",
    "load_config",
    "log_loss",
    "loss_report",
    "normalize_costs",
    "objective",
    "one_shot_allocate",
    "run_experiment",
    "run_iterative",
    "solve_continuous",
    "subset_schedule",
    "synthetic_eval",
    "unfairness",
    "uniform_allocate",
    "water_filling_allocate",
]
