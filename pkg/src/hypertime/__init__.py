"""Hyperparameter tuning that stays robust under temporal drift.

Configurations are scored on chronological validation folds by the ordered
pair (average fold loss, worst fold loss) and searched with LexiFlow, a
randomized direct search driven by tolerance-targeted lexicographic
comparisons.
"""

from .bounds import hoeffding_term, kappa_threshold, test_loss_bound, theorem_check
from .dataset import TimeSeriesDataset, read_csv, write_csv
from .drift import DriftScenario, Segment, benchmark_scenario
from .experiment import ExperimentConfig, compare_methods, report_emit, run_experiment
from .folds import plan_folds
from .learners import LearnerSpec
from .lexico import lexi_compare, lexi_optimal_set, targeted_compare
from .lexiflow import LexiFlow, OptimizerParams, random_search, run
from .objectives import ObjectiveMode, aggregate, evaluate_config
from .search_space import ParamDomain, SearchSpace

__version__ = "0.1.0"

__all__ = [
    "DriftScenario",
    "ExperimentConfig",
    "LearnerSpec",
    "LexiFlow",
    "ObjectiveMode",
    "OptimizerParams",
    "ParamDomain",
    "SearchSpace",
    "Segment",
    "TimeSeriesDataset",
    "aggregate",
    "benchmark_scenario",
    "compare_methods",
    "evaluate_config",
    "hoeffding_term",
    "kappa_threshold",
    "lexi_compare",
    "lexi_optimal_set",
    "plan_folds",
    "random_search",
    "read_csv",
    "report_emit",
    "run",
    "run_experiment",
    "targeted_compare",
    "test_loss_bound",
    "theorem_check",
    "write_csv",
]
