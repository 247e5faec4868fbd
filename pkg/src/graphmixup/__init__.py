"""Mixup-based upsampling for class-imbalanced node classification on graphs."""

from .config import ExperimentConfig, load_config
from .errors import (CapacityError, ConfigError, DimensionError, DomainError, GraphMixupError,
                     NodeIndexError, NumericError, ParseError, SingletonClassError)
from .graph import (Graph, ImbalancedSplit, fixture_graph, generate_sbm, load_graph,
                    make_imbalanced_split, partition_graph)
from .metrics import MetricsReport, accuracy, auc_roc_macro, evaluate, macro_f1
from .trainer import TrainRun, pretrain, run_baseline, run_method, train_graphmixup

__all__ = [
    "CapacityError", "ConfigError", "DimensionError", "DomainError", "ExperimentConfig",
    "Graph", "GraphMixupError", "ImbalancedSplit", "MetricsReport", "NodeIndexError",
    "NumericError", "ParseError", "SingletonClassError", "TrainRun", "accuracy",
    "auc_roc_macro", "evaluate", "fixture_graph", "generate_sbm", "load_config", "load_graph",
    "macro_f1", "make_imbalanced_split", "partition_graph", "pretrain", "run_baseline",
    "run_method", "train_graphmixup",
]
