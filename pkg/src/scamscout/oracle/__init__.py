"""Scam/benign domain classifier: boosted trees plus a linear baseline."""

from .baseline import LogisticBaseline, train_logistic_baseline
from .evaluate import (
    EvalReport,
    Metrics,
    binary_metrics,
    cross_validate,
    stratified_folds,
)
from .gbdt import (
    CLASSIFICATION_THRESHOLD,
    LOGISTIC,
    SQUARED,
    GbdtModel,
    TrainConfig,
    load_model,
    predict,
    predict_proba,
    save_model,
    train_gbdt,
)
from .tree import LEFT, RIGHT, TreeNode, grow_tree, predict_tree, tree_route

__all__ = [
    "CLASSIFICATION_THRESHOLD",
    "EvalReport",
    "GbdtModel",
    "LEFT",
    "LOGISTIC",
    "LogisticBaseline",
    "Metrics",
    "RIGHT",
    "SQUARED",
    "TrainConfig",
    "TreeNode",
    "binary_metrics",
    "cross_validate",
    "grow_tree",
    "load_model",
    "predict",
    "predict_proba",
    "predict_tree",
    "save_model",
    "stratified_folds",
    "train_gbdt",
    "train_logistic_baseline",
    "tree_route",
]
