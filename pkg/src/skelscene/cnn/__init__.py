from .model import (
    ClassifierConfig,
    ClassifierModel,
    forward,
    gradients,
    init_model,
    load_model,
    loss,
    pooled_features,
    save_model,
)
from .train import ConfusionMatrix, EpochStats, evaluate, history_to_csv, train

__all__ = [
    "ClassifierConfig",
    "ClassifierModel",
    "ConfusionMatrix",
    "EpochStats",
    "evaluate",
    "forward",
    "gradients",
    "history_to_csv",
    "init_model",
    "load_model",
    "loss",
    "pooled_features",
    "save_model",
    "train",
]
