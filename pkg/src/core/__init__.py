"""T-KRR numerical engine"""
from .cpd import CPDWeights
from .features import FeatureConfig, RFFConfig
from .model import FeatureOverrides, Task, TKRRModel, classify, fit, predict
from .solver import TrainConfig

__all__ = [
    "CPDWeights",
    "FeatureConfig",
    "RFFConfig",
    "FeatureOverrides",
    "Task",
    "TKRRModel",
    "TrainConfig",
    "classify",
    "fit",
    "predict",
]
