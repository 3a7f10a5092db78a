"""
High-level train / predict API for T-KRR models
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .cpd import CPDWeights, evaluate
from .data import (
    DEFAULT_MARGIN,
    Dataset,
    Scaler,
    apply_scaler,
    destandardize,
    fit_scaler,
    mean_std_lengthscale,
    standardize_targets,
)
from .errors import InvalidParameterError, ShapeMismatchError, TaskMismatchError
from .features import FeatureConfig, feature_matrices
from .solver import ALSState, LambdaRule, TrainConfig, train_state

logger = logging.getLogger(__name__)


class Task(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


class FeatureOverrides(BaseModel):
    """Preprocessing and kernel choices layered on top of TrainConfig"""
    model_config = ConfigDict(frozen=True)

    lengthscale: Optional[float] = Field(None, gt=0, description="Explicit lengthscale; None = heuristic")
    margin: float = Field(DEFAULT_MARGIN, gt=0, description="Feature domain extension factor")
    task: Optional[Task] = Field(None, description="Force a task instead of inferring it from y")


@dataclass(frozen=True)
class TKRRModel:
    """Trained artifact: preprocessing, feature map, CPD weights and provenance"""
    scaler: Scaler
    feature_config: FeatureConfig
    weights: CPDWeights
    task: Task
    train_config: TrainConfig

    def __post_init__(self):
        if self.feature_config.dims != self.weights.dims:
            raise ShapeMismatchError(
                f"feature config has {self.feature_config.dims} dims, weights have {self.weights.dims} factors"
            )
        if self.feature_config.m_hat != self.weights.m_hat:
            raise ShapeMismatchError(
                f"feature config m_hat {self.feature_config.m_hat} != factor rows {self.weights.m_hat}"
            )
        if self.scaler.dims != self.feature_config.dims:
            raise ShapeMismatchError(f"scaler has {self.scaler.dims} dims, features {self.feature_config.dims}")

    @property
    def dims(self) -> int:
        return self.feature_config.dims


@dataclass
class FitResult:
    model: TKRRModel
    loss_trace: List[float]
    initial_loss: float
    sweep_metrics: List[float] = field(default_factory=list)


def infer_task(dataset: Dataset, override: Optional[Task] = None) -> Task:
    if override is not None:
        task = Task(override)
        if task == Task.CLASSIFICATION and not dataset.is_binary:
            raise InvalidParameterError("classification needs targets in {-1, +1}")
        return task
    return Task.CLASSIFICATION if dataset.is_binary else Task.REGRESSION


def resolve_lambda(cfg: TrainConfig, n_train: int) -> float:
    if LambdaRule(cfg.lambda_rule) == LambdaRule.INVERSE_N:
        return 100.0 / n_train
    return cfg.lambda_reg


def fit_with_history(
    dataset: Dataset,
    train_config: TrainConfig,
    overrides: Optional[FeatureOverrides] = None,
    validation: Optional[Dataset] = None,
) -> FitResult:
    """
    Scale, standardize (regression only) and train.

    Args:
        dataset: Raw training data
        train_config: Solver hyperparameters
        overrides: Lengthscale, margin and task choices
        validation: Optional held-out set scored after every sweep

    Returns:
        FitResult with the model, per-update objective trace and per-sweep
        held-out metric (MSE or misclassification rate)
    """
    overrides = overrides or FeatureOverrides()
    task = infer_task(dataset, overrides.task)

    scaler = fit_scaler(dataset, overrides.margin)
    X, _ = apply_scaler(scaler, dataset.X)

    if task == Task.REGRESSION:
        y, mean, std = standardize_targets(dataset.y)
        scaler = scaler.model_copy(update={"target_mean": mean, "target_std": std})
    else:
        y = dataset.y

    lengthscale = overrides.lengthscale or mean_std_lengthscale(X)
    cfg = train_config.model_copy(update={"lambda_reg": resolve_lambda(train_config, dataset.n_samples)})
    feature_config = FeatureConfig.uniform(cfg.m_hat, lengthscale, scaler.half_width, dataset.dims)

    logger.info(
        f"Fitting {task.value} model: N={dataset.n_samples}, D={dataset.dims}, "
        f"lengthscale={lengthscale:.4g}, lambda={cfg.lambda_reg:.3g}"
    )

    sweep_metrics: List[float] = []

    def _score_validation(index: int, state: ALSState):
        interim = TKRRModel(scaler, feature_config, state.weights, task, cfg)
        metric = score(interim, validation)
        sweep_metrics.append(metric)
        logger.info(f"Sweep {index + 1}: held-out {_metric_name(task)} {metric:.6g}")

    state = train_state(X, y, cfg, feature_config, _score_validation if validation is not None else None)
    model = TKRRModel(scaler, feature_config, state.weights, task, cfg)
    return FitResult(model, list(state.loss_trace), state.initial_loss, sweep_metrics)


def fit(
    dataset: Dataset,
    train_config: TrainConfig,
    overrides: Optional[FeatureOverrides] = None,
) -> Tuple[TKRRModel, List[float]]:
    result = fit_with_history(dataset, train_config, overrides)
    return result.model, result.loss_trace


def raw_scores(model: TKRRModel, X_raw: np.ndarray) -> np.ndarray:
    """Model responses <W, Z(x)> before destandardization"""
    X_raw = np.atleast_2d(np.asarray(X_raw, dtype=float))
    if X_raw.shape[1] != model.dims:
        raise ShapeMismatchError(f"inputs have {X_raw.shape[1]} columns, model expects {model.dims}")
    X, _ = apply_scaler(model.scaler, X_raw)
    return evaluate(model.weights, feature_matrices(X, model.feature_config))


def predict(model: TKRRModel, X_raw: np.ndarray) -> np.ndarray:
    scores = raw_scores(model, X_raw)
    return destandardize(scores, model.scaler.target_mean, model.scaler.target_std)


def classify(model: TKRRModel, X_raw: np.ndarray) -> np.ndarray:
    """Sign of the model response; a score of exactly 0 maps to +1"""
    if model.task != Task.CLASSIFICATION:
        raise TaskMismatchError(f"classify needs a classification model, this one is {model.task.value}")
    return labels_from_scores(predict(model, X_raw))


def labels_from_scores(scores: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(scores) >= 0, 1, -1)


def _metric_name(task: Task) -> str:
    return "MSE" if task == Task.REGRESSION else "misclassification rate"


def task_metric(task: Task, predictions: np.ndarray, targets: np.ndarray) -> float:
    """MSE for regression, misclassification rate of sign(predictions) for classification"""
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if task == Task.REGRESSION:
        return float(np.mean((predictions - targets) ** 2))
    return float(np.mean(labels_from_scores(predictions) != targets))


def score(model: TKRRModel, dataset: Dataset) -> float:
    return task_metric(model.task, predict(model, dataset.X), dataset.y)
