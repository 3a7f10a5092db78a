"""
Model persistence - versioned JSON documents

Floats are written with Python's shortest round-trip repr, so a loaded model
reproduces predictions bit for bit.
"""

import os
import json
import logging
from pathlib import Path
from typing import List, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from ..core.cpd import CPDWeights
from ..core.data import Scaler
from ..core.errors import ModelFormatError, SchemaVersionError, TKRRError
from ..core.features import FeatureConfig
from ..core.model import Task, TKRRModel
from ..core.solver import TrainConfig

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class ModelDocument(BaseModel):
    """On-disk layout of a trained model"""
    schema_version: int = Field(SCHEMA_VERSION, description="Document layout version")
    task: Task
    scaler: Scaler
    feature_config: FeatureConfig
    train_config: TrainConfig
    factors: List[List[List[float]]] = Field(..., description="D factor matrices, each m_hat rows of R values")


def to_document(model: TKRRModel) -> ModelDocument:
    return ModelDocument(
        task=model.task,
        scaler=model.scaler,
        feature_config=model.feature_config,
        train_config=model.train_config,
        factors=[factor.tolist() for factor in model.weights.factors],
    )


def from_document(doc: ModelDocument) -> TKRRModel:
    try:
        weights = CPDWeights(tuple(np.array(f, dtype=float) for f in doc.factors))
        return TKRRModel(doc.scaler, doc.feature_config, weights, doc.task, doc.train_config)
    except TKRRError as e:
        raise ModelFormatError(f"Inconsistent model document: {e}") from e


def save(model: TKRRModel, path: Union[str, Path]):
    """Write the model as JSON; the file is replaced only once fully written"""
    path = Path(path)
    payload = json.dumps(to_document(model).model_dump(mode="json"), indent=2)

    tmp_path = path.with_name(path.name + ".tmp")
    with open(tmp_path, "w", encoding="utf-8") as f:
        f.write(payload)
    os.replace(tmp_path, path)
    logger.info(f"Saved model to {path}")


def load(path: Union[str, Path]) -> TKRRModel:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ModelFormatError(f"{path} does not hold a model document")

    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"{path} has schema version {version!r}, expected {SCHEMA_VERSION}")

    try:
        doc = ModelDocument.model_validate(raw)
    except ValidationError as e:
        raise ModelFormatError(f"{path} is not a valid model document: {e}") from e

    model = from_document(doc)
    logger.info(f"Loaded {model.task.value} model from {path}")
    return model
