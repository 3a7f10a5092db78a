"""
Settings loader - YAML defaults with ${VAR:-default} environment expansion
"""

import os
import re
import logging
from pathlib import Path
from typing import List, Literal, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from .errors import InvalidParameterError
from .solver import TrainConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).parent.parent.parent / "config" / "defaults.yaml"

_ENV_REF = re.compile(r"\$\{(\w+)(?::-([^}]*))?\}")


class FeatureDefaults(BaseModel):
    lengthscale: Union[Literal["auto"], float] = Field("auto", description="Kernel lengthscale or 'auto'")


class DataDefaults(BaseModel):
    margin: float = Field(1.25, gt=0, description="Feature-domain extension beyond the scaled data box")
    train_fraction: float = Field(0.9, gt=0, lt=1, description="Share of rows used for training")


class LimitDefaults(BaseModel):
    dual_cap: int = Field(10_000, ge=1, description="Largest N for exact dual KRR")


class CompareDefaults(BaseModel):
    seeds: int = Field(10, ge=1, description="Number of random splits")
    workers: int = Field(1, ge=1, description="Splits processed in parallel")


class KernelBenchDefaults(BaseModel):
    lengthscale: float = Field(0.3, gt=0)
    half_width: float = Field(1.0, gt=0)
    extent: float = Field(0.5, gt=0)
    grid: int = Field(100, ge=2)
    m_hat: List[int] = Field(default_factory=lambda: [4, 8, 16, 32])


class Settings(BaseModel):
    """Validated defaults for every command"""
    training: TrainConfig = Field(default_factory=TrainConfig)
    features: FeatureDefaults = Field(default_factory=FeatureDefaults)
    data: DataDefaults = Field(default_factory=DataDefaults)
    limits: LimitDefaults = Field(default_factory=LimitDefaults)
    compare: CompareDefaults = Field(default_factory=CompareDefaults)
    kernel_bench: KernelBenchDefaults = Field(default_factory=KernelBenchDefaults)


def expand_env(text: str) -> str:
    """Replace ${VAR} and ${VAR:-default} references with environment values"""

    def _sub(match: re.Match) -> str:
        name, default = match.group(1), match.group(2)
        value = os.getenv(name)
        if value is None:
            return default if default is not None else ""
        return value

    return _ENV_REF.sub(_sub, text)


def load_settings(path: Optional[Union[str, Path]] = None) -> Settings:
    """
    Load settings from a YAML file.

    Args:
        path: Config file; falls back to $TKRR_CONFIG, then config/defaults.yaml

    Returns:
        Validated Settings. A missing default file yields built-in defaults.
    """
    load_dotenv()

    explicit = path or os.getenv("TKRR_CONFIG")
    config_path = Path(explicit) if explicit else DEFAULT_CONFIG_PATH

    if not config_path.exists():
        if explicit:
            raise InvalidParameterError(f"Config file not found: {config_path}")
        logger.warning(f"No config file at {config_path}, using built-in defaults")
        return Settings()

    with open(config_path, "r", encoding="utf-8") as f:
        raw = yaml.safe_load(expand_env(f.read())) or {}

    try:
        settings = Settings.model_validate(raw)
    except ValidationError as e:
        raise InvalidParameterError(f"Invalid config {config_path}: {e}") from e

    logger.debug(f"Loaded settings from {config_path}")
    return settings
