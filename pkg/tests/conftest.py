"""
Shared fixtures for the T-KRR test suite
"""

from functools import reduce
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.core.features import FeatureConfig
from src.core.solver import RegMode, TrainConfig, init_state

TOY_CSV = Path(__file__).parent.parent / "src" / "resources" / "crescents_toy.csv"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_csv() -> Path:
    return TOY_CSV


def dense_outer(vectors):
    """z^(1) o ... o z^(D) as a dense array"""
    return reduce(np.multiply.outer, vectors)


def scaled_problem(rng, n, dims, m_hat, rank, lambda_reg=1e-3, reg_mode=RegMode.FULL_HADAMARD, **cfg_updates):
    """Random inputs already in [-0.5, 0.5]^D with smooth targets, plus a fresh solver state"""
    X = rng.uniform(-0.5, 0.5, (n, dims))
    y = np.sin(3.0 * X).sum(axis=1) + 0.05 * rng.standard_normal(n)
    cfg = TrainConfig(m_hat=m_hat, rank=rank, lambda_reg=lambda_reg, reg_mode=reg_mode, **cfg_updates)
    fc = FeatureConfig.uniform(m_hat, 0.5, 0.625, dims)
    return X, y, cfg, fc, init_state(X, y, cfg, fc)


def write_csv(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def read_table(path) -> pd.DataFrame:
    """CSV output of the tool, floats parsed exactly"""
    return pd.read_csv(path, float_precision="round_trip")
