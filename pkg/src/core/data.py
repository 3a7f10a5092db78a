"""
Datasets, input scaling into the feature domain, target standardization,
seeded splits and synthetic generators
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import InvalidParameterError, ShapeMismatchError

logger = logging.getLogger(__name__)

DEFAULT_MARGIN = 1.25


@dataclass(frozen=True)
class Dataset:
    """N x D inputs with N targets (real values or +-1 labels)"""
    X: np.ndarray
    y: np.ndarray
    column_names: Optional[List[str]] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidParameterError(f"dataset needs N >= 1 rows and D >= 1 columns, got shape {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise ShapeMismatchError(f"{X.shape[0]} input rows but {y.shape[0]} targets")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidParameterError("dataset contains non-finite values")
        if self.column_names is not None and len(self.column_names) != X.shape[1]:
            raise ShapeMismatchError(f"{len(self.column_names)} column names for {X.shape[1]} columns")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def dims(self) -> int:
        return self.X.shape[1]

    @property
    def is_binary(self) -> bool:
        """All targets are -1 or +1"""
        return bool(np.all(np.isin(self.y, (-1.0, 1.0))))

    def take(self, indices: Sequence[int]) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(self.X[indices], self.y[indices], self.column_names)


class Scaler(BaseModel):
    """Affine input map onto [-0.5, 0.5]^D plus target standardization parameters"""
    model_config = ConfigDict(frozen=True)

    mins: List[float] = Field(..., min_length=1, description="Per-dimension training minimum")
    maxs: List[float] = Field(..., min_length=1, description="Per-dimension training maximum")
    target_mean: float = Field(0.0, description="Training target mean")
    target_std: float = Field(1.0, ge=0, description="Training target population std")
    margin: float = Field(DEFAULT_MARGIN, gt=0, description="Feature domain extension factor")

    @model_validator(mode="after")
    def _check_bounds(self) -> "Scaler":
        if len(self.mins) != len(self.maxs):
            raise ValueError("mins and maxs differ in length")
        if any(hi < lo for lo, hi in zip(self.mins, self.maxs)):
            raise ValueError("every max must be >= its min")
        return self

    @property
    def dims(self) -> int:
        return len(self.mins)

    @property
    def half_width(self) -> float:
        return 0.5 * self.margin

    @property
    def half_widths(self) -> List[float]:
        return [self.half_width] * self.dims


def fit_scaler(train: Dataset, margin: float = DEFAULT_MARGIN) -> Scaler:
    """Input bounds from the training rows only; target parameters default to identity"""
    return Scaler(
        mins=train.X.min(axis=0).tolist(),
        maxs=train.X.max(axis=0).tolist(),
        margin=margin,
    )


def apply_scaler(scaler: Scaler, X: np.ndarray) -> Tuple[np.ndarray, int]:
    """
    Map raw inputs into the feature domain.

    Training rows land in [-0.5, 0.5]; constant columns map to 0; values beyond
    [-U, U] are clipped.

    Returns:
        (scaled inputs, number of clipped values)
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != scaler.dims:
        raise ShapeMismatchError(f"inputs have {X.shape[1]} columns, scaler expects {scaler.dims}")

    mins = np.asarray(scaler.mins)
    maxs = np.asarray(scaler.maxs)
    span = maxs - mins
    centre = 0.5 * (mins + maxs)
    safe_span = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (X - centre) / safe_span, 0.0)

    limit = scaler.half_width
    outside = np.abs(scaled) > limit
    clipped = int(outside.sum())
    if clipped:
        logger.warning(f"Clipped {clipped} input value(s) to the feature domain [-{limit:g}, {limit:g}]")
        scaled = np.clip(scaled, -limit, limit)
    return scaled, clipped


def standardize_targets(y: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """Population-std standardization; a constant target is only centred"""
    y = np.asarray(y, dtype=float)
    if y.size and np.ptp(y) == 0:
        # exact constants; np.mean can be off by an ulp and fake a tiny std
        return np.zeros_like(y), float(y[0]), 0.0
    mean = float(np.mean(y))
    std = float(np.std(y))
    centred = y - mean
    if std > 0:
        return centred / std, mean, std
    return centred, mean, 0.0


def destandardize(pred: np.ndarray, mean: float, std: float) -> np.ndarray:
    scale = std if std > 0 else 1.0
    return np.asarray(pred, dtype=float) * scale + mean


def split(dataset: Dataset, train_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Seeded permutation split with ceil(f N) training rows"""
    if not 0 < train_fraction < 1:
        raise InvalidParameterError(f"train fraction must be in (0, 1), got {train_fraction}")

    n = dataset.n_samples
    n_train = int(np.ceil(round(train_fraction * n, 9)))
    if n_train < 1 or n_train >= n:
        raise InvalidParameterError(f"fraction {train_fraction} of {n} rows leaves an empty side")

    order = np.random.default_rng(seed).permutation(n)
    return dataset.take(order[:n_train]), dataset.take(order[n_train:])


def mean_std_lengthscale(X_scaled: np.ndarray) -> float:
    """Mean over dimensions of the per-dimension population standard deviation"""
    value = float(np.mean(np.std(np.asarray(X_scaled, dtype=float), axis=0)))
    if not value > 0:
        raise InvalidParameterError("inputs are constant; pass an explicit lengthscale")
    return value


# ==========================================================================
# Synthetic data
# ==========================================================================

def make_crescents(n: int, seed: int, noise: float = 0.1) -> Dataset:
    """Two interleaved half-moons labelled +1 (upper) and -1 (lower)"""
    if n < 2:
        raise InvalidParameterError(f"need at least 2 samples, got {n}")
    rng = np.random.default_rng(seed)
    n_upper = n // 2
    n_lower = n - n_upper

    t_upper = rng.uniform(0.0, np.pi, n_upper)
    t_lower = rng.uniform(0.0, np.pi, n_lower)
    upper = np.column_stack([np.cos(t_upper), np.sin(t_upper)])
    lower = np.column_stack([1.0 - np.cos(t_lower), 0.5 - np.sin(t_lower)])

    X = np.vstack([upper, lower]) + noise * rng.standard_normal((n, 2))
    y = np.concatenate([np.ones(n_upper), -np.ones(n_lower)])
    order = rng.permutation(n)
    return Dataset(X[order], y[order], ["x0", "x1"])


def make_bumps(n: int, dims: int, seed: int, n_bumps: int = 5, noise: float = 0.05) -> Dataset:
    """Smooth regression target: a sum of Gaussian bumps on the unit cube plus noise"""
    if n < 1 or dims < 1 or n_bumps < 1:
        raise InvalidParameterError(f"invalid bump problem n={n}, dims={dims}, bumps={n_bumps}")
    rng = np.random.default_rng(seed)
    centres = rng.uniform(0.2, 0.8, (n_bumps, dims))
    widths = rng.uniform(0.25, 0.5, n_bumps)
    amplitudes = rng.normal(0.0, 1.0, n_bumps)

    X = rng.uniform(0.0, 1.0, (n, dims))
    sq_dist = ((X[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)
    y = (amplitudes * np.exp(-sq_dist / (2.0 * widths ** 2))).sum(axis=1)
    y = y + noise * rng.standard_normal(n)
    return Dataset(X, y, [f"x{d}" for d in range(dims)])
