"""
Fourier feature maps for the Gaussian kernel

Deterministic Hilbert-space basis (sinusoids with Dirichlet boundary on
[-U, U], weighted by the square root of the spectral density) and the
random Fourier feature baseline.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import DomainViolationError, InvalidParameterError, ShapeMismatchError

logger = logging.getLogger(__name__)

SQRT_2PI = np.sqrt(2.0 * np.pi)


class FeatureConfig(BaseModel):
    """Deterministic feature map parameters (all lengths in scaled-input units)"""
    model_config = ConfigDict(frozen=True)

    m_hat: int = Field(..., ge=1, description="Basis functions per dimension")
    lengthscale: float = Field(..., gt=0, description="Gaussian kernel lengthscale")
    half_widths: List[float] = Field(..., min_length=1, description="Domain half-width U_d per dimension")
    dims: int = Field(..., ge=1, description="Input dimension D")

    @model_validator(mode="after")
    def _check_widths(self) -> "FeatureConfig":
        if len(self.half_widths) != self.dims:
            raise ValueError(f"{len(self.half_widths)} half-widths given for {self.dims} dims")
        if any(not np.isfinite(u) or u <= 0 for u in self.half_widths):
            raise ValueError("every half-width must be positive and finite")
        return self

    @classmethod
    def uniform(cls, m_hat: int, lengthscale: float, half_width: float, dims: int) -> "FeatureConfig":
        return cls(m_hat=m_hat, lengthscale=lengthscale, half_widths=[half_width] * dims, dims=dims)


def spectral_density_gauss(omega, lengthscale: float):
    """p(w) = l * sqrt(2 pi) * exp(-l^2 w^2 / 2); scalar in, scalar out"""
    if not lengthscale > 0:
        raise InvalidParameterError(f"lengthscale must be positive, got {lengthscale}")
    omega = np.asarray(omega, dtype=float)
    density = lengthscale * SQRT_2PI * np.exp(-0.5 * (lengthscale * omega) ** 2)
    return float(density) if density.ndim == 0 else density


def basis_weights(m_hat: int, half_width: float, lengthscale: float) -> np.ndarray:
    """sqrt(p(pi i / 2U)) / sqrt(U) for i = 1..m_hat"""
    if half_width <= 0:
        raise InvalidParameterError(f"half-width must be positive, got {half_width}")
    freqs = np.pi * np.arange(1, m_hat + 1) / (2.0 * half_width)
    density = np.maximum(spectral_density_gauss(freqs, lengthscale), 0.0)
    return np.sqrt(density) / np.sqrt(half_width)


def _hilbert_block(values: np.ndarray, half_width: float, m_hat: int, lengthscale: float) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    outside = ~np.isfinite(values) | (np.abs(values) > half_width)
    if np.any(outside):
        first = int(np.flatnonzero(outside)[0])
        raise DomainViolationError(
            f"{int(outside.sum())} value(s) outside [-{half_width:g}, {half_width:g}], "
            f"first {values[first]!r} at position {first}"
        )

    index = np.arange(1, m_hat + 1)
    phases = np.pi * np.outer(values + half_width, index) / (2.0 * half_width)
    block = np.sin(phases) * basis_weights(m_hat, half_width, lengthscale)
    # Dirichlet boundary: sin(pi * i) is not exactly zero in floating point
    block[np.abs(values) == half_width, :] = 0.0
    return block


def hilbert_feature(x: float, half_width: float, cfg: FeatureConfig) -> np.ndarray:
    """Feature vector of length m_hat for a scalar x in [-U, U]"""
    return _hilbert_block(np.array([x], dtype=float), half_width, cfg.m_hat, cfg.lengthscale)[0]


def feature_matrix(column: Sequence[float], d: int, cfg: FeatureConfig) -> np.ndarray:
    """N x m_hat matrix whose row n is hilbert_feature(column[n], U_d)"""
    if not 0 <= d < cfg.dims:
        raise InvalidParameterError(f"dimension index {d} out of range for {cfg.dims} dims")
    column = np.asarray(column, dtype=float)
    if column.ndim != 1:
        raise ShapeMismatchError(f"expected a 1-D column, got shape {column.shape}")
    return _hilbert_block(column, cfg.half_widths[d], cfg.m_hat, cfg.lengthscale)


def feature_matrices(X: np.ndarray, cfg: FeatureConfig) -> List[np.ndarray]:
    """Per-dimension feature matrices of a scaled N x D input"""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != cfg.dims:
        raise ShapeMismatchError(f"expected N x {cfg.dims} inputs, got shape {X.shape}")
    return [feature_matrix(X[:, d], d, cfg) for d in range(cfg.dims)]


def product_kernel_approx(x: Sequence[float], x2: Sequence[float], cfg: FeatureConfig) -> float:
    """Product over dimensions of 1-D feature inner products; never forms the m_hat^D tensor"""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != (cfg.dims,) or x2.shape != (cfg.dims,):
        raise ShapeMismatchError(f"expected two {cfg.dims}-vectors, got {x.shape} and {x2.shape}")

    value = 1.0
    for d in range(cfg.dims):
        z = feature_matrix(np.array([x[d], x2[d]]), d, cfg)
        value *= float(z[0] @ z[1])
    return value


# ==========================================================================
# Random Fourier features
# ==========================================================================

@dataclass(frozen=True)
class RFFConfig:
    """Random Fourier feature draw: frequencies ~ N(0, 1/l^2), phases ~ U[0, 2 pi)"""
    m_total: int
    lengthscale: float
    seed: int
    frequencies: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        if self.m_total < 1:
            raise InvalidParameterError(f"m_total must be >= 1, got {self.m_total}")
        if not self.lengthscale > 0:
            raise InvalidParameterError(f"lengthscale must be positive, got {self.lengthscale}")
        freqs = np.asarray(self.frequencies, dtype=float)
        phases = np.asarray(self.phases, dtype=float)
        if freqs.ndim != 2 or freqs.shape[0] != self.m_total or phases.shape != (self.m_total,):
            raise ShapeMismatchError(
                f"frequencies {freqs.shape} / phases {phases.shape} do not match m_total={self.m_total}"
            )
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "phases", phases)

    @property
    def dims(self) -> int:
        return self.frequencies.shape[1]

    @classmethod
    def from_seed(cls, m_total: int, dims: int, lengthscale: float, seed: int) -> "RFFConfig":
        if not lengthscale > 0:
            raise InvalidParameterError(f"lengthscale must be positive, got {lengthscale}")
        rng = np.random.default_rng(seed)
        frequencies = rng.normal(0.0, 1.0 / lengthscale, size=(m_total, dims))
        phases = rng.uniform(0.0, 2.0 * np.pi, size=m_total)
        return cls(m_total=m_total, lengthscale=lengthscale, seed=seed,
                   frequencies=frequencies, phases=phases)


def rff_features(X: np.ndarray, cfg: RFFConfig) -> np.ndarray:
    """N x m_total matrix with entries sqrt(2/M) cos(<w_m, x_n> + b_m)"""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != cfg.dims:
        raise ShapeMismatchError(f"expected N x {cfg.dims} inputs, got shape {X.shape}")
    return np.sqrt(2.0 / cfg.m_total) * np.cos(X @ cfg.frequencies.T + cfg.phases)


def rff_map(x: Sequence[float], cfg: RFFConfig) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (cfg.dims,):
        raise ShapeMismatchError(f"expected a {cfg.dims}-vector, got shape {x.shape}")
    return rff_features(x[None, :], cfg)[0]
