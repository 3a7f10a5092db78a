"""
Reference methods: exact Gaussian kernel, dual KRR, primal ridge on explicit
features (full tensor-product or random Fourier)
"""

import logging
from typing import Dict, List, Sequence

import numpy as np
from numpy.linalg import LinAlgError
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist

from .cpd import DENSE_LIMIT, check_capacity
from .errors import CapacityError, InvalidParameterError, NumericalFailureError, ShapeMismatchError
from .features import FeatureConfig, RFFConfig, feature_matrices, feature_matrix, rff_features

logger = logging.getLogger(__name__)

DUAL_CAP = 10_000


class KernelParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    lengthscale: float = Field(..., gt=0, description="Shared Gaussian kernel lengthscale")


def gaussian_kernel(x: Sequence[float], x2: Sequence[float], params: KernelParams) -> float:
    """exp(-||x - x2||^2 / (2 l^2))"""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        raise ShapeMismatchError(f"points have shapes {x.shape} and {x2.shape}")
    diff = x - x2
    return float(np.exp(-(diff @ diff) / (2.0 * params.lengthscale ** 2)))


def gaussian_gram(X: np.ndarray, X2: np.ndarray, params: KernelParams) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    if X.shape[1] != X2.shape[1]:
        raise ShapeMismatchError(f"inputs have {X.shape[1]} and {X2.shape[1]} columns")
    return np.exp(-cdist(X, X2, "sqeuclidean") / (2.0 * params.lengthscale ** 2))


def _spd_solve(lhs: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    try:
        factor = cho_factor(lhs, lower=True)
    except LinAlgError as e:
        raise NumericalFailureError(f"{what} is not positive definite: {e}") from e
    return cho_solve(factor, rhs)


def krr_dual_solve(K: np.ndarray, y: np.ndarray, lambda_reg: float) -> np.ndarray:
    """alpha = (K + lambda I)^-1 y for any Gram matrix K"""
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    if K.shape != (len(y), len(y)):
        raise ShapeMismatchError(f"Gram of shape {K.shape} for {len(y)} targets")
    return _spd_solve(K + lambda_reg * np.eye(len(y)), y, "K + lambda I")


def krr_dual_fit(
    X: np.ndarray,
    y: np.ndarray,
    params: KernelParams,
    lambda_reg: float,
    cap: int = DUAL_CAP,
) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] > cap:
        raise CapacityError("dual KRR Gram matrix rows", X.shape[0], cap)
    logger.debug(f"Dual KRR on N={X.shape[0]}, lambda={lambda_reg:g}")
    return krr_dual_solve(gaussian_gram(X, X, params), y, lambda_reg)


def krr_dual_predict(X_train: np.ndarray, alpha: np.ndarray, X_new: np.ndarray, params: KernelParams) -> np.ndarray:
    return gaussian_gram(X_new, X_train, params) @ alpha


def primal_ridge_fit(Phi: np.ndarray, y: np.ndarray, lambda_reg: float) -> np.ndarray:
    """w solving (Phi^T Phi + lambda I) w = Phi^T y"""
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    if Phi.ndim != 2 or Phi.shape[0] != len(y):
        raise ShapeMismatchError(f"feature matrix {Phi.shape} for {len(y)} targets")
    if not np.all(np.isfinite(Phi)):
        raise InvalidParameterError("feature matrix has non-finite entries")
    lhs = Phi.T @ Phi + lambda_reg * np.eye(Phi.shape[1])
    return _spd_solve(lhs, Phi.T @ y, "Phi^T Phi + lambda I")


def primal_objective(Phi: np.ndarray, y: np.ndarray, w: np.ndarray, lambda_reg: float) -> float:
    residual = np.asarray(y, dtype=float) - Phi @ w
    return float(residual @ residual + lambda_reg * (w @ w))


def full_tensor_features(X: np.ndarray, cfg: FeatureConfig, limit: int = DENSE_LIMIT) -> np.ndarray:
    """
    N x m_hat^D matrix of vectorized tensor-product features.

    Column-major vec: the dimension-0 basis index runs fastest, matching the
    solver's vec(W^(d)) convention and reconstruct_full(...).reshape(-1, order="F").
    """
    check_capacity(cfg.m_hat, cfg.dims, limit, "full tensor features")
    mats = feature_matrices(X, cfg)
    n = mats[0].shape[0]

    rows = mats[0]
    for z in mats[1:]:
        rows = (z[:, :, None] * rows[:, None, :]).reshape(n, -1)
    return rows


def rff_ridge_fit(X: np.ndarray, y: np.ndarray, cfg: RFFConfig, lambda_reg: float) -> np.ndarray:
    return primal_ridge_fit(rff_features(X, cfg), y, lambda_reg)


def rff_ridge_predict(X: np.ndarray, w: np.ndarray, cfg: RFFConfig) -> np.ndarray:
    return rff_features(X, cfg) @ w


def kernel_approximation_errors(
    lengthscale: float,
    half_width: float,
    m_hat_values: Sequence[int],
    grid: int,
    extent: float,
) -> List[Dict[str, float]]:
    """
    Sup and mean absolute error of the 1-D deterministic feature kernel against
    the exact Gaussian kernel over all grid x grid pairs in [-extent, extent]^2.
    """
    if grid < 2:
        raise InvalidParameterError(f"grid needs at least 2 points, got {grid}")
    if not 0 < extent <= half_width:
        raise InvalidParameterError(f"extent must lie in (0, {half_width:g}], got {extent}")

    points = np.linspace(-extent, extent, grid)
    exact = gaussian_gram(points[:, None], points[:, None], KernelParams(lengthscale=lengthscale))

    rows = []
    for m_hat in m_hat_values:
        cfg = FeatureConfig.uniform(m_hat, lengthscale, half_width, 1)
        z = feature_matrix(points, 0, cfg)
        error = np.abs(z @ z.T - exact)
        rows.append({"m_hat": int(m_hat), "sup_error": float(error.max()), "mean_error": float(error.mean())})
        logger.debug(f"m_hat={m_hat}: sup error {rows[-1]['sup_error']:.3e}")
    return rows
