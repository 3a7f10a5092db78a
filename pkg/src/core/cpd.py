"""
Canonical Polyadic Decomposition storage and algebra

The weight tensor W of shape (m_hat,)*D is kept as D factor matrices
W^(d) of shape m_hat x R, with the CP scaling vector absorbed into them:

    W[i_1, ..., i_D] = sum_r prod_d W^(d)[i_d, r]
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import CapacityError, InvalidParameterError, ShapeMismatchError

logger = logging.getLogger(__name__)

DENSE_LIMIT = 10 ** 6


@dataclass(frozen=True)
class CPDWeights:
    """Immutable rank-R CPD; replace a factor with `with_factor`"""
    factors: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.factors) == 0:
            raise InvalidParameterError("a CPD needs at least one factor")

        frozen = []
        for d, factor in enumerate(self.factors):
            factor = np.array(factor, dtype=float)
            if factor.ndim != 2:
                raise ShapeMismatchError(f"factor {d} must be a matrix, got shape {factor.shape}")
            if not np.all(np.isfinite(factor)):
                raise InvalidParameterError(f"factor {d} has non-finite entries")
            factor.setflags(write=False)
            frozen.append(factor)

        shape = frozen[0].shape
        for d, factor in enumerate(frozen):
            if factor.shape != shape:
                raise ShapeMismatchError(f"factor {d} has shape {factor.shape}, factor 0 has {shape}")
        object.__setattr__(self, "factors", tuple(frozen))

    @property
    def dims(self) -> int:
        return len(self.factors)

    @property
    def m_hat(self) -> int:
        return self.factors[0].shape[0]

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    def with_factor(self, d: int, factor: np.ndarray) -> "CPDWeights":
        factors = list(self.factors)
        factors[d] = factor
        return CPDWeights(tuple(factors))


def init_random(m_hat: int, dims: int, rank: int, seed: int) -> CPDWeights:
    """Standard normal factors, each divided by its Frobenius norm"""
    if min(m_hat, dims, rank) < 1:
        raise InvalidParameterError(f"m_hat, dims and rank must be >= 1, got {m_hat}, {dims}, {rank}")

    rng = np.random.default_rng(seed)
    factors = []
    for _ in range(dims):
        factor = rng.standard_normal((m_hat, rank))
        factors.append(factor / np.linalg.norm(factor))
    return CPDWeights(tuple(factors))


def check_capacity(m_hat: int, dims: int, limit: int = DENSE_LIMIT, what: str = "dense tensor") -> int:
    size = m_hat ** dims
    if size > limit:
        raise CapacityError(what, size, limit)
    return size


def reconstruct_full(w: CPDWeights, limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense tensor of shape (m_hat,)*D; guarded by `limit` total entries"""
    check_capacity(w.m_hat, w.dims, limit)

    partial = w.factors[0]
    for factor in w.factors[1:]:
        partial = np.einsum("...r,jr->...jr", partial, factor)
    return partial.sum(axis=-1)


def _check_vectors(w: CPDWeights, z_list: Sequence[np.ndarray]) -> List[np.ndarray]:
    if len(z_list) != w.dims:
        raise ShapeMismatchError(f"expected {w.dims} feature vectors, got {len(z_list)}")
    vectors = [np.asarray(z, dtype=float) for z in z_list]
    for d, z in enumerate(vectors):
        if z.shape[-1] != w.m_hat:
            raise ShapeMismatchError(f"feature {d} has length {z.shape[-1]}, factors have {w.m_hat} rows")
    return vectors


def inner_with_rank1(w: CPDWeights, z_list: Sequence[np.ndarray]) -> float:
    """<W, z^(1) o ... o z^(D)>_F = sum_r prod_d <z^(d), w_r^(d)> in O(D m_hat R)"""
    vectors = _check_vectors(w, z_list)
    product = np.ones(w.rank)
    for z, factor in zip(vectors, w.factors):
        product *= z @ factor
    return float(product.sum())


def projections(w: CPDWeights, feature_mats: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Per-dimension N x R matrices Z^(d) W^(d)"""
    mats = _check_vectors(w, feature_mats)
    return [z @ factor for z, factor in zip(mats, w.factors)]


def evaluate(w: CPDWeights, feature_mats: Sequence[np.ndarray]) -> np.ndarray:
    """Batched inner_with_rank1: N model outputs from per-dimension N x m_hat features"""
    projected = projections(w, feature_mats)
    product = projected[0].copy()
    for p in projected[1:]:
        product *= p
    return product.sum(axis=1)


def factor_grams(w: CPDWeights) -> List[np.ndarray]:
    return [factor.T @ factor for factor in w.factors]


def frob_norm_sq(w: CPDWeights) -> float:
    """||W||_F^2 as the entry sum of the Hadamard product of all factor Grams"""
    hadamard = np.ones((w.rank, w.rank))
    for gram in factor_grams(w):
        hadamard *= gram
    return float(hadamard.sum())


def equilibrate(w: CPDWeights) -> CPDWeights:
    """
    Rescale every rank-1 term so its D column vectors share the same norm.

    The represented tensor is unchanged; terms with a zero column are left as-is.
    """
    norms = np.stack([np.linalg.norm(factor, axis=0) for factor in w.factors])  # D x R
    nonzero = np.all(norms > 0, axis=0)
    if not np.any(nonzero):
        return w

    target = np.ones(w.rank)
    target[nonzero] = np.exp(np.log(norms[:, nonzero]).mean(axis=0))

    factors = []
    for d, factor in enumerate(w.factors):
        scale = np.ones(w.rank)
        scale[nonzero] = target[nonzero] / norms[d, nonzero]
        factors.append(factor * scale)
    return CPDWeights(tuple(factors))
