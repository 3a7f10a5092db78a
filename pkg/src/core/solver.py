"""
Alternating least squares trainer for CPD-constrained kernel ridge regression

Minimizes  sum_n (y_n - <W, Z(x_n)>_F)^2 + lambda <W, W>_F  over one factor
matrix at a time. With the other factors fixed the problem in vec(W^(d))
(column-major, row index fast) is linear least squares:

    (G^T G + lambda (H^(d) kron I)) vec(W^(d)) = G^T y

where row n of G is q_n kron z_n, q_n[r] = prod_{k != d} <z^(k)(x_n), w_r^(k)>,
and H^(d) is the Hadamard product of the factor Grams over k != d.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from numpy.linalg import LinAlgError
from pydantic import BaseModel, Field
from scipy.linalg import cho_factor, cho_solve

from .cpd import CPDWeights, equilibrate, factor_grams, init_random
from .errors import InvalidParameterError, NumericalFailureError, ShapeMismatchError
from .features import FeatureConfig, feature_matrix

logger = logging.getLogger(__name__)

JITTER_FLOOR = 1e-10
JITTER_CEILING = 1e-4
MAX_JITTER_ATTEMPTS = 7


class RegMode(str, Enum):
    FULL_HADAMARD = "full_hadamard"
    DIAGONAL_ONLY = "diagonal_only"


class MemoryMode(str, Enum):
    CACHED = "cached"
    STREAMING = "streaming"


class LambdaRule(str, Enum):
    FIXED = "fixed"
    INVERSE_N = "inverse_n"


class TrainConfig(BaseModel):
    """Hyperparameters of one training run"""
    m_hat: int = Field(10, ge=1, description="Basis functions per dimension")
    rank: int = Field(10, ge=1, description="CP rank R")
    lambda_reg: float = Field(1e-5, ge=0, description="Regularization weight")
    lambda_rule: LambdaRule = Field(LambdaRule.FIXED, description="fixed, or 100/N resolved at fit time")
    sweeps: int = Field(10, ge=1, description="Number of 1 -> D -> 1 sweeps")
    reg_mode: RegMode = Field(RegMode.DIAGONAL_ONLY, description="Regularizer used in each subproblem")
    seed: int = Field(0, description="Seed of the random initial factors")
    jitter: float = Field(1e-10, ge=0, description="Initial diagonal jitter of the normal equations")
    capture_trace: bool = Field(True, description="Record the objective after every factor update")
    memory_mode: MemoryMode = Field(MemoryMode.CACHED, description="Cache features/projections or stream them")
    chunk_size: int = Field(4096, ge=1, description="Rows per accumulation block")
    workers: int = Field(1, ge=1, description="Threads accumulating the normal equations")
    equilibrate: bool = Field(False, description="Balance CPD column norms after each sweep")


@dataclass
class ALSState:
    """
    Solver state and caches.

    In cached mode `features[d]` is the N x m_hat feature matrix of column d and
    `projections[d] == features[d] @ weights.factors[d]`. In streaming mode both
    are None and rows are recomputed block by block from `X`.
    """
    weights: CPDWeights
    X: np.ndarray
    feature_config: FeatureConfig
    grams: List[np.ndarray]
    features: Optional[List[np.ndarray]] = None
    projections: Optional[List[np.ndarray]] = None
    loss_trace: List[float] = field(default_factory=list)
    sweep_count: int = 0
    initial_loss: Optional[float] = None
    chunk_size: int = 4096
    workers: int = 1

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def dims(self) -> int:
        return self.weights.dims


# ==========================================================================
# Cache plumbing
# ==========================================================================

def _chunks(n: int, size: int) -> Iterator[slice]:
    for start in range(0, n, size):
        yield slice(start, min(start + size, n))


def _row_projections(state: ALSState, rows: slice, skip: Optional[int] = None) -> List[Optional[np.ndarray]]:
    if state.projections is not None:
        return [None if k == skip else p[rows] for k, p in enumerate(state.projections)]

    result = []
    for k, factor in enumerate(state.weights.factors):
        if k == skip:
            result.append(None)
            continue
        z = feature_matrix(state.X[rows, k], k, state.feature_config)
        result.append(z @ factor)
    return result


def _hadamard_except(mats: Sequence[Optional[np.ndarray]], d: int, shape: Tuple[int, ...]) -> np.ndarray:
    product = np.ones(shape)
    for k, mat in enumerate(mats):
        if k != d:
            product = product * mat
    return product


def _replace_factor(state: ALSState, d: int, factor: np.ndarray):
    state.weights = state.weights.with_factor(d, factor)
    factor = state.weights.factors[d]
    state.grams[d] = factor.T @ factor
    if state.projections is not None:
        state.projections[d] = state.features[d] @ factor


def _refresh_caches(state: ALSState):
    state.grams = factor_grams(state.weights)
    if state.features is not None:
        state.projections = [z @ f for z, f in zip(state.features, state.weights.factors)]


def set_weights(state: ALSState, weights: CPDWeights) -> ALSState:
    """Swap in new factors (e.g. a warm start) and rebuild every cache"""
    current = state.weights
    if (weights.dims, weights.m_hat, weights.rank) != (current.dims, current.m_hat, current.rank):
        raise ShapeMismatchError(
            f"weights (D={weights.dims}, m_hat={weights.m_hat}, R={weights.rank}) do not match state "
            f"(D={current.dims}, m_hat={current.m_hat}, R={current.rank})"
        )
    state.weights = weights
    _refresh_caches(state)
    return state


def init_state(X: np.ndarray, y: np.ndarray, cfg: TrainConfig, feature_config: FeatureConfig) -> ALSState:
    """Validate inputs, draw the initial CPD and build the caches"""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)

    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise InvalidParameterError(f"training data must be a non-empty N x D matrix, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ShapeMismatchError(f"expected {X.shape[0]} targets, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InvalidParameterError("targets contain non-finite values")
    if X.shape[1] != feature_config.dims:
        raise ShapeMismatchError(f"data has {X.shape[1]} columns, feature config has {feature_config.dims} dims")
    if cfg.m_hat != feature_config.m_hat:
        raise InvalidParameterError(f"train m_hat {cfg.m_hat} != feature m_hat {feature_config.m_hat}")

    weights = init_random(cfg.m_hat, X.shape[1], cfg.rank, cfg.seed)
    state = ALSState(
        weights=weights,
        X=X,
        feature_config=feature_config,
        grams=factor_grams(weights),
        chunk_size=cfg.chunk_size,
        workers=cfg.workers,
    )
    if cfg.memory_mode == MemoryMode.CACHED:
        state.features = [feature_matrix(X[:, d], d, feature_config) for d in range(X.shape[1])]
        _refresh_caches(state)

    state.initial_loss = objective(state, y, cfg.lambda_reg)
    return state


# ==========================================================================
# Objective and subproblem pieces
# ==========================================================================

def objective(state: ALSState, y: np.ndarray, lambda_reg: float) -> float:
    """Regularized squared loss from projections and Grams only"""
    y = np.asarray(y, dtype=float)
    data_term = 0.0
    for rows in _chunks(state.n_samples, state.chunk_size):
        projected = _row_projections(state, rows)
        predictions = _hadamard_except(projected, -1, (rows.stop - rows.start, state.weights.rank)).sum(axis=1)
        residual = y[rows] - predictions
        data_term += float(residual @ residual)

    rank = state.weights.rank
    reg_term = float(_hadamard_except(state.grams, -1, (rank, rank)).sum())
    return data_term + lambda_reg * reg_term


def build_g_row(d: int, n: int, state: ALSState, z_nd: np.ndarray) -> np.ndarray:
    """Row of G for sample n; entry i + r*m_hat is z_nd[i] * q_n[r]"""
    projected = _row_projections(state, slice(n, n + 1), skip=d)
    q = _hadamard_except(projected, d, (1, state.weights.rank))[0]
    return np.outer(q, np.asarray(z_nd, dtype=float)).reshape(-1)


def build_regularizer(d: int, state: ALSState, reg_mode: RegMode) -> np.ndarray:
    rank = state.weights.rank
    hadamard = _hadamard_except(state.grams, d, (rank, rank))
    if RegMode(reg_mode) == RegMode.DIAGONAL_ONLY:
        return np.diag(np.diag(hadamard))
    return hadamard


def assemble_normal_equations(
    d: int,
    state: ALSState,
    features_d: Optional[np.ndarray],
    y: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Accumulate A = G^T G and b = G^T y block by block without forming G.

    With several workers the partial sums are computed in a thread pool and
    added in block order, so results do not depend on scheduling.
    """
    m_hat, rank = state.weights.m_hat, state.weights.rank
    y = np.asarray(y, dtype=float)

    def _partial(rows: slice) -> Tuple[np.ndarray, np.ndarray]:
        projected = _row_projections(state, rows, skip=d)
        q = _hadamard_except(projected, d, (rows.stop - rows.start, rank))
        if features_d is not None:
            z = features_d[rows]
        else:
            z = feature_matrix(state.X[rows, d], d, state.feature_config)
        g = (q[:, :, None] * z[:, None, :]).reshape(len(z), rank * m_hat)
        return g.T @ g, g.T @ y[rows]

    A = np.zeros((m_hat * rank, m_hat * rank))
    b = np.zeros(m_hat * rank)
    blocks = list(_chunks(state.n_samples, state.chunk_size))

    if state.workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=state.workers) as executor:
            for part_a, part_b in executor.map(_partial, blocks):
                A += part_a
                b += part_b
    else:
        for rows in blocks:
            part_a, part_b = _partial(rows)
            A += part_a
            b += part_b
    return A, b


def jitter_schedule(jitter: float) -> List[float]:
    schedule = [jitter]
    while len(schedule) < MAX_JITTER_ATTEMPTS:
        nxt = max(schedule[-1] * 10.0, JITTER_FLOOR)
        if nxt > JITTER_CEILING * (1 + 1e-9):
            break
        schedule.append(nxt)
    return schedule


def cholesky_solve(lhs: np.ndarray, rhs: np.ndarray, jitter: float) -> np.ndarray:
    """Solve a symmetric system by Cholesky, escalating diagonal jitter on failure"""
    if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs))):
        raise NumericalFailureError("normal equations contain non-finite entries", jitter=jitter)

    eye = np.eye(lhs.shape[0])
    attempted = jitter
    for attempted in jitter_schedule(jitter):
        try:
            factor = cho_factor(lhs + attempted * eye, lower=True, check_finite=False)
            return cho_solve(factor, rhs, check_finite=False)
        except LinAlgError:
            logger.warning(f"Cholesky failed with jitter {attempted:g}, escalating")
    raise NumericalFailureError("normal equations are not positive definite", jitter=attempted)


def solve_factor(
    d: int,
    state: ALSState,
    features_d: Optional[np.ndarray],
    y: np.ndarray,
    lambda_reg: float,
    reg_mode: RegMode,
    jitter: float,
) -> np.ndarray:
    """New m_hat x R factor minimizing the objective with all other factors fixed"""
    m_hat, rank = state.weights.m_hat, state.weights.rank
    A, b = assemble_normal_equations(d, state, features_d, y)
    H = build_regularizer(d, state, reg_mode)
    lhs = A + lambda_reg * np.kron(H, np.eye(m_hat))
    solution = cholesky_solve(lhs, b, jitter)
    return solution.reshape((m_hat, rank), order="F")


def subproblem_gradient(
    d: int,
    state: ALSState,
    features_d: Optional[np.ndarray],
    y: np.ndarray,
    lambda_reg: float,
) -> np.ndarray:
    """Gradient of the objective w.r.t. vec(W^(d)) at the current weights"""
    m_hat = state.weights.m_hat
    A, b = assemble_normal_equations(d, state, features_d, y)
    H = build_regularizer(d, state, RegMode.FULL_HADAMARD)
    w = state.weights.factors[d].reshape(-1, order="F")
    return 2.0 * (A @ w - b + lambda_reg * np.kron(H, np.eye(m_hat)) @ w)


# ==========================================================================
# Sweeps
# ==========================================================================

def sweep_order(dims: int) -> List[int]:
    """0..D-1 then back to 0, without repeating D-1 at the turn"""
    return list(range(dims)) + list(range(dims - 2, -1, -1))


def sweep(state: ALSState, y: np.ndarray, cfg: TrainConfig) -> ALSState:
    for d in sweep_order(state.dims):
        features_d = state.features[d] if state.features is not None else None
        factor = solve_factor(d, state, features_d, y, cfg.lambda_reg, cfg.reg_mode, cfg.jitter)
        _replace_factor(state, d, factor)

        if cfg.capture_trace:
            loss = objective(state, y, cfg.lambda_reg)
            state.loss_trace.append(loss)
            logger.debug(f"Sweep {state.sweep_count + 1}, factor {d}: objective {loss:.6e}")

    if cfg.equilibrate:
        set_weights(state, equilibrate(state.weights))

    state.sweep_count += 1
    return state


SweepCallback = Callable[[int, ALSState], None]


def train_state(
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    feature_config: FeatureConfig,
    callback: Optional[SweepCallback] = None,
) -> ALSState:
    state = init_state(X, y, cfg, feature_config)
    logger.info(
        f"Training CPD rank {cfg.rank}, m_hat {cfg.m_hat} on N={state.n_samples}, D={state.dims} "
        f"({cfg.sweeps} sweeps, {RegMode(cfg.reg_mode).value}, {MemoryMode(cfg.memory_mode).value})"
    )
    logger.debug(f"Initial objective {state.initial_loss:.6e}")

    for index in range(cfg.sweeps):
        sweep(state, y, cfg)
        if state.loss_trace:
            logger.info(f"Sweep {index + 1}/{cfg.sweeps}: objective {state.loss_trace[-1]:.6e}")
        if callback is not None:
            callback(index, state)
    return state


def train(
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    feature_config: FeatureConfig,
    callback: Optional[SweepCallback] = None,
) -> Tuple[CPDWeights, List[float]]:
    """
    Run cfg.sweeps ALS sweeps from init_random(cfg.seed).

    Args:
        X: Inputs already scaled into the feature domain
        y: Standardized regression targets or +-1 labels
        cfg: Training hyperparameters
        feature_config: Feature map matching cfg.m_hat and X's columns
        callback: Called as callback(sweep_index, state) after each sweep

    Returns:
        Final weights and the per-update objective trace
    """
    state = train_state(X, y, cfg, feature_config, callback)
    return state.weights, list(state.loss_trace)


def normalized_trace(trace: Sequence[float]) -> np.ndarray:
    """Trace divided by its first value; an all-zero start stays unnormalized"""
    values = np.asarray(trace, dtype=float)
    if values.size == 0 or values[0] == 0:
        return values.copy()
    return values / values[0]
