"""
Comparison Workflow - T-KRR against RFF and dual KRR over random splits
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .baselines import DUAL_CAP, KernelParams, krr_dual_fit, krr_dual_predict, rff_ridge_fit, rff_ridge_predict
from .data import Dataset, apply_scaler, destandardize, split, standardize_targets
from .errors import TKRRError
from .features import RFFConfig
from .model import FeatureOverrides, Task, fit, score, task_metric
from .solver import TrainConfig

logger = logging.getLogger(__name__)

METHODS = ("RFF", "T-KRR", "KRR")


class ComparisonWorkflow:
    """
    Runs the three methods on k seeded splits of one dataset.

    All methods share the T-KRR model's preprocessing, lengthscale and lambda;
    RFF gets M_RFF = m_hat * R features. Dual KRR is skipped (reported as None)
    when the training split exceeds `dual_cap` rows.
    """

    def __init__(
        self,
        dataset: Dataset,
        train_config: TrainConfig,
        overrides: Optional[FeatureOverrides] = None,
        train_fraction: float = 0.9,
        dual_cap: int = DUAL_CAP,
        workers: int = 1,
    ):
        self.dataset = dataset
        self.train_config = train_config
        self.overrides = overrides or FeatureOverrides()
        self.train_fraction = train_fraction
        self.dual_cap = dual_cap
        self.workers = workers

        logger.info(
            f"Comparison workflow: N={dataset.n_samples}, D={dataset.dims}, "
            f"m_hat={train_config.m_hat}, R={train_config.rank}, M_RFF={self.rff_features}"
        )

    @property
    def rff_features(self) -> int:
        return self.train_config.m_hat * self.train_config.rank

    def _run_method(self, name: str, seed: int, fn: Callable[[], Optional[float]]) -> Optional[float]:
        try:
            return fn()
        except TKRRError as e:
            logger.error(f"{name} failed on split {seed}: {e}")
            return None

    def process_split(self, seed: int) -> Dict[str, Any]:
        """
        Train and score every method on one split.

        Args:
            seed: Seed of the split permutation and of both random initializations

        Returns:
            Dictionary with 'success', 'seed' and per-method 'metrics'
            (None where a method was skipped or failed); a failed split carries
            'error' and the raised 'exception' instead
        """
        try:
            train, test = split(self.dataset, self.train_fraction, seed)
            cfg = self.train_config.model_copy(update={"seed": seed})
            model, _ = fit(train, cfg, self.overrides)
        except TKRRError as e:
            logger.error(f"Split {seed} failed: {e}")
            return {"success": False, "seed": seed, "error": str(e), "exception": e}

        task = model.task
        lengthscale = model.feature_config.lengthscale
        lambda_reg = model.train_config.lambda_reg
        X_train, _ = apply_scaler(model.scaler, train.X)
        X_test, _ = apply_scaler(model.scaler, test.X)
        if task == Task.REGRESSION:
            y_train, _, _ = standardize_targets(train.y)
        else:
            y_train = train.y
        mean, std = model.scaler.target_mean, model.scaler.target_std

        def _rff() -> float:
            rff = RFFConfig.from_seed(self.rff_features, self.dataset.dims, lengthscale, seed)
            w = rff_ridge_fit(X_train, y_train, rff, lambda_reg)
            return task_metric(task, destandardize(rff_ridge_predict(X_test, w, rff), mean, std), test.y)

        def _krr() -> Optional[float]:
            if train.n_samples > self.dual_cap:
                logger.info(f"Split {seed}: N={train.n_samples} above dual cap {self.dual_cap}, KRR skipped")
                return None
            params = KernelParams(lengthscale=lengthscale)
            alpha = krr_dual_fit(X_train, y_train, params, lambda_reg, self.dual_cap)
            pred = krr_dual_predict(X_train, alpha, X_test, params)
            return task_metric(task, destandardize(pred, mean, std), test.y)

        metrics = {
            "RFF": self._run_method("RFF", seed, _rff),
            "T-KRR": score(model, test),
            "KRR": self._run_method("KRR", seed, _krr),
        }
        return {"success": True, "seed": seed, "task": task.value, "metrics": metrics}

    def run(self, seeds: Sequence[int]) -> Dict[str, Any]:
        """
        Process all splits, in parallel when workers > 1.

        Returns:
            Dictionary with per-split results ordered by seed and a 'summary'
            mapping each method to mean, sample std, median and count
        """
        results: List[Dict[str, Any]] = []

        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            futures = {executor.submit(self.process_split, seed): seed for seed in seeds}
            for future in as_completed(futures):
                result = future.result()
                if result["success"]:
                    logger.info(f"Split {result['seed']} done: {result['metrics']}")
                else:
                    logger.error(f"Split {result['seed']} failed: {result['error']}")
                results.append(result)

        results.sort(key=lambda r: r["seed"])
        succeeded = [r for r in results if r["success"]]
        task = succeeded[0]["task"] if succeeded else None

        return {
            "success": bool(succeeded),
            "task": task,
            "splits": results,
            "summary": {name: summarize([r["metrics"][name] for r in succeeded]) for name in METHODS},
        }


def summarize(values: Sequence[Optional[float]]) -> Optional[Dict[str, float]]:
    """Mean, sample std, median and count of the non-missing values"""
    present = np.array([v for v in values if v is not None], dtype=float)
    if present.size == 0:
        return None
    return {
        "mean": float(present.mean()),
        "std": float(present.std(ddof=1)) if present.size > 1 else 0.0,
        "median": float(np.median(present)),
        "count": int(present.size),
    }
