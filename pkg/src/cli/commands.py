"""
Command handlers - each takes parsed flags plus Settings and returns an exit code
"""

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np

from ..core.baselines import kernel_approximation_errors
from ..core.comparison import METHODS, ComparisonWorkflow
from ..core.data import make_bumps, make_crescents, split
from ..core.model import FeatureOverrides, Task, classify, fit_with_history, predict, score
from ..core.settings import Settings
from ..core.solver import TrainConfig, normalized_trace
from ..integrations import csv_source, model_store

logger = logging.getLogger(__name__)


def _train_config(args: argparse.Namespace, settings: Settings) -> TrainConfig:
    updates = {
        "m_hat": args.m_hat,
        "rank": args.rank,
        "lambda_reg": args.lambda_reg,
        "lambda_rule": args.lambda_rule,
        "sweeps": getattr(args, "sweeps", None),
        "reg_mode": getattr(args, "reg_mode", None),
        "seed": getattr(args, "seed", None),
        "memory_mode": getattr(args, "memory_mode", None),
        "workers": getattr(args, "workers", None),
    }
    merged = settings.training.model_dump()
    merged.update({k: v for k, v in updates.items() if v is not None})
    return TrainConfig.model_validate(merged)


def _overrides(args: argparse.Namespace, settings: Settings) -> FeatureOverrides:
    lengthscale = args.lengthscale
    if lengthscale is None and settings.features.lengthscale != "auto":
        lengthscale = float(settings.features.lengthscale)
    return FeatureOverrides(
        lengthscale=lengthscale,
        margin=args.margin if args.margin is not None else settings.data.margin,
        task=None if args.task == "auto" else Task(args.task),
    )


def _print_table(title: str, header: List[str], rows: List[List[str]]):
    widths = [max(len(str(cell)) for cell in column) for column in zip(header, *rows)]
    print(title)
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    print("  ".join("-" * w for w in widths))
    for row in rows:
        print("  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)))


def _metric_label(task: Task) -> str:
    return "MSE" if task == Task.REGRESSION else "misclassification_rate"


# ==========================================================================
# train / predict / eval
# ==========================================================================

def cmd_train(args: argparse.Namespace, settings: Settings) -> int:
    dataset = csv_source.load_csv(args.data, args.target, not args.no_header)
    cfg = _train_config(args, settings)
    overrides = _overrides(args, settings)

    validation = None
    if args.holdout:
        dataset, validation = split(dataset, 1.0 - args.holdout, cfg.seed)

    result = fit_with_history(dataset, cfg, overrides, validation)
    model = result.model

    tables: List[Tuple[str, List[Dict[str, Any]]]] = []
    if args.trace:
        normalized = normalized_trace(result.loss_trace)
        tables.append((args.trace, [
            {"update_index": i + 1, "raw_loss": raw, "normalized_loss": float(norm)}
            for i, (raw, norm) in enumerate(zip(result.loss_trace, normalized))
        ]))
    if args.sweep_metrics and result.sweep_metrics:
        tables.append((args.sweep_metrics, [
            {"sweep": i + 1, f"heldout_{_metric_label(model.task)}": value}
            for i, value in enumerate(result.sweep_metrics)
        ]))

    # The model file goes last; a failed write removes whatever this run already wrote
    written: List[Path] = []
    try:
        for path, records in tables:
            csv_source.write_table(path, records)
            written.append(Path(path))
        model_store.save(model, args.output)
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise

    rows = [
        ["task", model.task.value],
        ["samples", str(dataset.n_samples)],
        ["lengthscale", f"{model.feature_config.lengthscale:.6g}"],
        ["lambda", f"{model.train_config.lambda_reg:.6g}"],
        ["final objective", f"{result.loss_trace[-1]:.6e}" if result.loss_trace else "n/a"],
        [f"train {_metric_label(model.task)}", f"{score(model, dataset):.6g}"],
    ]
    if result.sweep_metrics:
        rows.append([f"held-out {_metric_label(model.task)}", f"{result.sweep_metrics[-1]:.6g}"])
    _print_table(f"Trained model -> {args.output}", ["metric", "value"], rows)
    return 0


def cmd_predict(args: argparse.Namespace, settings: Settings) -> int:
    model = model_store.load(args.model)
    X = csv_source.load_inputs(args.data, not args.no_header, args.target)

    records: List[Dict[str, Any]] = [{"prediction": float(p)} for p in predict(model, X)]
    if model.task == Task.CLASSIFICATION:
        for record, label in zip(records, classify(model, X)):
            record["label"] = int(label)

    csv_source.write_table(args.output, records)
    print(f"Wrote {len(records)} predictions to {args.output}")
    return 0


def cmd_eval(args: argparse.Namespace, settings: Settings) -> int:
    model = model_store.load(args.model)
    dataset = csv_source.load_csv(args.data, args.target, not args.no_header)

    metric = score(model, dataset)
    label = _metric_label(model.task)
    _print_table(f"Evaluation of {args.model}", ["metric", "value"], [
        ["samples", str(dataset.n_samples)],
        [label, f"{metric:.10g}"],
    ])
    if args.output:
        csv_source.write_table(args.output, [{"task": model.task.value, "n": dataset.n_samples, label: metric}])
    return 0


# ==========================================================================
# Experiments
# ==========================================================================

def cmd_kernel_bench(args: argparse.Namespace, settings: Settings) -> int:
    bench = settings.kernel_bench
    rows = kernel_approximation_errors(
        lengthscale=args.lengthscale or bench.lengthscale,
        half_width=args.half_width or bench.half_width,
        m_hat_values=args.m_hat or bench.m_hat,
        grid=args.grid or bench.grid,
        extent=args.extent or bench.extent,
    )
    _print_table("Kernel approximation error", ["m_hat", "sup_error", "mean_error"], [
        [str(r["m_hat"]), f"{r['sup_error']:.6e}", f"{r['mean_error']:.6e}"] for r in rows
    ])
    if args.output:
        csv_source.write_table(args.output, rows)
    return 0


def cmd_compare(args: argparse.Namespace, settings: Settings) -> int:
    dataset = csv_source.load_csv(args.data, args.target, not args.no_header)
    cfg = _train_config(args, settings)

    workflow = ComparisonWorkflow(
        dataset,
        cfg,
        _overrides(args, settings),
        train_fraction=args.train_fraction or settings.data.train_fraction,
        dual_cap=args.dual_cap or settings.limits.dual_cap,
        workers=args.compare_workers or settings.compare.workers,
    )
    n_seeds = args.seeds or settings.compare.seeds
    outcome = workflow.run(range(n_seeds))
    if not outcome["success"]:
        # Surface the first split's error so it maps onto the usual exit code
        logger.error("Every split failed")
        raise outcome["splits"][0]["exception"]

    task = Task(outcome["task"])
    rows = []
    for name in METHODS:
        stats = outcome["summary"][name]
        if stats is None:
            rows.append([name, "N/A", "N/A"])
        else:
            rows.append([name, f"{stats['mean']:.4f} ± {stats['std']:.4f}", f"{stats['median']:.4f}"])
    _print_table(
        f"{_metric_label(task)} over {n_seeds} splits (m_hat={cfg.m_hat}, R={cfg.rank}, M_RFF={workflow.rff_features})",
        ["method", "mean ± std", "median"],
        rows,
    )

    if args.output:
        records = []
        for split_result in outcome["splits"]:
            if not split_result["success"]:
                continue
            for name in METHODS:
                records.append({"seed": split_result["seed"], "method": name, _metric_label(task): split_result["metrics"][name]})
        csv_source.write_table(args.output, records)
    return 0


def cmd_generate(args: argparse.Namespace, settings: Settings) -> int:
    if args.kind == "crescents":
        dataset = make_crescents(args.n, args.seed, noise=args.noise if args.noise is not None else 0.1)
    else:
        dataset = make_bumps(args.n, args.dims, args.seed, noise=args.noise if args.noise is not None else 0.05)

    output = Path(args.output)
    csv_source.save_csv(dataset, output)
    print(f"Wrote {dataset.n_samples} x {dataset.dims} {args.kind} dataset to {output}")
    return 0
