"""
Argument parsing and dispatch for the tkrr command line
"""

import sys
import argparse
import logging
from typing import List, Optional

from pydantic import ValidationError

from ..core.errors import CapacityError, DataError, InvalidParameterError, NumericalFailureError
from ..core.settings import Settings, load_settings
from . import commands

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _nonnegative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return value


def _lengthscale(text: str) -> Optional[float]:
    if text.lower() == "auto":
        return None
    return _positive_float(text)


def _fraction(text: str) -> float:
    value = _positive_float(text)
    if value >= 1:
        raise argparse.ArgumentTypeError(f"must be below 1: {text!r}")
    return value


def _add_data_flags(parser: argparse.ArgumentParser, target_required: bool = True):
    parser.add_argument("--data", required=True, help="CSV file")
    parser.add_argument("--target", required=target_required, help="Target column name or zero-based index")
    parser.add_argument("--no-header", action="store_true", help="CSV has no header row")


def _add_model_flags(parser: argparse.ArgumentParser, settings: Settings):
    training = settings.training
    parser.add_argument("--task", choices=["auto", "regression", "classification"], default="auto")
    parser.add_argument("--m-hat", type=_positive_int, help=f"Basis functions per dimension (default {training.m_hat})")
    parser.add_argument("--rank", type=_positive_int, help=f"CP rank (default {training.rank})")
    parser.add_argument("--lambda", dest="lambda_reg", type=_nonnegative_float,
                        help=f"Regularization weight (default {training.lambda_reg:g})")
    parser.add_argument("--lambda-rule", choices=["fixed", "inverse_n"],
                        help="inverse_n uses lambda = 100 / N_train")
    parser.add_argument("--lengthscale", type=_lengthscale, help="Kernel lengthscale or 'auto'")
    parser.add_argument("--margin", type=_positive_float, help=f"Domain margin (default {settings.data.margin:g})")
    parser.add_argument("--sweeps", type=_positive_int, help=f"ALS sweeps (default {training.sweeps})")
    parser.add_argument("--reg-mode", choices=["diagonal_only", "full_hadamard"])
    parser.add_argument("--memory-mode", choices=["cached", "streaming"])
    parser.add_argument("--workers", type=_positive_int, help="Threads for normal-equation assembly")


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tkrr", description="Tensor-Kernel Ridge Regression")
    parser.add_argument("--config", help="YAML defaults file (default config/defaults.yaml or $TKRR_CONFIG)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    train = subparsers.add_parser("train", help="Train a model and save it as JSON")
    _add_data_flags(train)
    _add_model_flags(train, settings)
    train.add_argument("--seed", type=int, help="Initialization seed")
    train.add_argument("--output", required=True, help="Model JSON path")
    train.add_argument("--trace", help="Loss trace CSV path")
    train.add_argument("--holdout", type=_fraction, help="Fraction held out and scored after each sweep")
    train.add_argument("--sweep-metrics", help="Per-sweep held-out metric CSV path")
    train.set_defaults(handler=commands.cmd_train)

    predict = subparsers.add_parser("predict", help="Predict with a saved model")
    _add_data_flags(predict, target_required=False)
    predict.add_argument("--model", required=True, help="Model JSON path")
    predict.add_argument("--output", required=True, help="Predictions CSV path")
    predict.set_defaults(handler=commands.cmd_predict)

    evaluate = subparsers.add_parser("eval", help="MSE or misclassification rate of a saved model")
    _add_data_flags(evaluate)
    evaluate.add_argument("--model", required=True, help="Model JSON path")
    evaluate.add_argument("--output", help="One-row metrics CSV path")
    evaluate.set_defaults(handler=commands.cmd_eval)

    bench = subparsers.add_parser("kernel-bench", help="Deterministic feature kernel error vs m_hat")
    bench.add_argument("--lengthscale", type=_positive_float)
    bench.add_argument("--half-width", type=_positive_float)
    bench.add_argument("--extent", type=_positive_float, help="Grid covers [-extent, extent]")
    bench.add_argument("--m-hat", type=_positive_int, nargs="+")
    bench.add_argument("--grid", type=_positive_int, help="Grid points per axis")
    bench.add_argument("--output", help="CSV path")
    bench.set_defaults(handler=commands.cmd_kernel_bench)

    compare = subparsers.add_parser("compare", help="T-KRR vs RFF vs dual KRR over random splits")
    _add_data_flags(compare)
    _add_model_flags(compare, settings)
    compare.add_argument("--seeds", type=_positive_int, help=f"Number of splits (default {settings.compare.seeds})")
    compare.add_argument("--train-fraction", type=_fraction, help="Training share (0.9; 0.6667 for the 2/3 protocol)")
    compare.add_argument("--dual-cap", type=_positive_int, help="Largest N for dual KRR")
    compare.add_argument("--compare-workers", type=_positive_int, help="Splits run in parallel")
    compare.add_argument("--output", help="Per-split metrics CSV path")
    compare.set_defaults(handler=commands.cmd_compare)

    generate = subparsers.add_parser("generate", help="Write a synthetic dataset")
    generate.add_argument("--kind", choices=["crescents", "bumps"], required=True)
    generate.add_argument("--n", type=_positive_int, required=True)
    generate.add_argument("--dims", type=_positive_int, default=5, help="Input dimension (bumps only)")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--noise", type=_nonnegative_float)
    generate.add_argument("--output", required=True)
    generate.set_defaults(handler=commands.cmd_generate)

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse flags, dispatch, and map errors onto exit codes"""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)

    try:
        settings = load_settings(known.config)
    except InvalidParameterError as e:
        logger.error(f"Bad configuration: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    parser = build_parser(settings)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    try:
        return args.handler(args, settings)
    except (InvalidParameterError, ValidationError) as e:
        return _fail(args.command, "invalid parameter", e, EXIT_USAGE)
    except (DataError, OSError) as e:
        return _fail(args.command, "data error", e, EXIT_DATA)
    except (NumericalFailureError, CapacityError) as e:
        return _fail(args.command, "numerical failure", e, EXIT_NUMERICAL)


def _fail(command: str, kind: str, error: Exception, code: int) -> int:
    logger.error(f"{command} failed ({kind}): {error}")
    print(f"error: {error}", file=sys.stderr)
    return code
