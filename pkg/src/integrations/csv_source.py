"""
CSV ingestion and export via pandas (UTF-8, comma separated, '.' decimals)
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..core.data import Dataset
from ..core.errors import DataError, DataParseError, MissingColumnError

logger = logging.getLogger(__name__)


def _resolve_target(columns: Sequence[Any], target_column: Union[str, int], has_header: bool) -> int:
    columns = list(columns)
    if isinstance(target_column, str):
        if has_header and target_column in columns:
            return columns.index(target_column)
        if target_column.lstrip("-").isdigit():
            target_column = int(target_column)
        else:
            raise MissingColumnError(f"Target column '{target_column}' not in {columns}")

    index = int(target_column)
    if index < 0:
        index += len(columns)
    if not 0 <= index < len(columns):
        raise MissingColumnError(f"Target column index {target_column} out of range for {len(columns)} columns")
    return index


def _read_numeric(path: Path, has_header: bool) -> Tuple[np.ndarray, List[Any]]:
    if not path.is_file():
        raise DataError(f"Data file not found: {path}")

    try:
        frame = pd.read_csv(
            path,
            header=0 if has_header else None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{path} is empty") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot parse {path}: {e}") from e

    # Blank lines are read as rows and dropped here, so the frame index still
    # counts physical lines: index i sits on file line i + 1 + header
    first_line = 2 if has_header else 1
    frame = frame.fillna("")
    if frame.shape[0]:
        blank = frame.apply(lambda col: col.str.strip() == "").all(axis=1)
        frame = frame[~blank.to_numpy(dtype=bool)]
    if frame.shape[0] == 0:
        raise DataError(f"{path} has no data rows")

    numeric = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    values = numeric.to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = map(int, np.argwhere(bad)[0])
        line = int(frame.index[row]) + first_line
        cell = str(frame.iat[row, col]).strip()
        parsed = numeric.iat[row, col]
        reason = "non-finite value" if not pd.isna(parsed) or cell.lower() == "nan" else "non-numeric value"
        raise DataParseError(f"{reason} {cell!r} in column {frame.columns[col]!r}", line=line)

    return values, list(frame.columns)


def load_csv(path: Union[str, Path], target_column: Union[str, int], has_header: bool = True) -> Dataset:
    """
    Load a numeric CSV into a Dataset.

    Args:
        path: CSV file
        target_column: Column name, or zero-based index (also as a digit string)
        has_header: Whether the first line holds column names

    Returns:
        Dataset with the target split off and the remaining columns as inputs
    """
    path = Path(path)
    values, columns = _read_numeric(path, has_header)
    if len(columns) < 2:
        raise DataError(f"{path} needs at least one input column and a target column")

    target = _resolve_target(columns, target_column, has_header)
    inputs = [c for c in range(len(columns)) if c != target]
    names = [str(columns[c]) for c in inputs] if has_header else None

    dataset = Dataset(values[:, inputs], values[:, target], names)
    logger.info(f"Loaded {dataset.n_samples} rows x {dataset.dims} inputs from {path}")
    return dataset


def load_inputs(
    path: Union[str, Path],
    has_header: bool = True,
    drop_column: Optional[Union[str, int]] = None,
) -> np.ndarray:
    """Input matrix of a CSV, optionally without a target column"""
    path = Path(path)
    values, columns = _read_numeric(path, has_header)
    if drop_column is not None:
        dropped = _resolve_target(columns, drop_column, has_header)
        values = np.delete(values, dropped, axis=1)
    logger.info(f"Loaded {values.shape[0]} rows x {values.shape[1]} inputs from {path}")
    return values


def save_csv(dataset: Dataset, path: Union[str, Path], target_name: str = "y"):
    names = dataset.column_names or [f"x{d}" for d in range(dataset.dims)]
    frame = pd.DataFrame(dataset.X, columns=names)
    frame[target_name] = dataset.y
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {dataset.n_samples} rows to {path}")


def write_table(path: Union[str, Path], records: List[Dict[str, Any]]):
    """Write a list of flat records as a CSV with a header row"""
    pd.DataFrame.from_records(records).to_csv(path, index=False)
    logger.info(f"Wrote {len(records)} row(s) to {path}")
