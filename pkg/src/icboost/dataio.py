"""CSV ingestion and report writers.

CSVs are comma-separated UTF-8 with a header row and '.' as the decimal
separator. Every cell must parse as a finite number; violations are
reported with their line and column coordinates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass
class CsvDataset:
    feature_names: list[str]
    X: np.ndarray
    y: np.ndarray | None = None
    target_name: str | None = None


def read_csv_dataset(path, target: str | None = None) -> CsvDataset:
    """Load a numeric CSV; ``target`` names the response column to split off."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [name.strip() for name in header]
        if target is not None and target not in header:
            raise DataError(f"{path}: target column {target!r} not in header {header}")
        n_cols = len(header)
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != n_cols:
                raise DataError(
                    f"{path}: line {line_no}: expected {n_cols} columns, found {len(row)}"
                )
            values = []
            for col, cell in enumerate(row):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: line {line_no}, column {col + 1} "
                        f"({header[col]!r}): not numeric: {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise DataError(
                        f"{path}: line {line_no}, column {col + 1} "
                        f"({header[col]!r}): non-finite value {cell!r}"
                    )
                values.append(value)
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    matrix = np.asarray(rows, dtype=np.float64)
    if target is None:
        return CsvDataset(feature_names=header, X=matrix)
    t = header.index(target)
    X = np.delete(matrix, t, axis=1)
    names = header[:t] + header[t + 1 :]
    return CsvDataset(feature_names=names, X=X, y=matrix[:, t], target_name=target)


def write_predictions_csv(path, values: np.ndarray) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prediction"])
        for v in values:
            writer.writerow([repr(float(v))])


def write_training_log_csv(path, records) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "leaves", "train_loss", "gen_loss"])
        for r in records:
            writer.writerow(
                [r.iteration, r.n_leaves, repr(r.train_loss), repr(r.gen_loss)]
            )


def write_importance_csv(path, names: list[str], raw: np.ndarray, share: np.ndarray) -> None:
    """Importance rows sorted by descending share; zero features included."""
    order = np.argsort(-share, kind="stable")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "raw", "share"])
        for j in order:
            writer.writerow([names[j], repr(float(raw[j])), repr(float(share[j]))])


def write_histogram_csv(path, u: np.ndarray, bins: int = 20) -> None:
    counts, edges = np.histogram(u, bins=bins, range=(0.0, 1.0))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "count"])
        for k in range(bins):
            writer.writerow([repr(float(edges[k])), repr(float(edges[k + 1])), int(counts[k])])
