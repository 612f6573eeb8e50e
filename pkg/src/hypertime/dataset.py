"""Time-indexed supervised datasets and their CSV format."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

REGRESSION = "regression"
BINARY = "binary_classification"
TASKS = (REGRESSION, BINARY)


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    """Rows sorted by timestamp, with the original row ids kept as provenance.

    ``row_ids`` never changes under :meth:`subset`, so any pipeline stage can
    be audited for which source rows it touched.
    """

    timestamps: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    task: str = REGRESSION
    row_ids: np.ndarray | None = None
    feature_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        ts = np.asarray(self.timestamps, dtype=float).ravel()
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float).ravel()
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        n = ts.shape[0]
        if n == 0:
            raise DatasetError("dataset is empty")
        if X.shape[0] != n or y.shape[0] != n:
            raise DatasetError(
                f"row count mismatch: {n} timestamps, {X.shape[0]} feature rows, {y.shape[0]} labels"
            )
        if self.task not in TASKS:
            raise DatasetError(f"unknown task {self.task!r}")
        if self.task == BINARY and not np.all((y == 0) | (y == 1)):
            raise DatasetError("binary_classification labels must be 0 or 1")
        if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DatasetError("dataset contains non-finite values")
        ids = np.arange(n) if self.row_ids is None else np.asarray(self.row_ids, dtype=int).ravel()
        if ids.shape[0] != n:
            raise DatasetError("row_ids length mismatch")
        # stable sort: equal timestamps keep their incoming order
        order = np.argsort(ts, kind="stable")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DatasetError("feature_names length mismatch")
        for attr, value in (
            ("timestamps", ts[order]),
            ("features", X[order]),
            ("labels", y[order]),
            ("row_ids", ids[order]),
            ("feature_names", names),
        ):
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, attr, value)

    def __len__(self) -> int:
        return int(self.timestamps.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: Sequence[int] | np.ndarray) -> "TimeSeriesDataset":
        """Rows at the given positions, re-sorted by timestamp."""
        idx = np.sort(np.asarray(indices, dtype=int))
        return TimeSeriesDataset(
            self.timestamps[idx],
            self.features[idx],
            self.labels[idx],
            task=self.task,
            row_ids=self.row_ids[idx],
            feature_names=self.feature_names,
        )


def read_csv(path: str | Path, label_column: str = "label", task: str = REGRESSION) -> TimeSeriesDataset:
    """Load a dataset CSV.

    The header must contain ``timestamp`` and the label column; every other
    column is read as a real-valued feature, in header order. Any malformed
    row raises :class:`DatasetError` naming its line number.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if "timestamp" not in header:
            raise DatasetError(f"{path}: missing required column 'timestamp'")
        if label_column not in header:
            raise DatasetError(f"{path}: missing label column {label_column!r}")
        if len(set(header)) != len(header):
            raise DatasetError(f"{path}: duplicate column names")
        t_col = header.index("timestamp")
        y_col = header.index(label_column)
        f_cols = [i for i in range(len(header)) if i not in (t_col, y_col)]
        ts, X, y = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from None
            if not all(math.isfinite(v) for v in vals):
                raise DatasetError(f"{path}:{lineno}: non-finite value")
            ts.append(vals[t_col])
            y.append(vals[y_col])
            X.append([vals[i] for i in f_cols])
    if not ts:
        raise DatasetError(f"{path}: no data rows")
    return TimeSeriesDataset(
        np.array(ts),
        np.array(X, dtype=float).reshape(len(ts), len(f_cols)),
        np.array(y),
        task=task,
        feature_names=tuple(header[i] for i in f_cols),
    )


def write_csv(dataset: TimeSeriesDataset, path: str | Path, label_column: str = "label") -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", *dataset.feature_names, label_column])
        for t, x, y in zip(dataset.timestamps, dataset.features, dataset.labels):
            writer.writerow([_fmt(t), *(_fmt(v) for v in x), _fmt(y)])


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
