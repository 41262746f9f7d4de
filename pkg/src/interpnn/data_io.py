"""CSV loading, train/test splitting with normalization, and result files.

All floats are serialized with ``repr``, which round-trips float64 exactly,
so writing and re-reading a dataset or rewriting the same results always
produces byte-identical files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import CLASSIFICATION, Dataset
from .simulations import SweepResult, SweepRow

__all__ = [
    "CsvSchema",
    "SplitSpec",
    "NormalizationStats",
    "load_csv",
    "load_features_csv",
    "write_csv",
    "split_normalize",
    "write_results",
    "write_summary",
    "RESULTS_HEADER",
    "SUMMARY_HEADER",
]

RESULTS_HEADER = "n,k,scheme,repetition,metric_name,metric_value,bias_proxy,variance_proxy"
SUMMARY_HEADER = "n,scheme,optimal_k,optimal_metric"

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class CsvSchema:
    """Shape of a data CSV: feature count, optional trailing response column."""

    n_features: int
    has_label: bool = True
    delimiter: str = ","
    header: bool = False

    def __post_init__(self) -> None:
        if self.n_features < 1:
            raise ValueError(f"n_features must be >= 1, got {self.n_features}")
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")


@dataclass(frozen=True)
class SplitSpec:
    """Seeded train/test split with optional feature normalization."""

    test_size: int
    seed: int = 0
    normalize: str = "zscore"

    def __post_init__(self) -> None:
        if self.normalize not in ("zscore", "none"):
            raise ValueError(f"normalize must be 'zscore' or 'none', got {self.normalize!r}")


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature train statistics plus the rows that went to the test side."""

    mean: np.ndarray
    sd: np.ndarray
    constant_columns: np.ndarray
    test_indices: np.ndarray
    applied: bool


def _parse_rows(path, schema: CsvSchema, want_label: bool):
    expected = schema.n_features + (1 if want_label else 0)
    feats: list[list[float]] = []
    labels: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        for lineno, row in enumerate(reader, start=1):
            if schema.header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # blank line
            if len(row) != expected:
                raise ValueError(
                    f"{path}: line {lineno}: expected {expected} fields, got {len(row)}"
                )
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric field") from None
            if not all(math.isfinite(v) for v in values):
                raise ValueError(f"{path}: line {lineno}: non-finite value")
            if want_label:
                feats.append(values[:-1])
                labels.append(values[-1])
            else:
                feats.append(values)
    if not feats:
        raise ValueError(f"{path}: no data rows")
    x = np.array(feats, dtype=np.float64)
    y = np.array(labels, dtype=np.float64) if want_label else None
    return x, y


def load_csv(path, schema: CsvSchema, task: str = CLASSIFICATION) -> Dataset:
    """Parse a data CSV into a Dataset, preserving row order.

    The final column holds the response: for the classification task it
    must be exactly 0 or 1, for regression any finite real.  Malformed
    rows raise an error naming the 1-based line number.
    """
    if not schema.has_label:
        raise ValueError("schema has no label column; use load_features_csv")
    x, y = _parse_rows(path, schema, want_label=True)
    if task == CLASSIFICATION:
        bad = (y != 0.0) & (y != 1.0)
        if bad.any():
            row = int(np.argmax(bad))
            lineno = row + 1 + (1 if schema.header else 0)
            raise ValueError(
                f"{path}: line {lineno}: label must be 0 or 1, got {y[row]!r}"
            )
    return Dataset(x, y, task)


def load_features_csv(path, schema: CsvSchema) -> np.ndarray:
    """Parse a feature-only CSV (no response column) into an (m, d) array."""
    if schema.has_label:
        raise ValueError("schema declares a label column; use load_csv")
    x, _ = _parse_rows(path, schema, want_label=False)
    return x


def _fmt(value: float) -> str:
    return repr(float(value))


def write_csv(dataset: Dataset, path) -> None:
    """Write features plus the response column, one data row per line."""
    lines = []
    for i in range(dataset.n):
        cells = [_fmt(v) for v in dataset.features[i]]
        cells.append(_fmt(dataset.responses[i]))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def split_normalize(dataset: Dataset, split: SplitSpec) -> tuple[Dataset, Dataset, NormalizationStats]:
    """Seeded uniform train/test split with train-only z-scoring.

    Normalization statistics come from the training rows alone and are
    applied to both sides; constant features (zero training variance) pass
    through unscaled and are flagged in the returned stats.  Both parts
    must keep at least 2 rows.
    """
    n = dataset.n
    if not (2 <= split.test_size <= n - 2):
        raise ValueError(
            f"test_size must leave >= 2 rows on each side of {n}, got {split.test_size}"
        )
    rng = np.random.default_rng(split.seed & _MASK64)
    test_idx = np.sort(rng.choice(n, size=split.test_size, replace=False))
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.nonzero(~mask)[0]

    train_x = dataset.features[train_idx].copy()
    test_x = dataset.features[test_idx].copy()
    mean = train_x.mean(axis=0)
    sd = train_x.std(axis=0)
    constant = sd == 0.0
    applied = split.normalize == "zscore"
    if applied:
        scale = np.where(constant, 1.0, sd)
        offset = np.where(constant, 0.0, mean)
        train_x = (train_x - offset) / scale
        test_x = (test_x - offset) / scale
    stats = NormalizationStats(
        mean=mean,
        sd=sd,
        constant_columns=constant,
        test_indices=test_idx,
        applied=applied,
    )
    train = Dataset(train_x, dataset.responses[train_idx], dataset.task)
    test = Dataset(test_x, dataset.responses[test_idx], dataset.task)
    return train, test, stats


def _row_sort_key(row: SweepRow):
    return (row.n, row.scheme, row.k, row.repetition, row.metric_name)


def write_results(result: SweepResult, path) -> None:
    """Write every sweep row, sorted by (n, scheme, k, repetition, metric)."""
    lines = [RESULTS_HEADER]
    for row in sorted(result.rows, key=_row_sort_key):
        lines.append(
            ",".join(
                [
                    str(row.n),
                    str(row.k),
                    row.scheme,
                    str(row.repetition),
                    row.metric_name,
                    _fmt(row.metric_value),
                    "" if row.bias_proxy is None else _fmt(row.bias_proxy),
                    "" if row.variance_proxy is None else _fmt(row.variance_proxy),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_summary(result: SweepResult, path) -> None:
    """Write the per-(n, scheme) optimum of the primary metric."""
    lines = [SUMMARY_HEADER]
    for n, scheme in sorted(result.optimal_k):
        lines.append(
            ",".join(
                [
                    str(n),
                    scheme,
                    str(result.optimal_k[(n, scheme)]),
                    _fmt(result.optimal_metric[(n, scheme)]),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")
