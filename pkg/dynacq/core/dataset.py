"""
Datasets, task kinds, splitting and min-max normalization.

Regression targets live inside the row matrix (one column is y); class
labels live next to it in ``labels``.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatch, InvalidRatios, TooFewRows, DataError

logger = logging.getLogger(__name__)


# ========================================
# Task kinds
# ========================================

@dataclass(frozen=True)
class Classification:
    """Discrete target with ``num_classes`` classes."""
    num_classes: int

    def __post_init__(self):
        if self.num_classes < 2:
            raise DataError(f"classification needs at least 2 classes, got {self.num_classes}")

    @property
    def kind(self) -> str:
        return "classification"


@dataclass(frozen=True)
class Regression:
    """Real-valued target stored as column ``target_index`` of the rows."""
    target_index: int

    @property
    def kind(self) -> str:
        return "regression"


TaskKind = Union[Classification, Regression]


# ========================================
# Normalization
# ========================================

@dataclass(frozen=True, eq=False)
class MinMaxStats:
    """Per-column minimum and maximum, computed on a training split."""
    mins: np.ndarray
    maxs: np.ndarray

    @property
    def ranges(self) -> np.ndarray:
        return self.maxs - self.mins

    def transform(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        span = self.ranges
        safe = np.where(span > 0, span, 1.0)
        out = (rows - self.mins) / safe
        # Constant columns map to 0
        return np.where(span > 0, out, 0.0)

    def transform_value(self, column: int, value: float) -> float:
        span = self.maxs[column] - self.mins[column]
        if span <= 0:
            return 0.0
        return float((value - self.mins[column]) / span)

    def inverse_value(self, column: int, value: float) -> float:
        return float(self.mins[column] + value * (self.maxs[column] - self.mins[column]))


# ========================================
# Dataset
# ========================================

@dataclass(frozen=True, eq=False)
class Dataset:
    """
    A rectangular real dataset.

    Attributes:
        rows: n x d matrix (for regression, one column holds y)
        task: Classification or Regression
        labels: per-row class index for classification, None for regression
        feature_names: optional column names
        class_names: optional original label values, index-aligned with classes
    """

    rows: np.ndarray
    task: TaskKind
    labels: Optional[np.ndarray] = None
    feature_names: Optional[Tuple[str, ...]] = None
    class_names: Optional[Tuple[str, ...]] = None
    normalization: Optional[MinMaxStats] = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise DimensionMismatch(f"rows must be a 2-D matrix, got shape {rows.shape}")
        object.__setattr__(self, "rows", rows)

        if isinstance(self.task, Classification):
            if self.labels is None:
                raise DataError("classification dataset requires labels")
            labels = np.asarray(self.labels, dtype=int)
            if labels.shape != (rows.shape[0],):
                raise DimensionMismatch(f"{labels.shape[0]} labels for {rows.shape[0]} rows")
            if labels.size and (labels.min() < 0 or labels.max() >= self.task.num_classes):
                raise DataError(f"labels must lie in [0, {self.task.num_classes})")
            object.__setattr__(self, "labels", labels)
        else:
            if not 0 <= self.task.target_index < rows.shape[1]:
                raise DataError(f"target column {self.task.target_index} outside the rows")

        if self.feature_names is not None and len(self.feature_names) != rows.shape[1]:
            raise DimensionMismatch(
                f"{len(self.feature_names)} names for {rows.shape[1]} columns"
            )

    # ----------------------------------------
    # Shape helpers
    # ----------------------------------------

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def feature_indices(self) -> Tuple[int, ...]:
        """Columns that can be acquired (every column except a regression target)."""
        if isinstance(self.task, Regression):
            return tuple(i for i in range(self.dim) if i != self.task.target_index)
        return tuple(range(self.dim))

    @property
    def num_features(self) -> int:
        return len(self.feature_indices)

    @property
    def targets(self) -> np.ndarray:
        if isinstance(self.task, Classification):
            return self.labels
        return self.rows[:, self.task.target_index]

    def names(self) -> Tuple[str, ...]:
        if self.feature_names is not None:
            return self.feature_names
        return tuple(f"x{i}" for i in range(self.dim))

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return replace(
            self,
            rows=self.rows[idx],
            labels=None if self.labels is None else self.labels[idx],
        )


# ========================================
# Normalization helpers
# ========================================

def fit_normalizer(train: Dataset) -> MinMaxStats:
    """Compute min-max statistics on a (training) dataset."""
    return MinMaxStats(mins=train.rows.min(axis=0), maxs=train.rows.max(axis=0))


def apply_normalizer(ds: Dataset, stats: MinMaxStats) -> Dataset:
    """Map every column through ``stats``; the regression target is included."""
    if stats.mins.shape[0] != ds.dim:
        raise DimensionMismatch(f"stats cover {stats.mins.shape[0]} columns, data has {ds.dim}")
    return replace(ds, rows=stats.transform(ds.rows), normalization=stats)


def normalize(ds: Dataset) -> Dataset:
    """Normalize a dataset with its own statistics (idempotent)."""
    return apply_normalizer(ds, fit_normalizer(ds))


# ========================================
# Splitting
# ========================================

def split(
    ds: Dataset,
    ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> Tuple[Dataset, Dataset, Dataset]:
    """
    Partition rows into train / validation / test.

    Args:
        ds: Dataset to split
        ratios: Fractions for the three parts, summing to 1
        seed: Seed of the row permutation

    Returns:
        (train, val, test) datasets over disjoint, exhaustive row sets

    Raises:
        TooFewRows: If the dataset has fewer than 10 rows
        InvalidRatios: If the ratios do not sum to 1
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidRatios(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    if ds.n < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {ds.n}")

    train_idx, val_idx, test_idx = split_indices(ds.n, ratios, seed)
    logger.debug(f"Split {ds.n} rows into {len(train_idx)}/{len(val_idx)}/{len(test_idx)}")
    return ds.subset(train_idx), ds.subset(val_idx), ds.subset(test_idx)


def split_indices(n: int, ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Row indices of the train / validation / test parts (floor sizes, test takes the rest)."""
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(n * ratios[0] + 1e-9))
    n_val = int(np.floor(n * ratios[1] + 1e-9))
    return order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:]
