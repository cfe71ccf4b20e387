"""
Core data model shared by every other package.

Observed sets, datasets, task kinds and the exception hierarchy.
"""

from .errors import (
    DynAcqError,
    ConfigError,
    DataError,
    NumericError,
    StateError,
)
from .state import ObservedState, acquire
from .dataset import (
    Classification,
    Regression,
    TaskKind,
    Dataset,
    MinMaxStats,
    split,
    fit_normalizer,
    apply_normalizer,
    normalize,
)

__all__ = [
    "DynAcqError",
    "ConfigError",
    "DataError",
    "NumericError",
    "StateError",
    "ObservedState",
    "acquire",
    "Classification",
    "Regression",
    "TaskKind",
    "Dataset",
    "MinMaxStats",
    "split",
    "fit_normalizer",
    "apply_normalizer",
    "normalize",
]
