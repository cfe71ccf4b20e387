"""
Acquisition policies and stopping rules.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

from ..core.errors import ConfigError


# ========================================
# Policies
# ========================================

@dataclass(frozen=True)
class DynamicPolicy:
    """Per-instance greedy choice by CMI."""

    @property
    def name(self) -> str:
        return "dfa"


@dataclass(frozen=True)
class StaticPolicy:
    """One fixed acquisition order for every instance."""
    order: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if len(set(self.order)) != len(self.order):
            raise ConfigError(f"static order repeats a feature: {self.order}")

    @property
    def name(self) -> str:
        return "sfa"

    def check_permutation(self, features: Sequence[int]) -> None:
        if sorted(self.order) != sorted(features):
            raise ConfigError(f"static order {self.order} is not a permutation of {tuple(features)}")


Policy = Union[DynamicPolicy, StaticPolicy]


# ========================================
# Stopping rules
# ========================================

@dataclass(frozen=True)
class Budget:
    max_acquisitions: int

    def __post_init__(self):
        if self.max_acquisitions < 0:
            raise ConfigError(f"budget must be non-negative, got {self.max_acquisitions}")


@dataclass(frozen=True)
class Confidence:
    """Stop once the max class probability reaches ``threshold`` (classification only)."""
    threshold: float
    max_acquisitions: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"confidence threshold must lie in [0, 1], got {self.threshold}")


@dataclass(frozen=True)
class Exhaustion:
    """Acquire until no candidate remains."""


StoppingRule = Union[Budget, Confidence, Exhaustion]


def acquisition_cap(stop: StoppingRule, num_features: int) -> int:
    """Largest number of acquisitions the rule allows on ``num_features`` features."""
    if isinstance(stop, Budget):
        if stop.max_acquisitions > num_features:
            raise ConfigError(f"budget {stop.max_acquisitions} exceeds the {num_features} acquirable features")
        return stop.max_acquisitions
    if isinstance(stop, Confidence) and stop.max_acquisitions is not None:
        return min(stop.max_acquisitions, num_features)
    return num_features
