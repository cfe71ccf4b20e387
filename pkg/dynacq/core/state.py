"""
Observed-set state of a single instance during acquisition.

The state is a value: every operation returns a new ObservedState, so
episode traces can keep every intermediate state.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import AlreadyObserved, IndexOutOfRange, DimensionMismatch


@dataclass(frozen=True)
class ObservedState:
    """
    Observed index set ``o`` with values ``x_o`` over a ``dim``-dimensional instance.

    Attributes:
        dim: Number of coordinates of the instance
        observed: Observed indices, in acquisition order
        values: Values aligned with ``observed``
    """

    dim: int
    observed: Tuple[int, ...] = ()
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.dim < 0:
            raise IndexOutOfRange(f"dim must be non-negative, got {self.dim}")
        if len(self.values) != len(self.observed):
            raise DimensionMismatch(
                f"{len(self.values)} values for {len(self.observed)} observed indices"
            )
        if len(set(self.observed)) != len(self.observed):
            raise AlreadyObserved(f"duplicate observed indices: {self.observed}")
        for i in self.observed:
            if not 0 <= i < self.dim:
                raise IndexOutOfRange(f"index {i} outside [0, {self.dim})")

    @classmethod
    def empty(cls, dim: int) -> "ObservedState":
        return cls(dim=dim)

    @property
    def unobserved(self) -> Tuple[int, ...]:
        seen = set(self.observed)
        return tuple(i for i in range(self.dim) if i not in seen)

    @property
    def x_o(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def max_observed(self) -> int:
        # max(∅) = -1 keeps the chronological prior defined at the first step
        return max(self.observed) if self.observed else -1

    def is_observed(self, i: int) -> bool:
        return i in self.observed

    def acquire(self, i: int, value: float) -> "ObservedState":
        """Return a new state with feature ``i`` observed at ``value``."""
        if not 0 <= i < self.dim:
            raise IndexOutOfRange(f"index {i} outside [0, {self.dim})")
        if i in self.observed:
            raise AlreadyObserved(f"feature {i} is already observed")
        return ObservedState(
            dim=self.dim,
            observed=self.observed + (int(i),),
            values=self.values + (float(value),),
        )

    def acquire_many(self, indices, values) -> "ObservedState":
        state = self
        for i, v in zip(indices, values):
            state = state.acquire(i, v)
        return state


def acquire(state: ObservedState, i: int, v: float) -> ObservedState:
    """Functional form of ObservedState.acquire."""
    return state.acquire(i, v)
