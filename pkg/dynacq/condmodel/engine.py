"""
Engine selection and the fitted-engine wrapper used by every consumer.

A FittedEngine bundles the density with the task it was fitted for, the
normalization statistics of its training split and display names, so
acquisition, structure learning and the CLI never need to know which
density family sits underneath.
"""

import logging
import re
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.dataset import Classification, Dataset, MinMaxStats, Regression, TaskKind
from ..core.errors import ConfigError, TargetObserved
from .classcond import ClassConditionalModel, class_posterior, fit_class_conditional
from .conditional import ConditionalDistribution, condition
from .gaussian import GaussianParams, fit_gaussian
from .mixture import MixtureModel, fit_mixture_em

logger = logging.getLogger(__name__)

_ENGINE_PATTERN = re.compile(r"^\s*(gaussian|class_conditional|mixture)\s*(?:\(\s*(\d+)\s*\))?\s*$")


@dataclass(frozen=True)
class EngineChoice:
    """Density family plus component count."""
    kind: Literal["gaussian", "class_conditional", "mixture"]
    components: int = 1

    def __str__(self) -> str:
        if self.kind == "gaussian":
            return "gaussian"
        return f"{self.kind}({self.components})"


def parse_engine(text: str) -> EngineChoice:
    """
    Parse ``gaussian``, ``class_conditional(m)`` or ``mixture(m)``.

    Raises:
        ConfigError: On any other spelling, or m < 1
    """
    match = _ENGINE_PATTERN.match(text or "")
    if not match:
        raise ConfigError(f"unknown engine {text!r}; expected gaussian, class_conditional(m) or mixture(m)")
    kind, m = match.group(1), match.group(2)
    if kind == "gaussian":
        if m is not None:
            raise ConfigError("the gaussian engine takes no component count")
        return EngineChoice(kind="gaussian")
    components = int(m) if m is not None else 1
    if components < 1:
        raise ConfigError(f"component count must be at least 1, got {components}")
    return EngineChoice(kind=kind, components=components)


Density = Union[ClassConditionalModel, GaussianParams, MixtureModel]


@dataclass(frozen=True, eq=False)
class FittedEngine:
    """
    A fitted density with its task context.

    Attributes:
        task: Classification or Regression
        choice: Engine family that produced ``model``
        model: ClassConditionalModel (classification) or a joint density over [x; y]
        feature_names: Column names of the modelled rows
        class_names: Original label values (classification only)
        normalization: Min-max statistics of the training split, if applied
    """

    task: TaskKind
    choice: EngineChoice
    model: Density
    feature_names: Tuple[str, ...]
    class_names: Optional[Tuple[str, ...]] = None
    normalization: Optional[MinMaxStats] = None

    @property
    def is_classification(self) -> bool:
        return isinstance(self.task, Classification)

    @property
    def dim(self) -> int:
        """Number of modelled columns (including a regression target)."""
        return self.model.dim

    @property
    def target_index(self) -> Optional[int]:
        return self.task.target_index if isinstance(self.task, Regression) else None

    @property
    def feature_indices(self) -> Tuple[int, ...]:
        """Columns that acquisition may query."""
        return tuple(i for i in range(self.dim) if i != self.target_index)

    @property
    def num_classes(self) -> int:
        return self.task.num_classes if self.is_classification else 0

    def feature_name(self, i: int) -> str:
        return self.feature_names[i] if i < len(self.feature_names) else f"x{i}"

    def class_posterior(self, x_o, o: Sequence[int]) -> np.ndarray:
        """P(y | x_o); classification engines only."""
        return class_posterior(self.model, x_o, o)

    def target_given_obs(self, x_o, o: Sequence[int]) -> ConditionalDistribution:
        """p(y | x_o); regression engines only."""
        if self.target_index in set(o):
            raise TargetObserved("the regression target cannot be observed")
        return condition(self.model, x_o, o, (self.target_index,))


def fit_engine(train: Dataset, choice: EngineChoice, seed: int = 0) -> FittedEngine:
    """
    Fit the engine family ``choice`` to a training split.

    Classification accepts ``gaussian`` (one Gaussian per class) and
    ``class_conditional(m)``; regression accepts ``gaussian`` and
    ``mixture(m)`` fitted jointly over [x; y].

    Raises:
        ConfigError: If the family does not fit the task
    """
    if isinstance(train.task, Classification):
        if choice.kind == "mixture":
            raise ConfigError("classification uses gaussian or class_conditional(m), not mixture(m)")
        m = choice.components if choice.kind == "class_conditional" else 1
        model: Density = fit_class_conditional(train, m=m, seed=seed)
    else:
        if choice.kind == "class_conditional":
            raise ConfigError("regression uses gaussian or mixture(m), not class_conditional(m)")
        if choice.kind == "gaussian":
            model = fit_gaussian(train)
        else:
            model = fit_mixture_em(train, choice.components, seed=seed)

    logger.info(f"Fitted {choice} engine for {train.task.kind} on {train.n} rows x {train.dim} columns")
    return FittedEngine(
        task=train.task,
        choice=choice,
        model=model,
        feature_names=train.names(),
        class_names=train.class_names,
        normalization=train.normalization,
    )
