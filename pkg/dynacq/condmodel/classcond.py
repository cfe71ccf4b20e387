"""
Class-conditional engine: empirical class prior plus one density per class.

Class posteriors follow Bayes' rule and p(x_u | x_o) marginalizes the
class out, so the whole model behaves as a single mixture whose
components carry class labels.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np

from ..core.dataset import Classification, Dataset
from ..core.errors import AlreadyObserved, DataError, DimensionMismatch, InsufficientData
from .conditional import (
    ConditionalDistribution,
    condition,
    group_softmax,
    observed_log_weights,
)
from .gaussian import fit_gaussian
from .mixture import MixtureModel, as_mixture, fit_mixture_em

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ClassConditionalModel:
    """
    P(y) and p(x | y) for K classes.

    Attributes:
        class_prior: (K,) prior on the simplex
        per_class: K mixtures over the d features
    """

    class_prior: np.ndarray
    per_class: Tuple[MixtureModel, ...]

    def __post_init__(self):
        prior = np.asarray(self.class_prior, dtype=float).reshape(-1)
        per_class = tuple(as_mixture(m) for m in self.per_class)
        if prior.shape[0] != len(per_class):
            raise DimensionMismatch(f"{prior.shape[0]} prior entries for {len(per_class)} class models")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-9:
            raise DataError("class prior must be non-negative and sum to 1")
        if len({m.dim for m in per_class}) != 1:
            raise DimensionMismatch("class models disagree on dimension")
        object.__setattr__(self, "class_prior", prior)
        object.__setattr__(self, "per_class", per_class)

    @property
    def num_classes(self) -> int:
        return self.class_prior.shape[0]

    @property
    def dim(self) -> int:
        return self.per_class[0].dim

    @cached_property
    def labelled_mixture(self) -> ConditionalDistribution:
        """Joint p(x) = sum_y P(y) p(x|y) as one mixture with class-labelled components."""
        log_w, means, covs, labels = [], [], [], []
        for c, mix in enumerate(self.per_class):
            with np.errstate(divide="ignore"):
                base = np.log(self.class_prior[c]) + np.log(mix.weights)
            for k, comp in enumerate(mix.components):
                log_w.append(base[k])
                means.append(comp.mean)
                covs.append(comp.cov)
                labels.append(c)
        return ConditionalDistribution(
            indices=tuple(range(self.dim)),
            log_weights=np.array(log_w),
            means=np.stack(means),
            covs=np.stack(covs),
            labels=np.array(labels),
        )


def fit_class_conditional(train: Dataset, m: int = 1, seed: int = 0) -> ClassConditionalModel:
    """
    Fit the empirical class prior and an m-component density per class.

    Args:
        train: Classification training dataset
        m: Components per class (1 gives one Gaussian per class)
        seed: EM seed; class c uses seed + c

    Raises:
        InsufficientData: If a class has too few rows for its density
    """
    if not isinstance(train.task, Classification):
        raise DataError("class-conditional engine requires a classification dataset")
    K = train.task.num_classes
    counts = np.bincount(train.labels, minlength=K)
    if np.any(counts == 0):
        missing = [int(c) for c in np.flatnonzero(counts == 0)]
        raise InsufficientData(f"classes {missing} have no training rows")

    per_class = []
    for c in range(K):
        rows = train.rows[train.labels == c]
        if m == 1:
            per_class.append(as_mixture(fit_gaussian(rows)))
        else:
            per_class.append(fit_mixture_em(rows, m, seed=seed + c))
        logger.debug(f"Fitted class {c} density on {rows.shape[0]} rows")

    prior = counts / counts.sum()
    logger.info(f"Fitted class-conditional engine: K={K}, m={m}, prior={np.round(prior, 4).tolist()}")
    return ClassConditionalModel(class_prior=prior, per_class=tuple(per_class))


def class_posterior(ccm: ClassConditionalModel, x_o, o: Sequence[int]) -> np.ndarray:
    """
    P(y | x_o) by Bayes' rule, softmax over log p(x_o|y) + log P(y).

    With o empty the class prior is returned.
    """
    if len(o) == 0:
        return ccm.class_prior.copy()
    joint = ccm.labelled_mixture
    log_w = observed_log_weights(joint, x_o, o)
    return group_softmax(log_w[None, :], joint.labels, ccm.num_classes)[0]


def joint_given_obs(
    ccm: ClassConditionalModel, targets: Sequence[int], x_o, o: Sequence[int]
) -> ConditionalDistribution:
    """
    p(x_targets | x_o) with the class marginalized out.

    The result is a class-labelled mixture whose weights are the posterior
    masses P(y, k | x_o), so ``label_posterior`` on it gives P(y | x_t, x_o).

    Raises:
        AlreadyObserved: If a target index is in o
    """
    seen = set(int(i) for i in o)
    clash = [int(i) for i in targets if int(i) in seen]
    if clash:
        raise AlreadyObserved(f"features {clash} are already observed")
    return condition(ccm.labelled_mixture, x_o, o, targets)


def feature_marginal_given_obs(ccm: ClassConditionalModel, i: int, x_o, o: Sequence[int]) -> ConditionalDistribution:
    """p(x_i | x_o) = sum_y p(x_i, x_o | y) P(y) / sum_y p(x_o | y) P(y)."""
    return joint_given_obs(ccm, (i,), x_o, o)
