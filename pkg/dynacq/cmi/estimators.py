"""
Monte Carlo estimators of the acquisition reward I(x_i; y | x_o).

Classification averages an analytic KL over classes across draws of x_i;
regression averages a log-density ratio over joint draws of (x_i, y).
Both accept a feature block in place of a single index.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import rel_entr

from ..condmodel.classcond import ClassConditionalModel, joint_given_obs
from ..condmodel.conditional import (
    ModelLike,
    condition,
    group_softmax,
    label_posterior,
    log_density,
    marginal,
    sample,
)
from ..condmodel.engine import FittedEngine
from ..core.errors import AlreadyObserved, InsufficientData, OverlappingSets, TargetObserved
from ..core.state import ObservedState

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 10

Block = Union[int, Sequence[int]]


@dataclass(frozen=True)
class CmiEstimate:
    """
    A CMI value in nats.

    MC estimates may be slightly negative; exact estimators never are.
    """
    value: float
    n_samples: int
    estimator: str
    std_error: Optional[float] = None


def as_block(i: Block) -> Tuple[int, ...]:
    if isinstance(i, (int, np.integer)):
        return (int(i),)
    return tuple(int(v) for v in i)


def _mc_estimate(terms: np.ndarray, estimator: str) -> CmiEstimate:
    n = terms.shape[0]
    std_error = float(np.std(terms, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return CmiEstimate(value=float(np.mean(terms)), n_samples=n, estimator=estimator, std_error=std_error)


def _check_unobserved(block: Tuple[int, ...], state: ObservedState):
    seen = [i for i in block if state.is_observed(i)]
    if seen:
        raise AlreadyObserved(f"features {seen} are already observed")


def cmi_classification(
    model: Union[ClassConditionalModel, FittedEngine],
    i: Block,
    state: ObservedState,
    n_samples: int = DEFAULT_SAMPLES,
    seed=None,
    draws: Optional[np.ndarray] = None,
) -> CmiEstimate:
    """
    Estimate I(x_i; y | x_o) for a discrete target.

    Draws x_i ~ p(x_i | x_o) and averages KL[P(y | x_i, x_o) || P(y | x_o)],
    with both class posteriors from Bayes' rule and the KL summed exactly
    over classes.

    Args:
        model: Class-conditional engine
        i: Feature index or block of indices scored jointly
        state: Current observed state
        n_samples: Draws of x_i
        seed: Seed of the draws
        draws: Pre-drawn x_i values (n, |block|); overrides sampling

    Raises:
        AlreadyObserved: If any block index is observed
    """
    ccm = model.model if isinstance(model, FittedEngine) else model
    block = as_block(i)
    _check_unobserved(block, state)

    cd = joint_given_obs(ccm, block, state.x_o, state.observed)
    prior = group_softmax(cd.log_weights[None, :], cd.labels, ccm.num_classes)[0]
    x_i = sample(cd, n_samples, seed) if draws is None else np.atleast_2d(draws)
    posterior = label_posterior(cd, x_i, ccm.num_classes)
    kl = rel_entr(posterior, prior[None, :]).sum(axis=1)
    return _mc_estimate(kl, "classification_mc")


def _log_ratio_terms(model: ModelLike, a: Tuple[int, ...], b: Tuple[int, ...], x_o, o, n_samples: int, seed) -> np.ndarray:
    """log p(a,b|x_o) - log p(a|x_o) - log p(b|x_o) at joint draws of (a, b)."""
    cd = condition(model, x_o, o, a + b)
    draws = sample(cd, n_samples, seed)
    k = len(a)
    return (
        log_density(cd, draws)
        - log_density(marginal(cd, a), draws[:, :k])
        - log_density(marginal(cd, b), draws[:, k:])
    )


def cmi_regression(
    model: Union[ModelLike, FittedEngine],
    i: Block,
    state: ObservedState,
    y_slot: Optional[int] = None,
    n_samples: int = DEFAULT_SAMPLES,
    seed=None,
) -> CmiEstimate:
    """
    Estimate I(x_i; y | x_o) for a real target stored in column ``y_slot``.

    One joint sample set of (x_i, y) from p(x_i, y | x_o) feeds both log
    terms; p(y | x_i, x_o) is only ever evaluated at sampled x_i.

    Raises:
        AlreadyObserved: If i is observed
        TargetObserved: If y is observed or i is the target itself
    """
    if isinstance(model, FittedEngine):
        y_slot = model.target_index if y_slot is None else y_slot
        model = model.model
    block = as_block(i)
    _check_unobserved(block, state)
    if state.is_observed(y_slot):
        raise TargetObserved(f"target column {y_slot} is observed")
    if y_slot in block:
        raise TargetObserved(f"cannot score the target column {y_slot} as a feature")

    terms = _log_ratio_terms(model, block, (y_slot,), state.x_o, state.observed, n_samples, seed)
    return _mc_estimate(terms, "regression_mc")


def cmi_pairwise_mc(
    model: ModelLike,
    i: int,
    j: int,
    cond: Sequence[int],
    reference_rows: Optional[np.ndarray] = None,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> CmiEstimate:
    """
    MC estimate of I(x_i; x_j | x_c) averaged over reference values of x_c.

    Each reference row supplies one x_c; its draws come from the stream
    SeedSequence([seed, row]). With an empty conditioning set a single
    evaluation is made.
    """
    cond = tuple(int(c) for c in cond)
    if i == j or i in cond or j in cond:
        raise OverlappingSets(f"pair ({i}, {j}) must be distinct and outside {cond}")
    if not cond:
        terms = _log_ratio_terms(model, (i,), (j,), [], (), n_samples, np.random.SeedSequence([seed, 0]))
        return _mc_estimate(terms, "pairwise_mc")
    if reference_rows is None or len(reference_rows) == 0:
        raise InsufficientData("a non-empty conditioning set needs reference rows")

    rows = np.atleast_2d(reference_rows)
    per_row = []
    for r, row in enumerate(rows):
        terms = _log_ratio_terms(model, (i,), (j,), row[list(cond)], cond, n_samples,
                                 np.random.SeedSequence([seed, r]))
        per_row.append(terms)
    return _mc_estimate(np.concatenate(per_row), "pairwise_mc")
