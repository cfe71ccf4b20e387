"""
Greedy dynamic feature acquisition.

Each step scores every candidate by its estimated I(x_i; y | x_o),
acquires the argmax and predicts from the enlarged observed set. The
static baseline builds one order greedily from CMI averaged over a
reference set.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..bn.graph import Dag, prune_candidates
from ..cmi.estimators import DEFAULT_SAMPLES, CmiEstimate, cmi_classification, cmi_regression
from ..condmodel.conditional import predictive_mean, predictive_variance
from ..condmodel.engine import FittedEngine
from ..core.dataset import Dataset
from ..core.errors import ConfigError, DimensionMismatch, InsufficientData, NoCandidates
from ..core.state import ObservedState
from .policy import (
    Budget,
    Confidence,
    DynamicPolicy,
    Policy,
    StaticPolicy,
    StoppingRule,
    acquisition_cap,
)
from .trace import EpisodeTrace, Prediction, StepRecord

logger = logging.getLogger(__name__)

# Scores within this distance of the best are tied; ties go to the lowest index
TIE_TOLERANCE = 1e-12


def derive_seed(*entropy: int) -> int:
    """Deterministic 32-bit seed from integer entropy."""
    return int(np.random.SeedSequence([int(e) for e in entropy]).generate_state(1)[0])


def score_candidate(engine: FittedEngine, i, state: ObservedState, n_samples: int, seed) -> CmiEstimate:
    """CMI of one candidate (or block) under the engine's task."""
    if engine.is_classification:
        return cmi_classification(engine.model, i, state, n_samples, seed)
    return cmi_regression(engine.model, i, state, engine.target_index, n_samples, seed)


def next_feature_dynamic(
    model: FittedEngine,
    state: ObservedState,
    candidates: Sequence[int],
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> Tuple[int, Dict[int, float]]:
    """
    Pick the candidate with the highest CMI.

    Candidate i draws from the stream SeedSequence([seed, i]), so scores do
    not depend on the order or threads they are computed in.

    Returns:
        (chosen feature, score per candidate)

    Raises:
        NoCandidates: If ``candidates`` is empty
    """
    candidates = tuple(int(i) for i in candidates)
    if not candidates:
        raise NoCandidates("no candidate features to score")

    def run(i):
        return score_candidate(model, i, state, n_samples, np.random.SeedSequence([seed, i])).value

    if workers > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(run, candidates))
    else:
        values = [run(i) for i in candidates]

    scores = dict(zip(candidates, values))
    best = max(values)
    chosen = min(i for i, v in scores.items() if v >= best - TIE_TOLERANCE)
    return chosen, scores


def predict_with_confidence(model: FittedEngine, state: ObservedState) -> Tuple[Prediction, Optional[float], Optional[float]]:
    """
    Prediction from the current observed set.

    Returns:
        (prediction, max class probability, predictive std); the two last
        entries are None for the task they do not apply to
    """
    if model.is_classification:
        posterior = model.class_posterior(state.x_o, state.observed)
        label = int(np.argmax(posterior))
        return label, float(posterior[label]), None
    cd = model.target_given_obs(state.x_o, state.observed)
    mean = float(predictive_mean(cd)[0])
    std = float(np.sqrt(max(predictive_variance(cd)[0, 0], 0.0)))
    return mean, None, std


def predict(model: FittedEngine, state: ObservedState) -> Prediction:
    """Class argmax (ties to the lowest class) or the conditional mean of y."""
    return predict_with_confidence(model, state)[0]


class AcquisitionSession:
    """
    Stateful stepper over one instance.

    Batch episodes and the interactive terminal session both drive this
    class, so a replayed episode produces the same trace.
    """

    def __init__(
        self,
        engine: FittedEngine,
        policy: Policy = DynamicPolicy(),
        pruner: Optional[Dag] = None,
        n_samples: int = DEFAULT_SAMPLES,
        seed: int = 0,
        instance: int = 0,
        workers: int = 1,
    ):
        self.engine = engine
        self.policy = policy
        self.pruner = pruner
        self.n_samples = n_samples
        self.seed = seed
        self.instance = instance
        self.workers = workers
        self.state = ObservedState.empty(engine.dim)
        self.steps = []

        if isinstance(policy, StaticPolicy):
            policy.check_permutation(engine.feature_indices)
        expected_nodes = engine.dim + 1 if engine.is_classification else engine.dim
        if pruner is not None and pruner.num_nodes != expected_nodes:
            raise DimensionMismatch(f"pruning graph has {pruner.num_nodes} nodes, expected {expected_nodes}")

        self.initial_prediction, self.initial_confidence, self.initial_std = predict_with_confidence(engine, self.state)
        self.prediction = self.initial_prediction
        self.confidence = self.initial_confidence

    @property
    def target_node(self) -> int:
        """Graph node of the target: the extra last node for classification, the y column otherwise."""
        return self.engine.dim if self.engine.is_classification else self.engine.target_index

    def candidates(self) -> Tuple[int, ...]:
        acquirable = set(self.engine.feature_indices)
        unobserved = tuple(i for i in self.state.unobserved if i in acquirable)
        if self.pruner is None:
            return unobserved
        return prune_candidates(self.pruner, self.target_node, self.state.observed, unobserved)

    def propose(self) -> Tuple[int, Tuple[int, ...], Dict[int, float]]:
        """
        Next feature to acquire.

        Raises:
            NoCandidates: If the candidate set is empty
        """
        candidates = self.candidates()
        if not candidates:
            raise NoCandidates("no candidate features remain")
        if isinstance(self.policy, StaticPolicy):
            chosen = next(i for i in self.policy.order if i in candidates)
            return chosen, candidates, {}
        step_seed = derive_seed(self.seed, len(self.steps))
        chosen, scores = next_feature_dynamic(
            self.engine, self.state, candidates, self.n_samples, step_seed, self.workers
        )
        return chosen, candidates, scores

    def observe(self, feature: int, value: float, candidates: Sequence[int] = (), scores: Optional[Dict[int, float]] = None) -> StepRecord:
        """Acquire ``feature`` at ``value`` and record the step."""
        self.state = self.state.acquire(feature, value)
        self.prediction, self.confidence, std = predict_with_confidence(self.engine, self.state)
        scores = scores or {}
        record = StepRecord(
            step=len(self.steps) + 1,
            feature=int(feature),
            feature_name=self.engine.feature_name(feature),
            candidates=[int(c) for c in candidates],
            scores=[float(scores[c]) for c in candidates] if scores else [],
            value=float(value),
            prediction=self.prediction,
            confidence=self.confidence,
            predictive_std=std,
        )
        self.steps.append(record)
        return record

    def trace(self, stopped_by: str) -> EpisodeTrace:
        return EpisodeTrace(
            instance=self.instance,
            policy=self.policy.name,
            initial_prediction=self.initial_prediction,
            initial_confidence=self.initial_confidence,
            steps=list(self.steps),
            final_prediction=self.prediction,
            steps_taken=len(self.steps),
            stopped_by=stopped_by,
        )


def _confident(stop: StoppingRule, confidence: Optional[float]) -> bool:
    return isinstance(stop, Confidence) and confidence is not None and confidence >= stop.threshold


def run_episode(
    model: FittedEngine,
    instance,
    policy: Policy = DynamicPolicy(),
    stop: StoppingRule = Budget(0),
    pruner: Optional[Dag] = None,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    instance_id: int = 0,
    workers: int = 1,
) -> EpisodeTrace:
    """
    Acquire features for one instance until the stopping rule fires.

    Acquiring a feature reveals its recorded value in ``instance``. With a
    pruning graph the candidate set is recomputed at every step.

    Args:
        model: Fitted engine
        instance: Full row of length ``model.dim``
        policy: DynamicPolicy or StaticPolicy
        stop: Budget, Confidence or Exhaustion
        pruner: Optional DAG over the features plus the target
        n_samples: MC draws per CMI estimate
        seed: Episode seed
        instance_id: Row index recorded in the trace

    Raises:
        ConfigError: On confidence stopping for regression or a budget above d
    """
    row = np.asarray(instance, dtype=float).reshape(-1)
    if row.shape[0] != model.dim:
        raise DimensionMismatch(f"instance has {row.shape[0]} values, engine models {model.dim}")
    if isinstance(stop, Confidence) and not model.is_classification:
        raise ConfigError("confidence stopping applies to classification only")
    cap = acquisition_cap(stop, len(model.feature_indices))

    session = AcquisitionSession(model, policy, pruner, n_samples, seed, instance_id, workers)
    if _confident(stop, session.confidence):
        return session.trace("confidence")

    while True:
        if len(session.steps) >= cap:
            return session.trace("budget" if isinstance(stop, Budget) else "exhausted")
        try:
            feature, candidates, scores = session.propose()
        except NoCandidates:
            return session.trace("no_candidates")
        session.observe(feature, row[feature], candidates, scores)
        logger.debug(
            f"Instance {instance_id} step {len(session.steps)}: acquired {feature}",
            extra={"instance": instance_id, "step": len(session.steps), "feature": feature},
        )
        if _confident(stop, session.confidence):
            return session.trace("confidence")


def static_order(
    model: FittedEngine,
    reference_set: Union[Dataset, np.ndarray],
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> Tuple[int, ...]:
    """
    One acquisition order shared by all instances.

    At each step every remaining feature is scored by its CMI averaged
    over the reference rows, each row conditioned on its own values of the
    features already ordered; the best average is appended.

    Raises:
        InsufficientData: If the reference set is empty
    """
    rows = reference_set.rows if isinstance(reference_set, Dataset) else np.atleast_2d(reference_set)
    if rows.shape[0] == 0:
        raise InsufficientData("static order needs a non-empty reference set")
    features = list(model.feature_indices)
    order = []

    for step in range(len(features)):
        remaining = [i for i in features if i not in order]
        if len(remaining) == 1:
            order.append(remaining[0])
            break

        def average(i, step=step):
            total = 0.0
            for r, row in enumerate(rows):
                state = ObservedState(model.dim, tuple(order), tuple(float(row[k]) for k in order))
                total += score_candidate(model, i, state, n_samples, np.random.SeedSequence([seed, step, r, i])).value
            return total / rows.shape[0]

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                averages = list(pool.map(average, remaining))
        else:
            averages = [average(i) for i in remaining]
        best = max(averages)
        order.append(min(i for i, v in zip(remaining, averages) if v >= best - TIE_TOLERANCE))
        logger.debug(f"Static order step {step}: {order[-1]} (mean CMI {best:.4f})")

    logger.info(f"Static order over {rows.shape[0]} reference rows: {order}")
    return tuple(order)
