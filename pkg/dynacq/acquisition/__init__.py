"""Greedy acquisition loop, static baseline and batch evaluation."""

from .policy import (
    DynamicPolicy,
    StaticPolicy,
    Policy,
    Budget,
    Confidence,
    Exhaustion,
    StoppingRule,
)
from .trace import StepRecord, EpisodeTrace
from .greedy import (
    AcquisitionSession,
    next_feature_dynamic,
    run_episode,
    static_order,
    predict,
    predict_with_confidence,
    derive_seed,
)
from .harness import (
    BatchResult,
    Curve,
    run_batch,
    performance_curve,
    candidate_payoff,
    first_acquisitions,
)

__all__ = [
    "DynamicPolicy",
    "StaticPolicy",
    "Policy",
    "Budget",
    "Confidence",
    "Exhaustion",
    "StoppingRule",
    "StepRecord",
    "EpisodeTrace",
    "AcquisitionSession",
    "next_feature_dynamic",
    "run_episode",
    "static_order",
    "predict",
    "predict_with_confidence",
    "derive_seed",
    "BatchResult",
    "Curve",
    "run_batch",
    "performance_curve",
    "candidate_payoff",
    "first_acquisitions",
]
