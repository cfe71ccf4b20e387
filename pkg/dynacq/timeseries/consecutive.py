"""
Consecutive acquisition: steps 0, 1, 2, ... in order, stopping once the
calibrated max-class probability reaches a threshold.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from ..condmodel.engine import FittedEngine
from ..core.errors import ConfigError, DimensionMismatch
from .calibration import CalibrationMap, CalibrationPairs
from .schemas import ConsecutiveStep, ConsecutiveTrace

logger = logging.getLogger(__name__)


def _prefix_posterior(model: FittedEngine, row: np.ndarray, t: int, step_width: int) -> np.ndarray:
    observed = tuple(range((t + 1) * step_width))
    return model.class_posterior(row[list(observed)], observed)


def _check_layout(model: FittedEngine, T: int, step_width: int, width: int):
    if not model.is_classification:
        raise ConfigError("consecutive acquisition is defined for classification engines")
    if model.dim != T * step_width or width != T * step_width:
        raise DimensionMismatch(f"expected {T} x {step_width} features, got {width} (engine {model.dim})")


def collect_calibration_pairs(
    model: FittedEngine,
    rows: np.ndarray,
    labels: Sequence[int],
    T: int,
    step_width: int = 1,
) -> List[CalibrationPairs]:
    """
    Raw (confidence, correct) pairs of every row after each prefix 0..t.

    Returns:
        One (confidences, correct flags) pair of arrays per time step
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    labels = np.asarray(labels, dtype=int)
    _check_layout(model, T, step_width, rows.shape[1])

    conf = np.zeros((T, rows.shape[0]))
    correct = np.zeros((T, rows.shape[0]), dtype=bool)
    for r, row in enumerate(rows):
        for t in range(T):
            posterior = _prefix_posterior(model, row, t, step_width)
            label = int(np.argmax(posterior))
            conf[t, r] = posterior[label]
            correct[t, r] = label == labels[r]
    return [(conf[t], correct[t]) for t in range(T)]


def run_consecutive(
    model: FittedEngine,
    instance,
    tau: float,
    calib: CalibrationMap,
    T: int,
    step_width: int = 1,
    instance_id: int = 0,
) -> ConsecutiveTrace:
    """
    Acquire time steps in order until calibrated confidence >= tau.

    tau = 0 stops after step 0; an unattainable tau runs to T - 1.
    """
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"threshold must lie in [0, 1], got {tau}")
    if calib.num_steps < T:
        raise ConfigError(f"calibration covers {calib.num_steps} steps, series has {T}")
    row = np.asarray(instance, dtype=float).reshape(-1)
    _check_layout(model, T, step_width, row.shape[0])

    steps: List[ConsecutiveStep] = []
    for t in range(T):
        posterior = _prefix_posterior(model, row, t, step_width)
        label = int(np.argmax(posterior))
        raw = float(posterior[label])
        calibrated = calib.calibrate(t, raw)
        steps.append(ConsecutiveStep(
            time_step=t, raw_confidence=raw, calibrated_confidence=calibrated, prediction=label
        ))
        if calibrated >= tau:
            break

    last = steps[-1]
    logger.debug(f"Instance {instance_id} stopped at step {last.time_step}", extra={"instance": instance_id})
    return ConsecutiveTrace(
        instance=instance_id, threshold=tau, t_stop=last.time_step, prediction=last.prediction, steps=steps
    )


def stop_summary(traces: Sequence[ConsecutiveTrace], labels: Sequence[int]) -> Tuple[float, float]:
    """(mean stop step, accuracy at stop) over a batch of consecutive traces."""
    if not traces:
        return 0.0, 0.0
    labels = np.asarray(labels, dtype=int)
    stops = np.array([tr.t_stop for tr in traces], dtype=float)
    hits = np.array([tr.prediction == labels[tr.instance] for tr in traces], dtype=float)
    return float(stops.mean()), float(hits.mean())
