"""
Batch evaluation: episodes over many instances, performance curves and
candidate-set statistics.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from ..bn.graph import Dag
from ..cmi.estimators import DEFAULT_SAMPLES
from ..condmodel.engine import FittedEngine
from ..core.dataset import TaskKind, Classification
from ..core.errors import DynAcqError
from ..logging_config import log_error
from .greedy import run_episode
from .policy import Budget, DynamicPolicy, Policy, StoppingRule
from .trace import EpisodeTrace

logger = logging.getLogger(__name__)


@dataclass
class BatchResult:
    """Traces of successful episodes (input order) and the row indices that failed."""
    traces: List[EpisodeTrace] = field(default_factory=list)
    failed: List[int] = field(default_factory=list)


def run_batch(
    engine: FittedEngine,
    rows: np.ndarray,
    policy: Policy = DynamicPolicy(),
    stop: StoppingRule = Budget(0),
    pruner: Optional[Dag] = None,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> BatchResult:
    """
    Run one episode per row.

    Row r uses seed ``seed + r``. A failing episode is logged and skipped;
    the other episodes still run.
    """
    rows = np.atleast_2d(rows)

    def run(r: int) -> Optional[EpisodeTrace]:
        try:
            return run_episode(engine, rows[r], policy, stop, pruner, n_samples, seed + r, instance_id=r)
        except DynAcqError as e:
            log_error(logger, e, {"instance": r})
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(rows.shape[0])))
    else:
        results = [run(r) for r in range(rows.shape[0])]

    batch = BatchResult()
    for r, trace in enumerate(results):
        if trace is None:
            batch.failed.append(r)
        else:
            batch.traces.append(trace)
    logger.info(
        f"Batch finished: {len(batch.traces)} episodes, {len(batch.failed)} failed ({policy.name})"
    )
    return batch


@dataclass
class Curve:
    """Per-step metric with its standard error."""
    metric: str
    steps: List[int]
    mean: List[float]
    stderr: List[float]
    n: int

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"step": self.steps, "metric_mean": self.mean, "metric_stderr": self.stderr})


def performance_curve(
    traces: Sequence[EpisodeTrace],
    truths: Sequence,
    task: TaskKind,
    horizon: int,
) -> Curve:
    """
    Accuracy (classification) or RMSE (regression) after 0..horizon acquisitions.

    Episodes that stopped early carry their last prediction forward.
    ``truths`` is indexed by each trace's instance.
    """
    truths = np.asarray(truths)
    n = len(traces)
    steps, means, errors = [], [], []
    for s in range(horizon + 1):
        preds = np.array([t.prediction_at(s) for t in traces], dtype=float)
        target = np.array([truths[t.instance] for t in traces], dtype=float)
        if isinstance(task, Classification):
            correct = (preds == target).astype(float)
            p = float(correct.mean()) if n else 0.0
            means.append(p)
            errors.append(float(np.sqrt(p * (1 - p) / n)) if n else 0.0)
        else:
            sq = (preds - target) ** 2
            rmse = float(np.sqrt(sq.mean())) if n else 0.0
            se_mse = float(sq.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
            means.append(rmse)
            errors.append(se_mse / (2 * rmse) if rmse > 0 else 0.0)
        steps.append(s)
    metric = "accuracy" if isinstance(task, Classification) else "rmse"
    return Curve(metric=metric, steps=steps, mean=means, stderr=errors, n=n)


def candidate_payoff(traces: Sequence[EpisodeTrace], horizon: int) -> np.ndarray:
    """
    Mean candidate-set size at each of the first ``horizon`` steps.

    Steps an episode never reached (its candidate set emptied) count as 0.
    """
    sizes = np.zeros((len(traces), horizon))
    for row, trace in enumerate(traces):
        for s, record in enumerate(trace.steps[:horizon]):
            sizes[row, s] = len(record.candidates)
    return sizes.mean(axis=0) if len(traces) else sizes.sum(axis=0)


def first_acquisitions(traces: Sequence[EpisodeTrace], step: int = 1) -> List[Optional[int]]:
    """Feature acquired at ``step`` in each trace (None if the episode stopped before)."""
    return [t.steps[step - 1].feature if len(t.steps) >= step else None for t in traces]
