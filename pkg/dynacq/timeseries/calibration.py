"""
Per-time-step histogram-binning calibration of max-class confidence.

Each time step gets its own table of equal-width bins on [0, 1]. A bin
maps to the empirical accuracy of the validation pairs that fell in it,
smoothed by isotonic regression so calibrated confidence never decreases
with raw confidence. Empty bins take the value of the nearest populated bin.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError
from sklearn.isotonic import IsotonicRegression

from ..core.errors import ConfigError, DataError, EmptyValidation, IndexOutOfRange, MissingFile
from .schemas import CalibrationDocument, StepCalibrationDocument

logger = logging.getLogger(__name__)

DEFAULT_BINS = 10

CalibrationPairs = Tuple[np.ndarray, np.ndarray]


def bin_index(confidence, bins: int) -> np.ndarray:
    """Equal-width bin of each confidence; 1.0 falls in the last bin."""
    conf = np.clip(np.asarray(confidence, dtype=float), 0.0, 1.0)
    return np.minimum((conf * bins).astype(int), bins - 1)


@dataclass(frozen=True, eq=False)
class CalibrationMap:
    """
    Immutable per-step bin tables.

    Attributes:
        bins: Number of equal-width bins
        values: (T, bins) calibrated confidence of every bin
        counts: (T, bins) validation pairs per bin
        accuracy: (T, bins) raw empirical accuracy, NaN where empty
    """

    bins: int
    values: np.ndarray
    counts: np.ndarray
    accuracy: np.ndarray

    @property
    def num_steps(self) -> int:
        return self.values.shape[0]

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.bins + 1)

    def calibrate(self, t: int, confidence):
        if not 0 <= t < self.num_steps:
            raise IndexOutOfRange(f"time step {t} outside [0, {self.num_steps})")
        out = self.values[t, bin_index(confidence, self.bins)]
        return float(out) if np.ndim(confidence) == 0 else out

    def to_document(self) -> CalibrationDocument:
        return CalibrationDocument(
            bins=self.bins,
            steps=[
                StepCalibrationDocument(
                    time_step=t,
                    values=[float(v) for v in self.values[t]],
                    counts=[int(c) for c in self.counts[t]],
                    accuracy=[None if np.isnan(a) else float(a) for a in self.accuracy[t]],
                )
                for t in range(self.num_steps)
            ],
        )

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_document().model_dump(mode="json"), sort_keys=True, indent=2))
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CalibrationMap":
        path = Path(path)
        if not path.exists():
            raise MissingFile(str(path))
        try:
            doc = CalibrationDocument.model_validate_json(path.read_text())
        except ValidationError as e:
            raise DataError(f"invalid calibration file {path}: {e.error_count()} validation errors")
        steps = sorted(doc.steps, key=lambda s: s.time_step)
        if any(len(s.values) != doc.bins for s in steps):
            raise DataError(f"calibration file {path} has tables of the wrong width")
        return cls(
            bins=doc.bins,
            values=np.array([s.values for s in steps], dtype=float),
            counts=np.array([s.counts for s in steps], dtype=int),
            accuracy=np.array([[np.nan if a is None else a for a in s.accuracy] for s in steps], dtype=float),
        )


def _fill_nearest(values: np.ndarray, populated: np.ndarray) -> np.ndarray:
    # ties between a lower and a higher neighbour go to the lower one
    idx = np.flatnonzero(populated)
    out = values.copy()
    for b in np.flatnonzero(~populated):
        out[b] = values[idx[np.argmin(np.abs(idx - b))]]
    return out


def _fit_step(conf: np.ndarray, correct: np.ndarray, bins: int):
    which = bin_index(conf, bins)
    counts = np.bincount(which, minlength=bins)
    hits = np.bincount(which, weights=correct.astype(float), minlength=bins)
    populated = counts > 0
    accuracy = np.full(bins, np.nan)
    accuracy[populated] = hits[populated] / counts[populated]

    centers = (np.arange(bins) + 0.5) / bins
    iso = IsotonicRegression(y_min=0.0, y_max=1.0, increasing=True)
    iso.fit(centers[populated], accuracy[populated], sample_weight=counts[populated])
    values = np.zeros(bins)
    values[populated] = iso.predict(centers[populated])
    return _fill_nearest(values, populated), counts, accuracy


def fit_calibration(val_runs: Sequence[CalibrationPairs], bins: int = DEFAULT_BINS) -> CalibrationMap:
    """
    Fit one bin table per time step.

    Args:
        val_runs: For each time step, (confidences, correct flags) over validation instances
        bins: Equal-width bins on [0, 1]

    Raises:
        ConfigError: If bins < 2
        EmptyValidation: If any time step has no pairs
    """
    if bins < 2:
        raise ConfigError(f"calibration needs at least 2 bins, got {bins}")
    if not val_runs:
        raise EmptyValidation("no time steps to calibrate")

    values, counts, accuracy = [], [], []
    for t, (conf, correct) in enumerate(val_runs):
        conf = np.asarray(conf, dtype=float).reshape(-1)
        correct = np.asarray(correct, dtype=bool).reshape(-1)
        if conf.size == 0:
            raise EmptyValidation(f"time step {t} has no validation pairs")
        if conf.shape != correct.shape:
            raise DataError(f"time step {t}: {conf.size} confidences for {correct.size} outcomes")
        v, c, a = _fit_step(conf, correct, bins)
        values.append(v)
        counts.append(c)
        accuracy.append(a)

    calib = CalibrationMap(
        bins=bins, values=np.array(values), counts=np.array(counts), accuracy=np.array(accuracy)
    )
    logger.info(f"Calibration fitted: {calib.num_steps} time steps, {bins} bins")
    return calib


def expected_calibration_error(conf, correct, bins: int = DEFAULT_BINS) -> float:
    """Sum over bins of (n_b / n) |accuracy_b - mean confidence_b|."""
    conf = np.asarray(conf, dtype=float).reshape(-1)
    correct = np.asarray(correct, dtype=float).reshape(-1)
    if conf.size == 0:
        raise EmptyValidation("no pairs for calibration error")
    which = bin_index(conf, bins)
    acc_sum = np.bincount(which, weights=correct, minlength=bins)
    conf_sum = np.bincount(which, weights=conf, minlength=bins)
    return float(np.abs(acc_sum - conf_sum).sum() / conf.size)
