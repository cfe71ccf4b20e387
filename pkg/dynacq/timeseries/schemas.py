"""
Pydantic schemas for time-series traces and calibration files.
"""

import json
from typing import List, Optional

from pydantic import BaseModel, Field


# ========================================
# Traces
# ========================================

class ChronoStepRecord(BaseModel):
    """One acquired time step under the Dirichlet (or uniform) policy."""
    time_step: int
    features: List[int]
    support: List[int]
    counts: List[int] = Field(default_factory=list, description="Informativeness counts over the support")
    prediction: int
    confidence: float


class ChronoTrace(BaseModel):
    instance: int
    selection: str
    initial_prediction: int
    initial_confidence: float
    steps: List[ChronoStepRecord] = Field(default_factory=list)
    final_prediction: int

    @property
    def time_steps(self) -> List[int]:
        return [s.time_step for s in self.steps]

    def prediction_at(self, step: int) -> int:
        """Prediction after ``step`` acquired time steps, carried forward past the last one."""
        if step <= 0 or not self.steps:
            return self.initial_prediction
        return self.steps[min(step, len(self.steps)) - 1].prediction

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True)


class ConsecutiveStep(BaseModel):
    time_step: int
    raw_confidence: float
    calibrated_confidence: float
    prediction: int


class ConsecutiveTrace(BaseModel):
    """Consecutive acquisition stopped by calibrated confidence."""
    instance: int
    threshold: float
    t_stop: int
    prediction: int
    steps: List[ConsecutiveStep]

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True)


# ========================================
# Calibration
# ========================================

class StepCalibrationDocument(BaseModel):
    """Bin table of one time step."""
    time_step: int
    values: List[float]
    counts: List[int]
    accuracy: List[Optional[float]] = Field(..., description="Raw empirical accuracy, null for empty bins")


class CalibrationDocument(BaseModel):
    format_version: int = 1
    bins: int = Field(..., ge=2)
    steps: List[StepCalibrationDocument]
