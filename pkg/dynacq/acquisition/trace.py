"""
Pydantic schemas for episode traces (one JSON object per episode).
"""

import json
from typing import List, Optional, Union

from pydantic import BaseModel, Field

Prediction = Union[int, float]


class StepRecord(BaseModel):
    """One acquisition: the candidates considered, their scores and the prediction afterwards."""
    step: int = Field(..., ge=1)
    feature: int
    feature_name: str
    candidates: List[int]
    scores: List[float] = Field(default_factory=list, description="CMI per candidate, aligned with candidates")
    value: float
    prediction: Prediction
    confidence: Optional[float] = Field(default=None, description="Max class probability")
    predictive_std: Optional[float] = Field(default=None, description="Std of p(y | x_o) for regression")


class EpisodeTrace(BaseModel):
    """Full record of one instance's acquisition episode."""
    instance: int
    policy: str
    initial_prediction: Prediction
    initial_confidence: Optional[float] = None
    steps: List[StepRecord] = Field(default_factory=list)
    final_prediction: Prediction
    steps_taken: int
    stopped_by: str

    @property
    def acquired(self) -> List[int]:
        return [s.feature for s in self.steps]

    def prediction_at(self, step: int) -> Prediction:
        """Prediction after ``step`` acquisitions, carried forward past the stop."""
        if step <= 0 or not self.steps:
            return self.initial_prediction
        return self.steps[min(step, len(self.steps)) - 1].prediction

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True)
