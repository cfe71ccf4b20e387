"""
Pydantic schemas for the persisted engine document.
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

MODEL_FORMAT_VERSION = 1


# ========================================
# Building blocks
# ========================================

class MixtureDocument(BaseModel):
    """One Gaussian mixture; covariances are row-major nested lists."""
    weights: List[float]
    means: List[List[float]]
    covariances: List[List[List[float]]]
    converged: bool = True

    @model_validator(mode="after")
    def _check_lengths(self):
        if not (len(self.weights) == len(self.means) == len(self.covariances)):
            raise ValueError("weights, means and covariances must list the same components")
        return self


class NormalizationDocument(BaseModel):
    """Min-max statistics of the training split."""
    mins: List[float]
    maxs: List[float]


# ========================================
# Top-level document
# ========================================

class ModelDocument(BaseModel):
    """Versioned engine file written by ``fit`` and read by every other command."""
    format_version: int = Field(default=MODEL_FORMAT_VERSION)
    task: Literal["classification", "regression"]
    engine: str
    num_classes: Optional[int] = None
    target_index: Optional[int] = None
    feature_names: List[str]
    class_names: Optional[List[str]] = None
    class_prior: Optional[List[float]] = None
    mixtures: List[MixtureDocument] = Field(..., min_length=1)
    normalization: Optional[NormalizationDocument] = None
    target_normalized: bool = False

    @model_validator(mode="after")
    def _check_task_fields(self):
        if self.task == "classification":
            if self.num_classes is None or self.class_prior is None:
                raise ValueError("classification documents need num_classes and class_prior")
            if len(self.mixtures) != self.num_classes:
                raise ValueError("classification documents need one mixture per class")
        elif self.target_index is None or len(self.mixtures) != 1:
            raise ValueError("regression documents need target_index and exactly one mixture")
        return self
