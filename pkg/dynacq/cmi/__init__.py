"""Conditional mutual information estimators and exact oracles."""

from .estimators import (
    CmiEstimate,
    DEFAULT_SAMPLES,
    cmi_classification,
    cmi_regression,
    cmi_pairwise_mc,
)
from .exact import (
    cmi_gaussian_exact,
    cmi_gaussian_sets,
    cmi_gaussian_entropy_form,
    cmi_discrete_bruteforce,
    kl_discrete,
)

__all__ = [
    "CmiEstimate",
    "DEFAULT_SAMPLES",
    "cmi_classification",
    "cmi_regression",
    "cmi_pairwise_mc",
    "cmi_gaussian_exact",
    "cmi_gaussian_sets",
    "cmi_gaussian_entropy_form",
    "cmi_discrete_bruteforce",
    "kl_discrete",
]
