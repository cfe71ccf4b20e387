"""Chronologically constrained acquisition and calibrated stopping."""

from .dirichlet import (
    ChronoState,
    DirichletParams,
    step_block,
    prior_params,
    posterior_params,
    informativeness_probabilities,
    informativeness_scores,
    informativeness_counts,
    draw_counts,
    select_time_step,
    run_chrono_episode,
)
from .calibration import CalibrationMap, fit_calibration, expected_calibration_error
from .consecutive import collect_calibration_pairs, run_consecutive, stop_summary
from .schemas import ChronoTrace, ConsecutiveTrace

__all__ = [
    "ChronoState",
    "DirichletParams",
    "step_block",
    "prior_params",
    "posterior_params",
    "informativeness_probabilities",
    "informativeness_scores",
    "informativeness_counts",
    "draw_counts",
    "select_time_step",
    "run_chrono_episode",
    "CalibrationMap",
    "fit_calibration",
    "expected_calibration_error",
    "collect_calibration_pairs",
    "run_consecutive",
    "stop_summary",
    "ChronoTrace",
    "ConsecutiveTrace",
]
