"""
Exception hierarchy for DynAcq.

Every error carries an ``exit_code`` (used by the CLI) and a short
``error_code`` string used in structured log records.

Exit codes:
- 2: configuration error
- 3: data error
- 4: numeric failure
- 1: anything else (invalid state transitions, bad queries)
"""

from typing import Optional


class DynAcqError(Exception):
    """Base class for all DynAcq errors."""

    exit_code: int = 1
    error_code: str = "dynacq_error"

    def __init__(self, detail: str, error_code: Optional[str] = None):
        super().__init__(detail)
        self.detail = detail
        if error_code is not None:
            self.error_code = error_code

    def to_dict(self) -> dict:
        """Structured form used by log_error and the CLI."""
        return {
            "detail": self.detail,
            "error_code": self.error_code,
            "exit_code": self.exit_code,
        }


# ========================================
# Configuration
# ========================================

class ConfigError(DynAcqError, ValueError):
    exit_code = 2
    error_code = "config_error"


# ========================================
# Data
# ========================================

class DataError(DynAcqError, ValueError):
    exit_code = 3
    error_code = "data_error"


class MissingFile(DataError):
    error_code = "missing_file"

    def __init__(self, path: str):
        super().__init__(f"File not found: {path}")
        self.path = path


class ParseError(DataError):
    error_code = "parse_error"

    def __init__(self, row: int, column: str, cell: str):
        super().__init__(f"Cannot parse cell at row {row}, column {column!r}: {cell!r}")
        self.row = row
        self.column = column


class RaggedRows(DataError):
    error_code = "ragged_rows"


class TooFewRows(DataError):
    error_code = "too_few_rows"


class InvalidRatios(DataError):
    error_code = "invalid_ratios"


class EmptyValidation(DataError):
    error_code = "empty_validation"


# ========================================
# Numerics
# ========================================

class NumericError(DynAcqError, ArithmeticError):
    exit_code = 4
    error_code = "numeric_error"


class SingularCovariance(NumericError):
    error_code = "singular_covariance"


class NotPositiveDefinite(NumericError):
    error_code = "not_positive_definite"


class NoValidExtension(NumericError):
    error_code = "no_valid_extension"


class DidNotConverge(NumericError):
    error_code = "did_not_converge"


# ========================================
# State / query errors
# ========================================

class StateError(DynAcqError, ValueError):
    error_code = "state_error"


class AlreadyObserved(StateError):
    error_code = "already_observed"


class IndexOutOfRange(StateError):
    error_code = "index_out_of_range"


class OverlappingSets(StateError):
    error_code = "overlapping_sets"


class EmptyTarget(StateError):
    error_code = "empty_target"


class TargetObserved(StateError):
    error_code = "target_observed"


class DimensionMismatch(StateError):
    error_code = "dimension_mismatch"


class InsufficientData(StateError):
    error_code = "insufficient_data"


class NoCandidates(StateError):
    error_code = "no_candidates"


class NoRemainingSteps(StateError):
    error_code = "no_remaining_steps"


class Misaligned(StateError):
    error_code = "misaligned"


class SupportMismatch(StateError):
    error_code = "support_mismatch"


class NotNormalized(StateError):
    error_code = "not_normalized"


class InvalidNode(StateError):
    error_code = "invalid_node"


class CyclicGraph(StateError):
    error_code = "cyclic_graph"
