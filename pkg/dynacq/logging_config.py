"""
Centralized logging configuration.

Provides:
- Human-readable console output on stderr (stdout stays free for reports
  and the interactive session)
- Structured JSON-lines file output with run, instance and step context
"""

import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

# Extra record attributes copied into JSON log lines
STRUCTURED_FIELDS = (
    "run_id",
    "command",
    "instance",
    "step",
    "feature",
    "duration_ms",
    "exit_code",
    "error_code",
)


class JSONFormatter(logging.Formatter):
    """
    Formatter that outputs one JSON object per record.

    Keys: timestamp (UTC, Z suffix), level, module, message, plus any
    STRUCTURED_FIELDS set on the record.
    """

    def format(self, record: logging.LogRecord) -> str:
        entry: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "module": record.name,
            "message": record.getMessage(),
        }

        if record.exc_info:
            entry["exception"] = self.formatException(record.exc_info)

        for name in STRUCTURED_FIELDS:
            if hasattr(record, name):
                entry[name] = getattr(record, name)

        return json.dumps(entry, ensure_ascii=False, default=str)


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None):
    """
    Configure logging for a CLI run.

    Args:
        log_level: Minimum console level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional path of a JSON-lines log file
    """
    level = getattr(logging, log_level.upper(), None)
    if not isinstance(level, int):
        raise ValueError(f"unknown log level {log_level!r}")

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG if log_file else level)
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))
    root_logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_path, encoding="utf-8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(JSONFormatter())
        root_logger.addHandler(file_handler)

    # Font lookup chatter from the SVG renderer
    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    root_logger.debug(f"Logging initialized: level={log_level}, file={log_file}")


def get_logger(name: str) -> logging.Logger:
    """
    Logger for one module.

    Args:
        name: Dotted module path, normally __name__
    """
    return logging.getLogger(name)


def log_error(logger: logging.Logger, error: Exception, context: Optional[Dict[str, Any]] = None):
    """
    Log an error with structured context.

    DynAcq errors contribute their error and exit codes.

    Args:
        logger: Logger of the failing module
        error: The failure being reported
        context: Additional structured fields (instance, step, ...)
    """
    extra = dict(context or {})
    to_dict = getattr(error, "to_dict", None)
    if callable(to_dict):
        info = to_dict()
        extra.setdefault("error_code", info["error_code"])
        extra.setdefault("exit_code", info["exit_code"])

    logger.error(f"{type(error).__name__}: {error}", exc_info=True, extra=extra)
