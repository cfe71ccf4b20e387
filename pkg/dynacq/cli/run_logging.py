"""
Command run logging.

Wraps every CLI command with:
- A run ID for tracing
- Duration timing
- Structured success / failure records with the exit code
"""

import time
import uuid
from contextlib import contextmanager
from typing import Iterator

from ..logging_config import get_logger, log_error

logger = get_logger(__name__)


@contextmanager
def command_context(command: str) -> Iterator[str]:
    """
    Log the start, end and duration of ``command``.

    Yields:
        The run ID
    """
    run_id = uuid.uuid4().hex[:12]
    start_time = time.perf_counter()
    logger.info(f"Command started: {command}", extra={"run_id": run_id, "command": command})
    try:
        yield run_id
    except Exception as e:
        duration_ms = (time.perf_counter() - start_time) * 1000
        log_error(logger, e, {
            "run_id": run_id,
            "command": command,
            "duration_ms": round(duration_ms, 2),
            "exit_code": getattr(e, "exit_code", 1),
        })
        raise
    duration_ms = (time.perf_counter() - start_time) * 1000
    logger.info(
        f"Command finished: {command} ({duration_ms:.0f} ms)",
        extra={"run_id": run_id, "command": command, "duration_ms": round(duration_ms, 2), "exit_code": 0},
    )
