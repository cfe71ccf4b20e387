"""
Output directory handling for CLI runs.

All result files of a command go through one OutputStore so they share a
base directory and deterministic formatting (sorted JSON keys, "\\n" line
endings, full-precision floats).
"""

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Union

import pandas as pd
from pydantic import BaseModel

logger = logging.getLogger(__name__)


class OutputStore:
    """Local output directory for one run."""

    def __init__(self, base_path: Union[str, Path] = "out"):
        """
        Initialize the store.

        Args:
            base_path: Directory that receives every output file
        """
        self.base_path = Path(base_path)
        self._ensure_directory()

    def _ensure_directory(self):
        """Create the output directory if it doesn't exist."""
        self.base_path.mkdir(parents=True, exist_ok=True)
        logger.debug(f"Output directory ready: {self.base_path}")

    def path(self, name: str) -> Path:
        """Full path of an output file (parents created)."""
        full = self.base_path / name
        full.parent.mkdir(parents=True, exist_ok=True)
        return full

    def write_text(self, name: str, text: str) -> Path:
        full = self.path(name)
        full.write_text(text, encoding="utf-8", newline="\n")
        logger.info(f"Wrote {full}")
        return full

    def write_json(self, name: str, payload: Union[BaseModel, Any]) -> Path:
        if isinstance(payload, BaseModel):
            payload = payload.model_dump(mode="json")
        return self.write_text(name, json.dumps(payload, sort_keys=True, indent=2) + "\n")

    def write_jsonl(self, name: str, records: Iterable[BaseModel]) -> Path:
        lines = [json.dumps(r.model_dump(mode="json"), sort_keys=True) for r in records]
        return self.write_text(name, "".join(line + "\n" for line in lines))

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        full = self.path(name)
        frame.to_csv(full, index=False, lineterminator="\n")
        logger.info(f"Wrote {full}")
        return full
