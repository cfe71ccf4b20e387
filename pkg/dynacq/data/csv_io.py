"""
CSV ingestion and export plus the JSON sidecar written next to generated data.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError

from ..core.dataset import Classification, Dataset, Regression, normalize as normalize_dataset
from ..core.errors import ConfigError, DataError, MissingFile, ParseError, RaggedRows, TooFewRows

logger = logging.getLogger(__name__)

DEFAULT_LABEL_COLUMN = "label"
HEADERLESS_LAST_COLUMN = "y"


def load_csv(
    path: Union[str, Path],
    label_column: Optional[str] = None,
    normalize: bool = False,
    target_column: Optional[str] = None,
    header: bool = True,
) -> Dataset:
    """
    Load a numeric CSV file.

    With ``header=False`` every line is data and the columns are named
    ``x0..x{d-1}`` with the last one named ``y``.

    A ``label_column`` makes a classification dataset (labels are mapped to
    0..K-1 in sorted order of their text); a ``target_column`` makes a
    regression dataset with that column kept among the rows.

    Raises:
        MissingFile: If the file does not exist
        RaggedRows: If a row has a different number of cells than the header
        ParseError: On a non-numeric feature cell (row is the file line number)
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    if (label_column is None) == (target_column is None):
        raise ConfigError("give exactly one of label_column (classification) or target_column (regression)")

    try:
        raw = pd.read_csv(path, dtype=str, header=None, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.ParserError as e:
        raise RaggedRows(f"{path}: {e}")
    except pd.errors.EmptyDataError:
        raise TooFewRows(f"{path} is empty")

    first_line = 2 if header else 1
    if header:
        names = [str(h).strip() for h in raw.iloc[0]]
        body = raw.iloc[1:].reset_index(drop=True)
    else:
        names = [f"x{j}" for j in range(raw.shape[1] - 1)] + [HEADERLESS_LAST_COLUMN]
        body = raw
    if body.empty:
        raise TooFewRows(f"{path} has no data rows")
    short = body.isna().any(axis=1)
    if short.any():
        line = int(np.flatnonzero(short.to_numpy())[0]) + first_line
        raise RaggedRows(f"{path}: line {line} has fewer cells than the first line")
    body.columns = names

    label_name = label_column
    feature_names = [h for h in names if h != label_name]
    if label_name is not None and label_name not in names:
        raise ConfigError(f"label column {label_name!r} not in {path}")
    if target_column is not None and target_column not in names:
        raise ConfigError(f"target column {target_column!r} not in {path}")

    rows = np.empty((len(body), len(feature_names)))
    for j, name in enumerate(feature_names):
        cells = body[name].str.strip()
        values = pd.to_numeric(cells, errors="coerce")
        bad = values.isna().to_numpy()
        if bad.any():
            r = int(np.flatnonzero(bad)[0])
            raise ParseError(r + first_line, name, body[name].iloc[r])
        rows[:, j] = values.to_numpy(dtype=float)

    if label_name is not None:
        text = body[label_name].str.strip()
        class_names = tuple(sorted(text.unique(), key=_label_sort_key))
        lookup = {c: k for k, c in enumerate(class_names)}
        ds = Dataset(
            rows=rows,
            task=Classification(max(len(class_names), 2)),
            labels=text.map(lookup).to_numpy(dtype=int),
            feature_names=tuple(feature_names),
            class_names=class_names,
        )
    else:
        ds = Dataset(
            rows=rows,
            task=Regression(feature_names.index(target_column)),
            feature_names=tuple(feature_names),
        )

    logger.info(f"Loaded {ds.n} rows x {ds.dim} columns from {path}")
    return normalize_dataset(ds) if normalize else ds


def _label_sort_key(label: str) -> Tuple[int, Any]:
    # numeric labels sort numerically ("2" before "10"), text after
    try:
        return (0, float(label))
    except ValueError:
        return (1, label)


def write_csv(ds: Dataset, path: Union[str, Path], label_column: str = DEFAULT_LABEL_COLUMN) -> Path:
    """Write a dataset with a header row; class indices go in ``label_column``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(ds.rows, columns=list(ds.names()))
    if isinstance(ds.task, Classification):
        if label_column in frame.columns:
            raise ConfigError(f"label column {label_column!r} collides with a feature name")
        frame[label_column] = ds.labels
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


# ========================================
# Sidecar
# ========================================

class DatasetSidecar(BaseModel):
    """Everything needed to regenerate a generated dataset."""
    format_version: int = 1
    generator: str = Field(..., description="hierarchical | bn | chain")
    seed: int
    task: str
    label_column: Optional[str] = None
    target_column: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    nodes: Optional[List[str]] = None
    edges: Optional[List[Tuple[str, str]]] = None
    weights: Optional[List[float]] = Field(None, description="Edge weights aligned with edges")
    T: Optional[int] = None
    step_width: Optional[int] = None


def sidecar_path(csv_path: Union[str, Path]) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.json")


def write_sidecar(sidecar: DatasetSidecar, csv_path: Union[str, Path]) -> Path:
    path = sidecar_path(csv_path)
    path.write_text(json.dumps(sidecar.model_dump(mode="json"), sort_keys=True, indent=2) + "\n")
    return path


def read_sidecar(csv_path: Union[str, Path]) -> Optional[DatasetSidecar]:
    """The sidecar of ``csv_path``, or None when the data was not generated here."""
    path = sidecar_path(csv_path)
    if not path.exists():
        return None
    try:
        return DatasetSidecar.model_validate_json(path.read_text())
    except ValidationError as e:
        raise DataError(f"invalid sidecar {path}: {e.error_count()} validation errors")
