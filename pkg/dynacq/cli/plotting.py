"""
SVG line charts of result CSVs.

The CSV stays the source of truth; the SVG is rendered with a fixed hash
salt and no date stamp so reruns produce identical files.
"""

from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "dynacq"


def plot_curves(
    frames: Sequence[pd.DataFrame],
    labels: Sequence[str],
    path: Union[str, Path],
    x: str = "step",
    y: str = "metric_mean",
    err: str = "metric_stderr",
    ylabel: str = "accuracy",
    title: str = "",
) -> Path:
    """One line (with a standard-error band) per frame."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        for frame, label in zip(frames, labels):
            ax.plot(frame[x], frame[y], marker="o", label=label)
            if err in frame:
                ax.fill_between(frame[x], frame[y] - frame[err], frame[y] + frame[err], alpha=0.2)
        ax.set_xlabel(x.replace("_", " "))
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path
