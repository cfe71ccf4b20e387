"""
Pytest Configuration and Fixtures

Sets up the test environment and provides common fixtures.
"""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

# Keep a developer's DYNACQ_* settings out of the tests
for key in list(os.environ):
    if key.startswith("DYNACQ_"):
        del os.environ[key]

from dynacq.core.dataset import Classification, Dataset, Regression  # noqa: E402
from dynacq.condmodel import EngineChoice, fit_engine  # noqa: E402
from dynacq.data import gen_chain_timeseries  # noqa: E402


# ========================================
# Datasets
# ========================================

@pytest.fixture
def two_class_data():
    """Two classes, x0 ~ N(+-1.5, 1) carries the signal, x1 and x2 are noise."""
    rng = np.random.default_rng(7)
    n = 600
    y = rng.integers(2, size=n)
    rows = rng.standard_normal((n, 3))
    rows[:, 0] += np.where(y == 1, 1.5, -1.5)
    return Dataset(rows=rows, task=Classification(2), labels=y, feature_names=("x0", "x1", "x2"))


@pytest.fixture
def regression_data():
    """y = x0 + 0.5 x1 + noise stored as the last column."""
    rng = np.random.default_rng(11)
    n = 800
    x = rng.standard_normal((n, 3))
    y = x[:, 0] + 0.5 * x[:, 1] + 0.3 * rng.standard_normal(n)
    return Dataset(rows=np.column_stack([x, y]), task=Regression(3), feature_names=("x0", "x1", "x2", "y"))


@pytest.fixture
def chain_data():
    return gen_chain_timeseries(n=600, T=6, seed=3)


# ========================================
# Engines
# ========================================

@pytest.fixture
def classification_engine(two_class_data):
    return fit_engine(two_class_data, EngineChoice(kind="gaussian"))


@pytest.fixture
def regression_engine(regression_data):
    return fit_engine(regression_data, EngineChoice(kind="gaussian"))


@pytest.fixture
def chain_engine(chain_data):
    return fit_engine(chain_data, EngineChoice(kind="gaussian"))
