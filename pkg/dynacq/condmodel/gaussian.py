"""
Joint Gaussian density engine.

Maximizing the joint Gaussian log-likelihood maximizes every arbitrary
conditional log p(x_u | x_o) of the same family at once, so a closed-form
MLE fit stands in for the masked multi-task training of a flow model.
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import linalg

from ..core.dataset import Dataset
from ..core.errors import (
    InsufficientData,
    NotPositiveDefinite,
    SingularCovariance,
    DimensionMismatch,
)

logger = logging.getLogger(__name__)

# Added to every fitted covariance diagonal
REGULARIZATION = 1e-6

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True, eq=False)
class GaussianParams:
    """Mean vector and symmetric positive-definite covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise DimensionMismatch(f"covariance {cov.shape} does not match mean of length {mean.shape[0]}")
        if not np.allclose(cov, cov.T, atol=1e-9, rtol=0.0):
            raise NotPositiveDefinite("covariance is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def as_matrix(data: Union[Dataset, np.ndarray]) -> np.ndarray:
    """Row matrix of a Dataset or array-like."""
    if isinstance(data, Dataset):
        return data.rows
    rows = np.asarray(data, dtype=float)
    if rows.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {rows.shape}")
    return rows


def cholesky(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, raising NotPositiveDefinite on failure."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"matrix is not positive definite: {e}")


def logdet_psd(cov: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(cholesky(cov)))))


def gaussian_logpdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """
    Log-density of N(mean, cov) at each row of ``x``.

    Args:
        x: (n, k) points or a single (k,) point
        mean: (k,) mean
        cov: (k, k) covariance

    Returns:
        (n,) log-densities, or a scalar array for a single point
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    k = mean.shape[0]
    if k == 0:
        out = np.zeros(pts.shape[0])
        return out[0] if single else out
    L = cholesky(cov)
    z = linalg.solve_triangular(L, (pts - mean).T, lower=True)
    maha = np.sum(z * z, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    out = -0.5 * (k * LOG_2PI + logdet + maha)
    return out[0] if single else out


def fit_gaussian(train: Union[Dataset, np.ndarray], regularization: float = REGULARIZATION) -> GaussianParams:
    """
    Maximum-likelihood Gaussian over all columns.

    Args:
        train: Training dataset or row matrix
        regularization: Added to the covariance diagonal

    Returns:
        GaussianParams with MLE mean and regularized MLE covariance

    Raises:
        InsufficientData: If n <= d
        SingularCovariance: If the regularized covariance still fails factorization
    """
    rows = as_matrix(train)
    n, d = rows.shape
    if n <= d:
        raise InsufficientData(f"need more rows than columns to fit a Gaussian (n={n}, d={d})")

    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = centered.T @ centered / n
    cov = 0.5 * (cov + cov.T) + regularization * np.eye(d)

    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise SingularCovariance(f"covariance of {d} columns is singular even after +{regularization}I")

    logger.debug(f"Fitted Gaussian on {n} rows x {d} columns")
    return GaussianParams(mean=mean, cov=cov)


def gaussian_entropy(cov: np.ndarray) -> float:
    """
    Differential entropy in nats of a Gaussian with covariance ``cov``.

    H = 1/2 ln((2 pi e)^k det cov), with the log-determinant taken from
    the Cholesky factor.

    Raises:
        NotPositiveDefinite: If ``cov`` is not positive definite
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    k = cov.shape[0]
    return 0.5 * (k * (LOG_2PI + 1.0) + logdet_psd(cov))
