"""
Gaussian mixture engine fitted by expectation-maximization.

Responsibilities are computed in the log domain; components that collapse
are reset onto a data point with the global covariance.
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
from scipy.special import logsumexp

from ..core.dataset import Dataset
from ..core.errors import DidNotConverge, InsufficientData, NotPositiveDefinite, DimensionMismatch
from .gaussian import (
    GaussianParams,
    REGULARIZATION,
    as_matrix,
    gaussian_logpdf,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """
    Finite Gaussian mixture.

    Attributes:
        weights: Mixing weights on the simplex
        components: One GaussianParams per component
        converged: False when EM stopped at max_iter
        log_likelihood_trace: Mean training log-likelihood after each E-step
    """

    weights: np.ndarray
    components: Tuple[GaussianParams, ...]
    converged: bool = True
    log_likelihood_trace: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.shape[0] != len(self.components) or not self.components:
            raise DimensionMismatch(f"{weights.shape[0]} weights for {len(self.components)} components")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise NotPositiveDefinite("mixture weights must be non-negative and sum to 1")
        dims = {c.dim for c in self.components}
        if len(dims) != 1:
            raise DimensionMismatch(f"components disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def num_components(self) -> int:
        return len(self.components)

    def log_density(self, rows: np.ndarray) -> np.ndarray:
        """Per-row log p(x) under the mixture."""
        return logsumexp(self._component_log_joint(np.atleast_2d(rows)), axis=1)

    def _component_log_joint(self, rows: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights)
        cols = [gaussian_logpdf(rows, c.mean, c.cov) for c in self.components]
        return np.column_stack(cols) + log_w


def _farthest_point_init(rows: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """Pick m distinct rows: a seeded first row, then repeatedly the row farthest from the chosen set."""
    chosen = [int(rng.integers(rows.shape[0]))]
    dist = np.sum((rows - rows[chosen[0]]) ** 2, axis=1)
    for _ in range(1, m):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.sum((rows - rows[nxt]) ** 2, axis=1))
    return rows[chosen].copy()


def fit_mixture_em(
    train: Union[Dataset, np.ndarray],
    m: int,
    seed: int = 0,
    tol: float = 1e-6,
    max_iter: int = 500,
    regularization: float = REGULARIZATION,
    strict: bool = False,
) -> MixtureModel:
    """
    Fit an m-component full-covariance Gaussian mixture by EM.

    Args:
        train: Training dataset or row matrix
        m: Number of components
        seed: Seed for the initialization
        tol: Stop when the mean log-likelihood improves by less than this
        max_iter: Iteration cap; hitting it returns the best-so-far model
            with ``converged=False``
        regularization: Added to every component covariance diagonal
        strict: Raise instead of returning an unconverged model

    Returns:
        Fitted MixtureModel

    Raises:
        InsufficientData: If n < 10 * m
        DidNotConverge: If ``strict`` and EM hits ``max_iter``
    """
    rows = as_matrix(train)
    n, d = rows.shape
    if m < 1:
        raise InsufficientData(f"need at least one component, got {m}")
    if n < 10 * m:
        raise InsufficientData(f"need at least {10 * m} rows for {m} components, got {n}")

    rng = np.random.default_rng(seed)
    ridge = regularization * np.eye(d)
    centered = rows - rows.mean(axis=0)
    global_cov = centered.T @ centered / n + ridge

    means = _farthest_point_init(rows, m, rng)
    covs = np.repeat(global_cov[None, :, :], m, axis=0)
    weights = np.full(m, 1.0 / m)

    trace = []
    best = None
    converged = False

    for iteration in range(max_iter):
        # E-step
        log_joint = np.empty((n, m))
        for k in range(m):
            try:
                log_joint[:, k] = gaussian_logpdf(rows, means[k], covs[k])
            except NotPositiveDefinite:
                logger.warning(f"EM component {k} lost positive definiteness, resetting")
                means[k] = rows[int(rng.integers(n))]
                covs[k] = global_cov
                log_joint[:, k] = gaussian_logpdf(rows, means[k], covs[k])
        with np.errstate(divide="ignore"):
            log_joint += np.log(weights)
        log_norm = logsumexp(log_joint, axis=1)
        mean_ll = float(np.mean(log_norm))
        trace.append(mean_ll)

        if best is None or mean_ll >= best[0]:
            best = (mean_ll, weights.copy(), means.copy(), covs.copy())

        if iteration > 0 and mean_ll - trace[-2] < tol:
            converged = True
            break

        resp = np.exp(log_joint - log_norm[:, None])

        # M-step
        nk = resp.sum(axis=0)
        for k in range(m):
            if nk[k] < 1e-8 * n:
                logger.warning(f"EM component {k} is empty, resetting onto a data point")
                means[k] = rows[int(rng.integers(n))]
                covs[k] = global_cov
                nk[k] = 1.0
                continue
            means[k] = resp[:, k] @ rows / nk[k]
            diff = rows - means[k]
            cov = (resp[:, k, None] * diff).T @ diff / nk[k]
            covs[k] = 0.5 * (cov + cov.T) + ridge
        weights = nk / nk.sum()

    if not converged and strict:
        raise DidNotConverge(f"EM did not converge in {max_iter} iterations (m={m})")
    if not converged:
        logger.warning(
            f"EM did not converge in {max_iter} iterations (m={m}); returning best-so-far model"
        )

    _, w_best, mu_best, cov_best = best
    components = tuple(GaussianParams(mean=mu_best[k], cov=cov_best[k]) for k in range(m))
    logger.info(
        f"Fitted {m}-component mixture on {n} rows in {len(trace)} iterations "
        f"(mean log-likelihood {trace[-1]:.4f}, converged={converged})"
    )
    return MixtureModel(
        weights=w_best / w_best.sum(),
        components=components,
        converged=converged,
        log_likelihood_trace=tuple(trace),
    )


def as_mixture(model: Union[GaussianParams, MixtureModel]) -> MixtureModel:
    """Wrap a single Gaussian as a one-component mixture."""
    if isinstance(model, MixtureModel):
        return model
    return MixtureModel(weights=np.ones(1), components=(model,))
