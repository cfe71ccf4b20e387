"""
Arbitrary conditionals p(x_u | x_o) of Gaussian and mixture engines.

Every conditional is stored in one shape: a (possibly single-component)
mixture with log weights, per-component means and covariances, and an
optional class label per component. Conditioning a conditional again is
allowed; indices are always global feature indices.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from ..core.errors import (
    DimensionMismatch,
    EmptyTarget,
    IndexOutOfRange,
    NotPositiveDefinite,
    OverlappingSets,
)
from .gaussian import GaussianParams, cholesky, gaussian_logpdf
from .mixture import MixtureModel

logger = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


@dataclass(frozen=True, eq=False)
class ConditionalDistribution:
    """
    Mixture of Gaussians over the global indices ``indices``.

    Attributes:
        indices: Global feature indices covered, in column order
        log_weights: (M,) normalized log mixing weights
        means: (M, k) component means
        covs: (M, k, k) component covariances
        labels: (M,) class label per component, or None
    """

    indices: Tuple[int, ...]
    log_weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        k = len(self.indices)
        log_w = np.asarray(self.log_weights, dtype=float).reshape(-1)
        means = np.asarray(self.means, dtype=float).reshape(log_w.shape[0], k)
        covs = np.asarray(self.covs, dtype=float).reshape(log_w.shape[0], k, k)
        object.__setattr__(self, "log_weights", log_w)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int).reshape(-1)
            if labels.shape[0] != log_w.shape[0]:
                raise DimensionMismatch(f"{labels.shape[0]} labels for {log_w.shape[0]} components")
            object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return len(self.indices)

    @property
    def num_components(self) -> int:
        return self.log_weights.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def positions(self, indices: Sequence[int]) -> np.ndarray:
        """Local column positions of global ``indices``."""
        lookup = {g: p for p, g in enumerate(self.indices)}
        try:
            return np.array([lookup[int(i)] for i in indices], dtype=int)
        except KeyError as e:
            raise IndexOutOfRange(f"index {e.args[0]} is not covered by this distribution")


ModelLike = Union[GaussianParams, MixtureModel, ConditionalDistribution]


def as_conditional(model: ModelLike) -> ConditionalDistribution:
    """View a Gaussian or mixture as an unconditioned ConditionalDistribution."""
    if isinstance(model, ConditionalDistribution):
        return model
    if isinstance(model, GaussianParams):
        return ConditionalDistribution(
            indices=tuple(range(model.dim)),
            log_weights=np.zeros(1),
            means=model.mean[None, :],
            covs=model.cov[None, :, :],
        )
    if isinstance(model, MixtureModel):
        with np.errstate(divide="ignore"):
            log_w = np.log(model.weights)
        return ConditionalDistribution(
            indices=tuple(range(model.dim)),
            log_weights=log_w,
            means=np.stack([c.mean for c in model.components]),
            covs=np.stack([c.cov for c in model.components]),
        )
    raise TypeError(f"cannot condition a {type(model).__name__}")


def _check_observation(cd: ConditionalDistribution, x_o, o) -> Tuple[np.ndarray, np.ndarray]:
    o = tuple(int(i) for i in o)
    x_o = np.asarray(x_o, dtype=float).reshape(-1)
    if x_o.shape[0] != len(o):
        raise DimensionMismatch(f"{x_o.shape[0]} observed values for {len(o)} observed indices")
    return x_o, cd.positions(o)


def _normalize_log_weights(log_w: np.ndarray) -> np.ndarray:
    total = logsumexp(log_w)
    if not np.isfinite(total):
        raise NotPositiveDefinite("every mixture component has zero weight after conditioning")
    return log_w - total


def observed_log_weights(model: ModelLike, x_o, o: Sequence[int]) -> np.ndarray:
    """
    Component log weights after observing x_o.

    log w'_k = log w_k + log N(x_o; mu_{k,o}, Sigma_{k,oo}), normalized by
    log-sum-exp. With o empty the weights are returned unchanged.
    """
    cd = as_conditional(model)
    x_o, po = _check_observation(cd, x_o, o)
    if po.size == 0:
        return cd.log_weights.copy()
    log_w = cd.log_weights.copy()
    for k in range(cd.num_components):
        if np.isneginf(log_w[k]):
            continue
        log_w[k] += gaussian_logpdf(x_o, cd.means[k, po], cd.covs[k][np.ix_(po, po)])
    return _normalize_log_weights(log_w)


def condition(model: ModelLike, x_o, o: Sequence[int], u: Sequence[int]) -> ConditionalDistribution:
    """
    Condition a model on x_o and return the distribution of x_u.

    Gaussian components use the Schur complement:
    mean = mu_u + S_uo S_oo^-1 (x_o - mu_o), cov = S_uu - S_uo S_oo^-1 S_ou.
    Mixture weights are reweighted by each component's evidence for x_o.

    Args:
        model: GaussianParams, MixtureModel or an existing conditional
        x_o: Observed values aligned with ``o``
        o: Observed global indices
        u: Target global indices

    Returns:
        ConditionalDistribution over ``u``

    Raises:
        OverlappingSets: If o and u intersect
        EmptyTarget: If u is empty
        DimensionMismatch: If x_o and o differ in length
    """
    cd = as_conditional(model)
    o = tuple(int(i) for i in o)
    u = tuple(int(i) for i in u)
    if not u:
        raise EmptyTarget("conditioning target set is empty")
    overlap = set(o) & set(u)
    if overlap:
        raise OverlappingSets(f"indices {sorted(overlap)} are both observed and targeted")
    if len(set(u)) != len(u):
        raise OverlappingSets(f"duplicate target indices: {u}")

    x_o, po = _check_observation(cd, x_o, o)
    pu = cd.positions(u)
    m = cd.num_components

    means = np.empty((m, len(u)))
    covs = np.empty((m, len(u), len(u)))
    log_w = cd.log_weights.copy()

    for k in range(m):
        mu = cd.means[k]
        sigma = cd.covs[k]
        s_uu = sigma[np.ix_(pu, pu)]
        if po.size == 0:
            means[k] = mu[pu]
            covs[k] = s_uu
            continue
        s_oo = sigma[np.ix_(po, po)]
        s_uo = sigma[np.ix_(pu, po)]
        try:
            factor = linalg.cho_factor(s_oo, lower=True)
        except linalg.LinAlgError as e:
            raise NotPositiveDefinite(f"observed block of component {k} is not positive definite: {e}")
        resid = x_o - mu[po]
        means[k] = mu[pu] + s_uo @ linalg.cho_solve(factor, resid)
        cond = s_uu - s_uo @ linalg.cho_solve(factor, s_uo.T)
        covs[k] = 0.5 * (cond + cond.T)
        if m > 1 and not np.isneginf(log_w[k]):
            log_w[k] += gaussian_logpdf(x_o, mu[po], s_oo)

    if m > 1:
        log_w = _normalize_log_weights(log_w)

    return ConditionalDistribution(
        indices=u,
        log_weights=log_w,
        means=means,
        covs=covs,
        labels=cd.labels,
    )


def marginal(cd: ConditionalDistribution, indices: Sequence[int]) -> ConditionalDistribution:
    """Restrict a conditional to a subset of its indices."""
    indices = tuple(int(i) for i in indices)
    if not indices:
        raise EmptyTarget("marginal target set is empty")
    pos = cd.positions(indices)
    return ConditionalDistribution(
        indices=indices,
        log_weights=cd.log_weights,
        means=cd.means[:, pos],
        covs=cd.covs[:, pos][:, :, pos],
        labels=cd.labels,
    )


def sample(cd: ConditionalDistribution, n: int, seed: SeedLike = None) -> np.ndarray:
    """
    Draw ``n`` i.i.d. samples from a conditional.

    A component is picked per draw from the mixture weights, then its
    Gaussian is sampled through the Cholesky factor.

    Returns:
        (n, |u|) matrix
    """
    if n < 1:
        raise DimensionMismatch(f"sample count must be at least 1, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights = cd.weights
    weights = weights / weights.sum()
    comps = rng.choice(cd.num_components, size=n, p=weights)
    z = rng.standard_normal((n, cd.dim))
    out = np.empty((n, cd.dim))
    for k in np.unique(comps):
        mask = comps == k
        L = cholesky(cd.covs[k])
        out[mask] = cd.means[k] + z[mask] @ L.T
    return out


def component_log_joint(cd: ConditionalDistribution, x_u) -> np.ndarray:
    """(n, M) matrix of log w_k + log N(x_u; mu_k, Sigma_k)."""
    pts = np.atleast_2d(np.asarray(x_u, dtype=float))
    if pts.shape[1] != cd.dim:
        raise DimensionMismatch(f"points have {pts.shape[1]} coordinates, distribution has {cd.dim}")
    out = np.full((pts.shape[0], cd.num_components), -np.inf)
    for k in range(cd.num_components):
        if np.isneginf(cd.log_weights[k]):
            continue
        out[:, k] = cd.log_weights[k] + gaussian_logpdf(pts, cd.means[k], cd.covs[k])
    return out


def log_density(cd: ConditionalDistribution, x_u):
    """
    Log-density in nats at one point (|u|,) or a batch (n, |u|).

    Raises:
        DimensionMismatch: If the point size differs from |u|
    """
    x_u = np.asarray(x_u, dtype=float)
    single = x_u.ndim <= 1
    if single and x_u.reshape(-1).shape[0] != cd.dim:
        raise DimensionMismatch(f"point has {x_u.size} coordinates, distribution has {cd.dim}")
    values = logsumexp(component_log_joint(cd, x_u.reshape(-1, cd.dim) if single else x_u), axis=1)
    return float(values[0]) if single else values


def label_posterior(cd: ConditionalDistribution, x_u, num_labels: int) -> np.ndarray:
    """
    Posterior over component labels at each point.

    Returns:
        (n, num_labels) rows on the simplex
    """
    if cd.labels is None:
        raise DimensionMismatch("distribution carries no component labels")
    log_joint = component_log_joint(cd, x_u)
    return group_softmax(log_joint, cd.labels, num_labels)


def group_softmax(log_joint: np.ndarray, labels: np.ndarray, num_labels: int) -> np.ndarray:
    """Softmax over labels of per-component log masses grouped by label."""
    log_joint = np.atleast_2d(log_joint)
    grouped = np.full((log_joint.shape[0], num_labels), -np.inf)
    for c in range(num_labels):
        cols = labels == c
        if np.any(cols):
            grouped[:, c] = logsumexp(log_joint[:, cols], axis=1)
    grouped -= logsumexp(grouped, axis=1, keepdims=True)
    return np.exp(grouped)


def predictive_mean(cd: ConditionalDistribution) -> np.ndarray:
    """Mixture mean sum_k w_k mu_k."""
    return cd.weights @ cd.means


def predictive_variance(cd: ConditionalDistribution) -> np.ndarray:
    """Mixture covariance (law of total variance)."""
    w = cd.weights
    mean = w @ cd.means
    second = np.einsum("k,kij->ij", w, cd.covs) + np.einsum("k,ki,kj->ij", w, cd.means, cd.means)
    cov = second - np.outer(mean, mean)
    return 0.5 * (cov + cov.T)
