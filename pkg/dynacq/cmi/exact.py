"""
Exact CMI oracles: closed-form Gaussian and brute-force discrete.

These back the structure learner's exact CI tests and serve as reference
values for the Monte Carlo estimators.
"""

from typing import Sequence, Tuple

import numpy as np
from scipy.special import rel_entr

from ..condmodel.conditional import condition
from ..condmodel.gaussian import GaussianParams, gaussian_entropy, logdet_psd
from ..core.errors import NotNormalized, OverlappingSets, SupportMismatch
from .estimators import CmiEstimate


def _conditional_cov(g: GaussianParams, targets: Tuple[int, ...], cond: Tuple[int, ...]) -> np.ndarray:
    # Conditional covariance does not depend on the observed values
    cd = condition(g, g.mean[list(cond)], cond, targets)
    return cd.covs[0]


def _exact(value: float) -> CmiEstimate:
    return CmiEstimate(value=max(0.0, float(value)), n_samples=1, estimator="gaussian_exact", std_error=0.0)


def cmi_gaussian_exact(g: GaussianParams, i: int, j: int, cond: Sequence[int] = ()) -> CmiEstimate:
    """
    I(x_i; x_j | x_cond) = -1/2 ln(1 - rho^2), rho the partial correlation.

    Raises:
        OverlappingSets: If i == j or either lies in cond
        NotPositiveDefinite: If the conditioning block cannot be factorized
    """
    cond = tuple(int(c) for c in cond)
    if i == j or i in cond or j in cond:
        raise OverlappingSets(f"pair ({i}, {j}) must be distinct and outside {cond}")
    s = _conditional_cov(g, (int(i), int(j)), cond)
    rho2 = s[0, 1] ** 2 / (s[0, 0] * s[1, 1])
    return _exact(-0.5 * np.log1p(-min(rho2, 1.0 - 1e-16)))


def cmi_gaussian_sets(g: GaussianParams, a: Sequence[int], b: Sequence[int], cond: Sequence[int] = ()) -> CmiEstimate:
    """Block CMI 1/2 [ln|S_aa| + ln|S_bb| - ln|S|] of the covariance S of (a, b) given cond."""
    a = tuple(int(v) for v in a)
    b = tuple(int(v) for v in b)
    cond = tuple(int(c) for c in cond)
    if set(a) & set(b) or (set(a) | set(b)) & set(cond):
        raise OverlappingSets(f"sets {a}, {b} and {cond} must be disjoint")
    s = _conditional_cov(g, a + b, cond)
    k = len(a)
    return _exact(0.5 * (logdet_psd(s[:k, :k]) + logdet_psd(s[k:, k:]) - logdet_psd(s)))


def cmi_gaussian_entropy_form(g: GaussianParams, i: int, j: int, cond: Sequence[int] = ()) -> CmiEstimate:
    """H(x_i | x_cond) - H(x_i | x_j, x_cond) from Gaussian conditional entropies."""
    cond = tuple(int(c) for c in cond)
    if i == j or i in cond or j in cond:
        raise OverlappingSets(f"pair ({i}, {j}) must be distinct and outside {cond}")
    h_i = gaussian_entropy(_conditional_cov(g, (int(i),), cond))
    h_ij = gaussian_entropy(_conditional_cov(g, (int(i),), cond + (int(j),)))
    return _exact(h_i - h_ij)


def cmi_discrete_bruteforce(joint: np.ndarray, i: int, j: int, cond: Sequence[int] = ()) -> CmiEstimate:
    """
    Exact I(a_i; a_j | a_cond) of a full probability table.

    The table has one axis per variable. The sum runs over every outcome
    with positive mass.

    Raises:
        NotNormalized: If entries are negative or do not sum to 1 within 1e-9
    """
    p = np.asarray(joint, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise NotNormalized(f"probability table sums to {p.sum():.12g}")
    cond = tuple(int(c) for c in cond)
    keep = (int(i), int(j)) + cond
    if len(set(keep)) != len(keep):
        raise OverlappingSets(f"variables {keep} must be distinct")

    others = tuple(ax for ax in range(p.ndim) if ax not in keep)
    p = p.sum(axis=others)
    ordered = sorted(keep)
    p = p.transpose([ordered.index(ax) for ax in keep])

    p_ic = p.sum(axis=1, keepdims=True)
    p_jc = p.sum(axis=0, keepdims=True)
    p_c = p.sum(axis=(0, 1), keepdims=True)
    mask = p > 0
    ratio = np.ones_like(p)
    ratio[mask] = (p * p_c)[mask] / (p_ic * p_jc)[mask]
    value = float(np.sum(p[mask] * np.log(ratio[mask])))
    return CmiEstimate(value=max(0.0, value), n_samples=1, estimator="discrete_bruteforce", std_error=0.0)


def kl_discrete(p, q) -> float:
    """
    KL[p || q] in nats with 0 ln(0/q) = 0.

    Raises:
        SupportMismatch: On length mismatch or q = 0 where p > 0
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    if p.shape != q.shape:
        raise SupportMismatch(f"distributions have {p.shape[0]} and {q.shape[0]} outcomes")
    if np.any((q <= 0) & (p > 0)):
        raise SupportMismatch("q has zero mass where p is positive")
    return float(np.sum(rel_entr(p, q)))
