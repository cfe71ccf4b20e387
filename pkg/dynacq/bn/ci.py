"""
Conditional-independence oracles for structure learning.

An oracle answers (i, j, cond) -> CiResult and is symmetric in i and j.
Results are cached on the canonical query so repeated tests are free.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal, Protocol, Sequence, Tuple

import numpy as np

from ..cmi.estimators import DEFAULT_SAMPLES, cmi_pairwise_mc
from ..cmi.exact import cmi_gaussian_exact
from ..condmodel.conditional import ModelLike
from ..condmodel.gaussian import GaussianParams, fit_gaussian
from ..core.errors import ConfigError

logger = logging.getLogger(__name__)

# Exact oracles treat anything at or below this as zero
EXACT_FLOOR = 1e-12

DEFAULT_EXACT_EPSILON = 0.0
DEFAULT_MC_EPSILON = 0.015


@dataclass(frozen=True)
class CiResult:
    independent: bool
    stat: float


class CiOracle(Protocol):
    num_nodes: int
    epsilon: float

    def test(self, i: int, j: int, cond: Sequence[int] = ()) -> CiResult:
        ...


def canonical_query(i: int, j: int, cond: Sequence[int]) -> Tuple[int, int, Tuple[int, ...]]:
    a, b = sorted((int(i), int(j)))
    return a, b, tuple(sorted(int(c) for c in cond))


class GaussianExactOracle:
    """Closed-form partial-correlation CMI of a known Gaussian."""

    def __init__(self, params: GaussianParams, epsilon: float = DEFAULT_EXACT_EPSILON):
        if epsilon < 0:
            raise ConfigError(f"epsilon must be non-negative, got {epsilon}")
        self.params = params
        self.num_nodes = params.dim
        self.epsilon = float(epsilon)
        self._cached = lru_cache(maxsize=None)(self._compute)

    def _compute(self, i: int, j: int, cond: Tuple[int, ...]) -> CiResult:
        stat = cmi_gaussian_exact(self.params, i, j, cond).value
        return CiResult(independent=stat <= max(self.epsilon, EXACT_FLOOR), stat=stat)

    def test(self, i: int, j: int, cond: Sequence[int] = ()) -> CiResult:
        return self._cached(*canonical_query(i, j, cond))


class EngineMcOracle:
    """
    Monte Carlo CMI of a fitted engine, averaged over reference rows.

    With ``null="fixed"`` a pair is independent when the statistic is at
    most ``epsilon``. With ``null="permutation"`` column j of ``rows`` is
    shuffled, the engine refitted and the statistic recomputed
    ``n_permutations`` times; the pair is independent when the observed
    statistic is at most the 95th percentile of that null.
    """

    def __init__(
        self,
        model: ModelLike,
        rows: np.ndarray,
        epsilon: float = DEFAULT_MC_EPSILON,
        n_samples: int = DEFAULT_SAMPLES,
        seed: int = 0,
        null: Literal["fixed", "permutation"] = "fixed",
        n_permutations: int = 19,
        max_reference_rows: int = 200,
        refit: Callable[[np.ndarray], ModelLike] = fit_gaussian,
    ):
        if epsilon < 0:
            raise ConfigError(f"epsilon must be non-negative, got {epsilon}")
        if null not in ("fixed", "permutation"):
            raise ConfigError(f"unknown null mode {null!r}")
        self.model = model
        self.rows = np.asarray(rows, dtype=float)
        self.num_nodes = self.rows.shape[1]
        self.epsilon = float(epsilon)
        self.n_samples = n_samples
        self.seed = seed
        self.null = null
        self.n_permutations = n_permutations
        self.refit = refit
        order = np.random.default_rng(seed).permutation(self.rows.shape[0])
        self.reference_rows = self.rows[order[:max_reference_rows]]
        self._cached = lru_cache(maxsize=None)(self._compute)

    def _query_seed(self, i: int, j: int, cond: Tuple[int, ...]) -> int:
        return int(np.random.SeedSequence([self.seed, i, j, *cond]).generate_state(1)[0])

    def _statistic(self, model: ModelLike, i: int, j: int, cond: Tuple[int, ...], seed: int) -> float:
        return cmi_pairwise_mc(model, i, j, cond, self.reference_rows, self.n_samples, seed).value

    def _null_threshold(self, i: int, j: int, cond: Tuple[int, ...], seed: int) -> float:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        null_stats = []
        for _ in range(self.n_permutations):
            shuffled = self.rows.copy()
            shuffled[:, j] = rng.permutation(shuffled[:, j])
            null_stats.append(self._statistic(self.refit(shuffled), i, j, cond, seed))
        return float(np.percentile(null_stats, 95))

    def _compute(self, i: int, j: int, cond: Tuple[int, ...]) -> CiResult:
        seed = self._query_seed(i, j, cond)
        stat = self._statistic(self.model, i, j, cond, seed)
        threshold = self.epsilon if self.null == "fixed" else self._null_threshold(i, j, cond, seed)
        logger.debug(f"CI test ({i}, {j} | {cond}): stat={stat:.5f}, threshold={threshold:.5f}")
        return CiResult(independent=stat <= threshold, stat=stat)

    def test(self, i: int, j: int, cond: Sequence[int] = ()) -> CiResult:
        return self._cached(*canonical_query(i, j, cond))


def default_epsilon(oracle_kind: str, estimated: bool = False) -> float:
    """
    Zero for exact oracles on known parameters, the MC noise floor otherwise.

    ``estimated`` marks an exact oracle built on a sample fit, whose
    statistics are never exactly zero.
    """
    if oracle_kind == "exact" and not estimated:
        return DEFAULT_EXACT_EPSILON
    return DEFAULT_MC_EPSILON
