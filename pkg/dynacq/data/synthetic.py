"""
Synthetic data generators.

- Hierarchical data: x0 ~ U(0, 1) picks which one of the other features
  carries the class signal.
- Linear-Gaussian Bayesian networks sampled ancestrally from a DAG.
- A two-class AR(1) chain whose class drift grows over time, used as the
  time-series benchmark.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..bn.graph import Dag, Edge
from ..condmodel.gaussian import GaussianParams
from ..core.dataset import Classification, Dataset, Regression, normalize
from ..core.errors import ConfigError, InvalidNode

logger = logging.getLogger(__name__)

NOISE_VAR = 0.3


# ========================================
# Hierarchical data
# ========================================

class HierarchicalSpec(BaseModel):
    """Recipe of the hierarchical dataset; w1, w2 are drawn from the seed."""
    n: int = Field(20000, ge=1)
    d: int = Field(10, ge=2, description="x0 plus d-1 gated features")
    noise_var: float = Field(NOISE_VAR, gt=0)
    num_classes: int = Field(2, ge=2)
    seed: int = 0
    per_feature_weights: bool = Field(False, description="Draw (w1, w2) per gated feature instead of once")
    normalize: bool = True


def gated_column(x0: np.ndarray, num_gated: int) -> np.ndarray:
    """Column (1..num_gated) whose range of [0, 1] contains x0."""
    return 1 + np.minimum((np.asarray(x0) * num_gated).astype(int), num_gated - 1)


def hierarchical_rows(
    x0: np.ndarray,
    y: np.ndarray,
    background: np.ndarray,
    gated_noise: np.ndarray,
    w1,
    w2,
    noise_var: float = NOISE_VAR,
) -> np.ndarray:
    """
    Assemble rows from pre-drawn randomness.

    Column 0 is x0; the gated column r gets w1 y + w2 x0 plus noise; every
    other column keeps its standard-normal background draw.
    """
    n, num_gated = background.shape
    w1 = np.broadcast_to(np.asarray(w1, dtype=float), (num_gated,))
    w2 = np.broadcast_to(np.asarray(w2, dtype=float), (num_gated,))
    rows = np.column_stack([x0, background]).astype(float)
    r = gated_column(x0, num_gated)
    rows[np.arange(n), r] = w1[r - 1] * y + w2[r - 1] * x0 + np.sqrt(noise_var) * gated_noise
    return rows


def gen_hierarchical(spec: HierarchicalSpec = HierarchicalSpec()) -> Dataset:
    """Generate the hierarchical classification dataset (min-max normalized unless disabled)."""
    rng = np.random.default_rng(spec.seed)
    num_gated = spec.d - 1
    size = (num_gated,) if spec.per_feature_weights else ()
    w1 = rng.uniform(0.0, 1.0, size=size)
    w2 = rng.uniform(0.0, 1.0, size=size)

    y = rng.integers(spec.num_classes, size=spec.n)
    x0 = rng.uniform(0.0, 1.0, size=spec.n)
    background = rng.standard_normal((spec.n, num_gated))
    gated_noise = rng.standard_normal(spec.n)

    rows = hierarchical_rows(x0, y, background, gated_noise, w1, w2, spec.noise_var)
    ds = Dataset(
        rows=rows,
        task=Classification(spec.num_classes),
        labels=y,
        feature_names=tuple(f"x{i}" for i in range(spec.d)),
    )
    logger.info(f"Generated hierarchical data: n={spec.n}, d={spec.d}, w1={np.round(w1, 4)}, w2={np.round(w2, 4)}")
    return normalize(ds) if spec.normalize else ds


# ========================================
# Linear-Gaussian Bayesian networks
# ========================================

class LinearGaussianBnSpec(BaseModel):
    """
    Recipe of a linear-Gaussian network over ``dag``.

    Edge weights are drawn from U(weight_low, weight_high) in sorted edge
    order unless ``weights`` pins them.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    dag: Dag
    n: int = Field(5000, ge=1)
    noise_var: float = Field(NOISE_VAR, gt=0)
    weight_low: float = 0.0
    weight_high: float = 1.0
    weights: Optional[Dict[Edge, float]] = None
    task: Literal["classification", "regression"] = "regression"
    target: Optional[str] = Field(None, description="Target node name; default is the last node in topological order")
    seed: int = 0

    def target_node(self) -> int:
        if self.target is None:
            return self.dag.topological_order()[-1]
        return self.dag.index(self.target)


@dataclass(frozen=True, eq=False)
class LinearGaussianBn:
    """
    x_c = sum over parents p of weights[p, c] x_p + N(0, noise_var).

    Attributes:
        dag: Network structure
        weights: (d, d) matrix, weights[p, c] nonzero only on edges
        noise_var: Node noise variance
    """

    dag: Dag
    weights: np.ndarray
    noise_var: float = NOISE_VAR

    @cached_property
    def params(self) -> GaussianParams:
        """Implied joint Gaussian: x = (I - W^T)^-1 e."""
        d = self.dag.num_nodes
        A = np.linalg.inv(np.eye(d) - self.weights.T)
        cov = self.noise_var * A @ A.T
        return GaussianParams(mean=np.zeros(d), cov=(cov + cov.T) / 2)

    def params_in(self, order: Sequence[int]) -> GaussianParams:
        """Joint Gaussian with nodes permuted so that old node order[k] is coordinate k."""
        idx = np.asarray(order, dtype=int)
        return GaussianParams(mean=self.params.mean[idx], cov=self.params.cov[np.ix_(idx, idx)])

    def edge_weights(self) -> Dict[Edge, float]:
        return {(a, b): float(self.weights[a, b]) for a, b in self.dag.edges}

    def sample(self, n: int, seed=None) -> np.ndarray:
        """Ancestral sampling in topological order."""
        rng = np.random.default_rng(seed)
        d = self.dag.num_nodes
        noise = np.sqrt(self.noise_var) * rng.standard_normal((n, d))
        values = np.zeros((n, d))
        for v in self.dag.topological_order():
            parents = sorted(self.dag.parents(v))
            values[:, v] = noise[:, v] + (values[:, parents] @ self.weights[parents, v] if parents else 0.0)
        return values


def build_linear_gaussian_bn(spec: LinearGaussianBnSpec) -> LinearGaussianBn:
    d = spec.dag.num_nodes
    weights = np.zeros((d, d))
    if spec.weights is not None:
        unknown = set(spec.weights) - set(spec.dag.edges)
        if unknown:
            raise InvalidNode(f"weights given for edges not in the DAG: {sorted(unknown)}")
        for (a, b) in spec.dag.edges:
            if (a, b) not in spec.weights:
                raise ConfigError(f"missing weight for edge {spec.dag.names[a]} -> {spec.dag.names[b]}")
            weights[a, b] = spec.weights[(a, b)]
    else:
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
        draws = rng.uniform(spec.weight_low, spec.weight_high, size=len(spec.dag.edges))
        for (a, b), w in zip(spec.dag.edges, draws):
            weights[a, b] = w
    return LinearGaussianBn(dag=spec.dag, weights=weights, noise_var=spec.noise_var)


def classification_order(dag: Dag, target: int) -> Tuple[int, ...]:
    """Node order that moves the target to the end (the label slot)."""
    return tuple(v for v in range(dag.num_nodes) if v != target) + (target,)


def gen_linear_gaussian_bn(spec: LinearGaussianBnSpec) -> Tuple[Dataset, Dag]:
    """
    Sample a dataset from the network and return it with its DAG.

    Regression keeps every node as a column with the target continuous.
    Classification splits the target at its median into 2 balanced classes,
    removes it from the features and returns the DAG renumbered so the
    target is the last node (named ``y``).
    """
    bn = build_linear_gaussian_bn(spec)
    values = bn.sample(spec.n, np.random.SeedSequence([spec.seed, 1]))
    target = spec.target_node()
    names = spec.dag.names

    if spec.task == "regression":
        ds = Dataset(rows=values, task=Regression(target), feature_names=names)
        return ds, spec.dag

    order = classification_order(spec.dag, target)
    labels = (values[:, target] > np.median(values[:, target])).astype(int)
    features = order[:-1]
    ds = Dataset(
        rows=values[:, list(features)],
        task=Classification(2),
        labels=labels,
        feature_names=tuple(names[v] for v in features),
        class_names=(f"{names[target]}_low", f"{names[target]}_high"),
    )
    return ds, truth_dag(spec)


def truth_dag(spec: LinearGaussianBnSpec) -> Dag:
    """Ground-truth DAG over the generated columns (target last and named y for classification)."""
    if spec.task == "regression":
        return spec.dag
    order = classification_order(spec.dag, spec.target_node())
    return spec.dag.relabel(order, [spec.dag.names[v] for v in order[:-1]] + ["y"])


def generating_params(spec: LinearGaussianBnSpec) -> GaussianParams:
    """Joint Gaussian over the dataset's columns (plus the target last for classification)."""
    bn = build_linear_gaussian_bn(spec)
    if spec.task == "regression":
        return bn.params
    return bn.params_in(classification_order(spec.dag, spec.target_node()))


# ========================================
# Time series
# ========================================

def gen_chain_timeseries(
    n: int = 2000,
    T: int = 12,
    step_width: int = 1,
    drift: float = 1.0,
    rho: float = 0.5,
    seed: int = 0,
) -> Dataset:
    """
    Two-class AR(1) chain, time-major columns.

    x_t = rho x_{t-1} + s drift (t + 1) / T + sqrt(1 - rho^2) e_t with
    s = -1 for class 0 and +1 for class 1, so early steps carry little
    class signal and late steps a lot.
    """
    if T < 1 or step_width < 1 or not -1.0 < rho < 1.0:
        raise ConfigError(f"invalid chain parameters: T={T}, step_width={step_width}, rho={rho}")
    rng = np.random.default_rng(seed)
    y = rng.integers(2, size=n)
    sign = (2 * y - 1).astype(float)[:, None]
    scale = np.sqrt(1.0 - rho ** 2)

    series = np.zeros((n, T, step_width))
    prev = np.zeros((n, step_width))
    for t in range(T):
        prev = rho * prev + sign * drift * (t + 1) / T + scale * rng.standard_normal((n, step_width))
        series[:, t, :] = prev

    if step_width == 1:
        names = tuple(f"t{t}" for t in range(T))
    else:
        names = tuple(f"t{t}_{k}" for t in range(T) for k in range(step_width))
    return Dataset(
        rows=series.reshape(n, T * step_width),
        task=Classification(2),
        labels=y,
        feature_names=names,
    )
