"""
Constraint-based structure learning in four phases.

1. Markov blankets from pairwise tests conditioned on every other node
   (in a faithful model j is in MB(i) iff I(x_i; x_j | rest) > 0).
2. Spouse links of the moral graph are deleted when a separating set is
   found among subsets of the smaller blanket.
3. V-structures are oriented from the recorded separating sets.
4. Remaining edges are oriented without creating new v-structures or
   cycles: forced orientations first, then seeded choices.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from ..condmodel.engine import EngineChoice
from ..condmodel.gaussian import GaussianParams, fit_gaussian
from ..condmodel.mixture import fit_mixture_em
from ..core.dataset import Classification, Dataset
from ..core.errors import ConfigError, CyclicGraph, NoValidExtension
from .ci import CiOracle, EngineMcOracle, GaussianExactOracle, default_epsilon
from .graph import Dag, Pdag, meek_closure, v_structures

logger = logging.getLogger(__name__)

MAX_SEPSET_SIZE = 4


@dataclass
class StructureResult:
    """Output of the separating-set phase."""
    pdag: Pdag
    sepsets: Dict[Tuple[int, int], Tuple[int, ...]] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)


def learn_markov_blankets(ci: CiOracle, d: Optional[int] = None, workers: int = 1) -> Tuple[FrozenSet[int], ...]:
    """
    Per-node Markov blankets from full-conditioning pairwise tests.

    Symmetric by construction: each dependent pair enters both blankets.
    """
    d = ci.num_nodes if d is None else d
    pairs = list(combinations(range(d), 2))

    def run(pair):
        i, j = pair
        rest = tuple(k for k in range(d) if k not in pair)
        return ci.test(i, j, rest)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(p) for p in pairs]

    blankets = [set() for _ in range(d)]
    for (i, j), result in zip(pairs, results):
        if not result.independent:
            blankets[i].add(j)
            blankets[j].add(i)
    logger.info(f"Markov blankets found: {sum(len(b) for b in blankets) // 2} linked pairs over {d} nodes")
    return tuple(frozenset(b) for b in blankets)


def _find_sepset(ci: CiOracle, i: int, j: int, pool: Sequence[int], max_size: int) -> Optional[Tuple[int, ...]]:
    for size in range(0, min(max_size, len(pool)) + 1):
        for subset in combinations(sorted(pool), size):
            if ci.test(i, j, subset).independent:
                return subset
    return None


def resolve_structure(
    mbs: Sequence[FrozenSet[int]],
    ci: CiOracle,
    names: Optional[Sequence[str]] = None,
    max_sepset_size: int = MAX_SEPSET_SIZE,
) -> StructureResult:
    """
    Moral graph -> skeleton with separating sets -> oriented v-structures.

    A deleted link that no common neighbor outside its separating set
    explains is reported as an inconsistency; deletion wins. When two
    v-structures disagree on an edge the first orientation is kept.
    """
    d = len(mbs)
    for i, mb in enumerate(mbs):
        for j in mb:
            if i not in mbs[j]:
                raise ConfigError(f"Markov blankets are not symmetric at ({i}, {j})")

    linked = sorted({tuple(sorted((i, j))) for i, mb in enumerate(mbs) for j in mb})
    sepsets: Dict[Tuple[int, int], Tuple[int, ...]] = {}
    skeleton = set()
    for i, j in linked:
        mb_i = set(mbs[i]) - {j}
        mb_j = set(mbs[j]) - {i}
        pool = mb_i if len(mb_i) <= len(mb_j) else mb_j
        found = _find_sepset(ci, i, j, sorted(pool), max_sepset_size)
        if found is None:
            skeleton.add(frozenset((i, j)))
        else:
            sepsets[(i, j)] = found
            logger.debug(f"Deleted link {i}-{j} with separating set {found}")

    result = StructureResult(pdag=Pdag(d, set(), set(skeleton), tuple(names) if names else None), sepsets=sepsets)
    neighbors = {v: {w for e in skeleton if v in e for w in e if w != v} for v in range(d)}

    for (i, j), sepset in sorted(sepsets.items()):
        colliders = sorted((neighbors[i] & neighbors[j]) - set(sepset))
        if not colliders:
            result.warnings.append(
                f"link {i}-{j} was deleted but no common neighbor outside {sepset} explains it"
            )
        for k in colliders:
            for parent in (i, j):
                if (k, parent) in result.pdag.directed:
                    result.warnings.append(f"conflicting orientation on {parent}-{k}; kept {k} -> {parent}")
                    continue
                result.pdag.orient(parent, k)

    for message in result.warnings:
        logger.warning(message)
    logger.info(
        f"Structure resolved: {len(skeleton)} edges, {len(sepsets)} deleted links, "
        f"{len(v_structures(result.pdag))} v-structures"
    )
    return result


def _creates_problem(pdag: Pdag, a: int, b: int) -> bool:
    """True if orienting a -> b makes a new v-structure or a directed cycle."""
    for c in pdag.parents(b):
        if c != a and not pdag.adjacent(a, c):
            return True
    g = nx.DiGraph()
    g.add_nodes_from(range(pdag.num_nodes))
    g.add_edges_from(pdag.directed)
    return nx.has_path(g, b, a)


def complete_orientation(pdag: Pdag, seed: int = 0) -> Dag:
    """
    Extend a PDAG to a DAG with the same adjacencies and v-structures.

    Raises:
        NoValidExtension: If no orientation satisfies both constraints
    """
    rng = np.random.default_rng(seed)
    try:
        current = meek_closure(pdag)
    except CyclicGraph as e:
        raise NoValidExtension(f"orientation rules produced a cycle: {e.detail}")
    target_vs = v_structures(current)

    while current.undirected:
        a, b = sorted(min(current.undirected, key=sorted))
        options = [(a, b), (b, a)]
        if rng.random() < 0.5:
            options.reverse()
        for x, y in options:
            if not _creates_problem(current, x, y):
                current.orient(x, y)
                break
        else:
            raise NoValidExtension(f"edge {a}-{b} cannot be oriented without a new v-structure or cycle")
        try:
            current = meek_closure(current)
        except CyclicGraph as e:
            raise NoValidExtension(f"orientation rules produced a cycle: {e.detail}")

    try:
        dag = current.to_dag()
    except CyclicGraph as e:
        raise NoValidExtension(str(e.detail))
    if v_structures(dag) != target_vs:
        raise NoValidExtension("completed graph changed the set of v-structures")
    return dag


def learn_bn_from_oracle(
    ci: CiOracle,
    names: Optional[Sequence[str]] = None,
    seed: int = 0,
    workers: int = 1,
) -> Dag:
    """Run the full pipeline against an existing oracle."""
    mbs = learn_markov_blankets(ci, workers=workers)
    resolved = resolve_structure(mbs, ci, names)
    dag = complete_orientation(resolved.pdag, seed)
    logger.info(f"Learned DAG with {len(dag.edges)} edges over {dag.num_nodes} nodes")
    return dag


def joint_columns(dataset: Dataset) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """All modelled columns; a class label is appended as a numeric column."""
    if isinstance(dataset.task, Classification):
        rows = np.column_stack([dataset.rows, dataset.labels.astype(float)])
        return rows, dataset.names() + ("y",)
    return dataset.rows, dataset.names()


def learn_bn(
    dataset: Dataset,
    engine_choice: EngineChoice = EngineChoice(kind="gaussian"),
    epsilon: Optional[float] = None,
    seed: int = 0,
    oracle: str = "exact",
    null: str = "fixed",
    n_samples: int = 10,
    workers: int = 1,
    params: Optional[GaussianParams] = None,
) -> Dag:
    """
    Learn a DAG over every column of ``dataset`` (plus the class label).

    The exact oracle uses the generating ``params`` when they are known,
    with epsilon defaulting to 0. Without them it falls back to the MLE
    Gaussian of the joint columns and epsilon defaults to 0.015 nats. The
    MC oracle uses the chosen joint engine
    (``gaussian`` or ``mixture(m)``; ``class_conditional(m)`` maps to
    ``mixture(m)``) with epsilon defaulting to 0.015 nats.
    """
    if oracle not in ("exact", "mc"):
        raise ConfigError(f"unknown oracle {oracle!r}; expected exact or mc")
    rows, names = joint_columns(dataset)
    if rows.shape[1] < 2:
        return Dag(rows.shape[1], (), names)
    estimated = oracle == "exact" and params is None
    if epsilon is None:
        epsilon = default_epsilon(oracle, estimated)
    if estimated:
        logger.warning(f"Exact oracle on the sample Gaussian (epsilon={epsilon})")

    if oracle == "exact":
        ci: CiOracle = GaussianExactOracle(params if params is not None else fit_gaussian(rows), epsilon)
    else:
        m = engine_choice.components if engine_choice.kind != "gaussian" else 1
        if m > 1:
            model = fit_mixture_em(rows, m, seed=seed)
            refit = lambda data: fit_mixture_em(data, m, seed=seed)  # noqa: E731
        else:
            model = fit_gaussian(rows)
            refit = fit_gaussian
        ci = EngineMcOracle(model, rows, epsilon, n_samples=n_samples, seed=seed, null=null, refit=refit)

    logger.info(f"Learning structure over {rows.shape[1]} columns with the {oracle} oracle (epsilon={epsilon})")
    return learn_bn_from_oracle(ci, names, seed=seed, workers=workers)
