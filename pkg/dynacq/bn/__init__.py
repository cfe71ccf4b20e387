"""Bayesian-network graphs, candidate pruning and structure learning."""

from .graph import (
    Dag,
    Pdag,
    CpdagDiff,
    d_separated,
    markov_blanket,
    prune_candidates,
    v_structures,
    meek_closure,
    cpdag_of,
    cpdag_diff,
    read_edge_list,
    write_edge_list,
)
from .ci import CiResult, CiOracle, GaussianExactOracle, EngineMcOracle, default_epsilon
from .structure import (
    StructureResult,
    learn_markov_blankets,
    resolve_structure,
    complete_orientation,
    learn_bn,
    learn_bn_from_oracle,
    joint_columns,
)

__all__ = [
    "Dag",
    "Pdag",
    "CpdagDiff",
    "d_separated",
    "markov_blanket",
    "prune_candidates",
    "v_structures",
    "meek_closure",
    "cpdag_of",
    "cpdag_diff",
    "read_edge_list",
    "write_edge_list",
    "CiResult",
    "CiOracle",
    "GaussianExactOracle",
    "EngineMcOracle",
    "default_epsilon",
    "StructureResult",
    "learn_markov_blankets",
    "resolve_structure",
    "complete_orientation",
    "learn_bn",
    "learn_bn_from_oracle",
    "joint_columns",
]
