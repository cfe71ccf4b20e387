"""
Ground-truth DAG topologies shipped with the package.

ASIA and SACHS follow the public Bayesian-network repository structures.
SMALL_EXAMPLE is a five-node graph where observing x2 blocks x4 from y and
observing x1 opens the path from x3 to y.
"""

from typing import Dict, List, Tuple

from ..bn.graph import Dag
from ..core.errors import ConfigError

NamedEdges = List[Tuple[str, str]]

ASIA_NODES = ("asia", "tub", "smoke", "lung", "bronc", "either", "xray", "dysp")
ASIA_EDGES: NamedEdges = [
    ("asia", "tub"),
    ("smoke", "lung"),
    ("smoke", "bronc"),
    ("tub", "either"),
    ("lung", "either"),
    ("either", "xray"),
    ("either", "dysp"),
    ("bronc", "dysp"),
]

SACHS_NODES = ("Raf", "Mek", "Plcg", "PIP2", "PIP3", "Erk", "Akt", "PKA", "PKC", "P38", "Jnk")
SACHS_EDGES: NamedEdges = [
    ("PKC", "PKA"),
    ("PKC", "Raf"),
    ("PKA", "Raf"),
    ("PKC", "Mek"),
    ("PKA", "Mek"),
    ("Raf", "Mek"),
    ("Mek", "Erk"),
    ("PKA", "Erk"),
    ("Erk", "Akt"),
    ("PKA", "Akt"),
    ("PKC", "P38"),
    ("PKA", "P38"),
    ("PKC", "Jnk"),
    ("PKA", "Jnk"),
    ("Plcg", "PIP3"),
    ("Plcg", "PIP2"),
    ("PIP3", "PIP2"),
]

SMALL_EXAMPLE_NODES = ("x1", "x2", "x3", "x4", "y")
SMALL_EXAMPLE_EDGES: NamedEdges = [
    ("x3", "x1"),
    ("y", "x1"),
    ("y", "x2"),
    ("x2", "x4"),
]

_FIXTURES: Dict[str, Tuple[Tuple[str, ...], NamedEdges]] = {
    "asia": (ASIA_NODES, ASIA_EDGES),
    "sachs": (SACHS_NODES, SACHS_EDGES),
    "small": (SMALL_EXAMPLE_NODES, SMALL_EXAMPLE_EDGES),
}


def fixture_names() -> List[str]:
    return sorted(_FIXTURES)


def load_fixture(name: str) -> Dag:
    """Build a fixture DAG by name (asia, sachs or small)."""
    try:
        nodes, edges = _FIXTURES[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown DAG fixture {name!r}; choose from {', '.join(fixture_names())}")
    index = {n: i for i, n in enumerate(nodes)}
    return Dag(len(nodes), [(index[a], index[b]) for a, b in edges], nodes)
