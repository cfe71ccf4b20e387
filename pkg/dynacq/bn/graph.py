"""
Directed and partially directed graphs over features plus a target node.

Nodes are integers 0..n-1 with optional display names. Dag wraps a
networkx DiGraph; Pdag keeps its directed and undirected edges as sets.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
from pydantic import BaseModel

from ..core.errors import CyclicGraph, DataError, InvalidNode, MissingFile, ParseError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


def _default_names(n: int) -> Tuple[str, ...]:
    return tuple(f"x{i}" for i in range(n))


# ========================================
# DAG
# ========================================

class Dag:
    """
    Acyclic directed graph.

    Raises:
        InvalidNode: On an edge endpoint outside 0..n-1 or a repeated edge
        CyclicGraph: On a self-loop or a directed cycle
    """

    def __init__(self, num_nodes: int, edges: Iterable[Edge] = (), names: Optional[Sequence[str]] = None):
        self.num_nodes = int(num_nodes)
        self.names = tuple(names) if names is not None else _default_names(self.num_nodes)
        if len(self.names) != self.num_nodes:
            raise InvalidNode(f"{len(self.names)} names for {self.num_nodes} nodes")

        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.num_nodes))
        for a, b in edges:
            a, b = int(a), int(b)
            for v in (a, b):
                if not 0 <= v < self.num_nodes:
                    raise InvalidNode(f"node {v} outside [0, {self.num_nodes})")
            if a == b:
                raise CyclicGraph(f"self-loop on {self.names[a]}")
            if graph.has_edge(a, b):
                raise InvalidNode(f"duplicate edge {self.names[a]} -> {self.names[b]}")
            graph.add_edge(a, b)
        if not nx.is_directed_acyclic_graph(graph):
            cycle = nx.find_cycle(graph)
            raise CyclicGraph(f"graph has a directed cycle: {cycle}")
        self._graph = graph

    def __repr__(self) -> str:
        return f"Dag(num_nodes={self.num_nodes}, edges={list(self.edges)})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Dag) and self.num_nodes == other.num_nodes and self.edges == other.edges

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return tuple(sorted(self._graph.edges()))

    @property
    def graph(self) -> nx.DiGraph:
        return self._graph.copy()

    def check_node(self, v: int) -> int:
        if not isinstance(v, (int,)) and not hasattr(v, "__index__"):
            raise InvalidNode(f"node {v!r} is not an index")
        v = int(v)
        if not 0 <= v < self.num_nodes:
            raise InvalidNode(f"node {v} outside [0, {self.num_nodes})")
        return v

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidNode(f"unknown node name {name!r}")

    def parents(self, v: int) -> Set[int]:
        return set(self._graph.predecessors(self.check_node(v)))

    def children(self, v: int) -> Set[int]:
        return set(self._graph.successors(self.check_node(v)))

    def adjacent(self, a: int, b: int) -> bool:
        return self._graph.has_edge(a, b) or self._graph.has_edge(b, a)

    def topological_order(self) -> List[int]:
        return list(nx.lexicographical_topological_sort(self._graph))

    def relabel(self, order: Sequence[int], names: Optional[Sequence[str]] = None) -> "Dag":
        """Renumber nodes so that old node ``order[k]`` becomes node k."""
        new_of = {old: new for new, old in enumerate(order)}
        if sorted(new_of) != list(range(self.num_nodes)):
            raise InvalidNode("relabel order must be a permutation of the nodes")
        names = names if names is not None else [self.names[old] for old in order]
        return Dag(self.num_nodes, [(new_of[a], new_of[b]) for a, b in self.edges], names)


# ========================================
# PDAG
# ========================================

@dataclass
class Pdag:
    """
    Partially directed graph: directed pairs plus undirected pairs.

    Attributes:
        num_nodes: Node count
        directed: Set of (parent, child)
        undirected: Set of frozenset pairs
        names: Display names
    """

    num_nodes: int
    directed: Set[Edge] = field(default_factory=set)
    undirected: Set[FrozenSet[int]] = field(default_factory=set)
    names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        self.directed = {(int(a), int(b)) for a, b in self.directed}
        self.undirected = {frozenset(int(v) for v in pair) for pair in self.undirected}
        if self.names is None:
            self.names = _default_names(self.num_nodes)
        for a, b in self.directed:
            if frozenset((a, b)) in self.undirected:
                raise InvalidNode(f"edge {a}-{b} is both directed and undirected")
        if any(len(pair) != 2 for pair in self.undirected):
            raise CyclicGraph("undirected self-loop")
        if not self._directed_acyclic():
            raise CyclicGraph("directed part of the PDAG has a cycle")

    def _directed_acyclic(self) -> bool:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.num_nodes))
        g.add_edges_from(self.directed)
        return nx.is_directed_acyclic_graph(g)

    def copy(self) -> "Pdag":
        return Pdag(self.num_nodes, set(self.directed), set(self.undirected), self.names)

    def adjacent(self, a: int, b: int) -> bool:
        return (a, b) in self.directed or (b, a) in self.directed or frozenset((a, b)) in self.undirected

    def neighbors(self, v: int) -> Set[int]:
        """Nodes joined to v by an undirected edge."""
        return {w for pair in self.undirected if v in pair for w in pair if w != v}

    def parents(self, v: int) -> Set[int]:
        return {a for a, b in self.directed if b == v}

    def children(self, v: int) -> Set[int]:
        return {b for a, b in self.directed if a == v}

    def skeleton(self) -> Set[FrozenSet[int]]:
        return {frozenset(e) for e in self.directed} | set(self.undirected)

    def orient(self, a: int, b: int) -> None:
        """Turn the undirected edge a-b into a -> b."""
        self.undirected.discard(frozenset((a, b)))
        self.directed.add((a, b))

    def to_dag(self) -> Dag:
        if self.undirected:
            raise InvalidNode("PDAG still has undirected edges")
        return Dag(self.num_nodes, sorted(self.directed), self.names)

    @classmethod
    def from_dag(cls, dag: Dag) -> "Pdag":
        return cls(dag.num_nodes, set(dag.edges), set(), dag.names)


Graph = Union[Dag, Pdag]


def _as_pdag(graph: Graph) -> Pdag:
    return Pdag.from_dag(graph) if isinstance(graph, Dag) else graph


# ========================================
# d-separation and Markov blankets
# ========================================

def d_separated(dag: Dag, a: int, b: int, given: Iterable[int] = ()) -> bool:
    """
    True iff every path between a and b is blocked by ``given``.

    Node checks are done here; the path test is networkx's
    ``is_d_separator``.

    Raises:
        InvalidNode: On unknown nodes, a == b, or an endpoint in ``given``
    """
    a, b = dag.check_node(a), dag.check_node(b)
    z = {dag.check_node(v) for v in given}
    if a == b:
        raise InvalidNode("d-separation needs two distinct nodes")
    if a in z or b in z:
        raise InvalidNode("endpoints cannot be in the conditioning set")

    return nx.is_d_separator(dag._graph, {a}, {b}, z)


def markov_blanket(dag: Dag, v: int) -> FrozenSet[int]:
    """Parents, children and co-parents of children of v."""
    v = dag.check_node(v)
    children = dag.children(v)
    blanket = dag.parents(v) | children
    for c in children:
        blanket |= dag.parents(c)
    blanket.discard(v)
    return frozenset(blanket)


def prune_candidates(dag: Dag, y_node: int, observed: Iterable[int], unobserved: Iterable[int]) -> Tuple[int, ...]:
    """
    Unobserved features not d-separated from the target given the observed set.

    Raises:
        InvalidNode: If the target is among the observed or unobserved nodes
    """
    observed = tuple(observed)
    unobserved = tuple(unobserved)
    if y_node in observed or y_node in unobserved:
        raise InvalidNode(f"target node {y_node} cannot be a feature")
    return tuple(i for i in unobserved if not d_separated(dag, i, y_node, observed))


# ========================================
# Equivalence classes
# ========================================

def v_structures(graph: Graph) -> Set[Tuple[int, int, int]]:
    """Colliders (a, c, b) with a < b, a -> c <- b and a, b non-adjacent."""
    pdag = _as_pdag(graph)
    found = set()
    for c in range(pdag.num_nodes):
        parents = sorted(pdag.parents(c))
        for idx, a in enumerate(parents):
            for b in parents[idx + 1:]:
                if not pdag.adjacent(a, b):
                    found.add((a, c, b))
    return found


def _meek_pass(pdag: Pdag) -> bool:
    """Apply the first applicable orientation rule once; False if none applies."""
    for pair in sorted(pdag.undirected, key=sorted):
        x, y = sorted(pair)
        for b, c in ((x, y), (y, x)):
            # R1: a -> b - c with a, c non-adjacent
            if any(not pdag.adjacent(a, c) for a in pdag.parents(b) if a != c):
                pdag.orient(b, c)
                return True
            # R2: b -> k -> c with b - c
            if pdag.children(b) & pdag.parents(c):
                pdag.orient(b, c)
                return True
            # R3: b - k1 -> c, b - k2 -> c, k1 and k2 non-adjacent
            ks = sorted(pdag.neighbors(b) & pdag.parents(c))
            for i, k1 in enumerate(ks):
                if any(not pdag.adjacent(k1, k2) for k2 in ks[i + 1:]):
                    pdag.orient(b, c)
                    return True
    return False


def meek_closure(pdag: Pdag) -> Pdag:
    """Orient every edge forced by the orientation rules; returns a new PDAG."""
    out = pdag.copy()
    while _meek_pass(out):
        pass
    return out


def cpdag_of(dag: Dag) -> Pdag:
    """Completed PDAG of the Markov equivalence class of ``dag``."""
    pattern = Pdag(dag.num_nodes, set(), {frozenset(e) for e in dag.edges}, dag.names)
    for a, c, b in v_structures(dag):
        pattern.orient(a, c)
        pattern.orient(b, c)
    return meek_closure(pattern)


class CpdagDiff(BaseModel):
    """Difference between a learned and a true equivalence class."""
    missing: List[str]
    extra: List[str]
    misoriented: List[str]
    skeleton_errors: int
    v_structure_errors: int


def _edge_mark(pdag: Pdag, a: int, b: int) -> str:
    if (a, b) in pdag.directed:
        return f"{pdag.names[a]} -> {pdag.names[b]}"
    if (b, a) in pdag.directed:
        return f"{pdag.names[b]} -> {pdag.names[a]}"
    return f"{pdag.names[a]} -- {pdag.names[b]}"


def cpdag_diff(learned: Graph, truth: Graph) -> CpdagDiff:
    """
    Compare two graphs as equivalence classes.

    DAGs are first reduced to their CPDAGs. Edges are reported with the
    truth graph's node names.
    """
    got = cpdag_of(learned) if isinstance(learned, Dag) else learned
    want = cpdag_of(truth) if isinstance(truth, Dag) else truth
    if got.num_nodes != want.num_nodes:
        raise InvalidNode(f"graphs have {got.num_nodes} and {want.num_nodes} nodes")
    got = Pdag(got.num_nodes, got.directed, got.undirected, want.names)

    got_skel, want_skel = got.skeleton(), want.skeleton()
    missing = sorted(_edge_mark(want, *sorted(p)) for p in want_skel - got_skel)
    extra = sorted(_edge_mark(got, *sorted(p)) for p in got_skel - want_skel)
    misoriented = []
    for pair in sorted(want_skel & got_skel, key=sorted):
        a, b = sorted(pair)
        if _edge_mark(got, a, b) != _edge_mark(want, a, b):
            misoriented.append(f"{_edge_mark(got, a, b)} (truth: {_edge_mark(want, a, b)})")

    return CpdagDiff(
        missing=missing,
        extra=extra,
        misoriented=misoriented,
        skeleton_errors=len(missing) + len(extra),
        v_structure_errors=len(v_structures(got) ^ v_structures(want)),
    )


# ========================================
# Edge-list files
# ========================================

_NODES_HEADER = "# nodes:"


def write_edge_list(dag: Dag, path: Union[str, Path]) -> Path:
    """Write ``# nodes: a, b, ...`` followed by one ``parent -> child`` line per edge."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{_NODES_HEADER} {', '.join(dag.names)}"]
    lines += [f"{dag.names[a]} -> {dag.names[b]}" for a, b in dag.edges]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_edge_list(path: Union[str, Path], names: Optional[Sequence[str]] = None) -> Dag:
    """
    Read an edge-list file.

    Node names come from ``names`` when given, otherwise from the
    ``# nodes:`` header. Blank lines and other comments are skipped.

    Raises:
        MissingFile: If the file does not exist
        ParseError: On a line that is not ``parent -> child``
        InvalidNode: On an unknown node name
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    header_names = None
    edges = []
    for row, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(_NODES_HEADER):
            header_names = [n.strip() for n in line[len(_NODES_HEADER):].split(",") if n.strip()]
            continue
        if line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("->")]
        if len(parts) != 2 or not all(parts):
            raise ParseError(row, "edge", raw)
        edges.append(tuple(parts))

    node_names = list(names) if names is not None else header_names
    if node_names is None:
        raise DataError(f"{path} has no '{_NODES_HEADER}' header and no names were given")
    lookup = {n: i for i, n in enumerate(node_names)}
    try:
        indexed = [(lookup[a], lookup[b]) for a, b in edges]
    except KeyError as e:
        raise InvalidNode(f"unknown node name {e.args[0]!r} in {path}")
    return Dag(len(node_names), indexed, node_names)
