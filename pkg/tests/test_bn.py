"""
Tests for Bayesian-network graphs and structure learning.

Tests:
- d-separation, Markov blankets and candidate pruning
- Equivalence classes and CPDAG comparison
- Edge-list files
- CI oracles and the four learning phases
"""

from itertools import combinations

import networkx as nx
import numpy as np
import pytest

from dynacq.acquisition import Budget, candidate_payoff, run_batch
from dynacq.bn import (
    Dag,
    EngineMcOracle,
    GaussianExactOracle,
    Pdag,
    complete_orientation,
    cpdag_diff,
    cpdag_of,
    d_separated,
    default_epsilon,
    learn_bn,
    learn_bn_from_oracle,
    learn_markov_blankets,
    markov_blanket,
    meek_closure,
    prune_candidates,
    read_edge_list,
    resolve_structure,
    v_structures,
    write_edge_list,
)
from dynacq.cmi import cmi_gaussian_exact
from dynacq.condmodel import EngineChoice, FittedEngine, GaussianParams, fit_gaussian
from dynacq.core.dataset import Dataset, Regression
from dynacq.core.errors import ConfigError, CyclicGraph, InvalidNode, MissingFile, ParseError
from dynacq.data import LinearGaussianBnSpec, build_linear_gaussian_bn, gen_linear_gaussian_bn, load_fixture

A, B, C = 0, 1, 2

CHAIN = Dag(3, [(A, B), (B, C)], ("A", "B", "C"))
COLLIDER = Dag(3, [(A, C), (B, C)], ("A", "B", "C"))
CHAIN_PARAMS = GaussianParams(
    mean=np.zeros(3),
    cov=np.array([[0.3, 0.3, 0.3], [0.3, 0.6, 0.6], [0.3, 0.6, 0.9]]),
)
COLLIDER_PARAMS = GaussianParams(
    mean=np.zeros(3),
    cov=np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 2.3]]),
)


def _asia_spec(**overrides):
    """Asia with every weight pinned to 0.8 so the network is faithful."""
    dag = load_fixture("asia")
    fields = dict(dag=dag, n=200, weights={e: 0.8 for e in dag.edges}, seed=0)
    fields.update(overrides)
    return LinearGaussianBnSpec(**fields)


@pytest.fixture
def small_graph():
    """x3 -> x1 <- y -> x2 -> x4"""
    return load_fixture("small")


# ========================================
# d-separation and pruning
# ========================================

class TestDSeparation:
    """Test d-separation queries"""

    def test_chain(self):
        """A chain is blocked by observing its middle node"""
        assert not d_separated(CHAIN, A, C)
        assert d_separated(CHAIN, A, C, {B})

    def test_collider(self):
        """A collider is opened by observing it"""
        assert d_separated(COLLIDER, A, B)
        assert not d_separated(COLLIDER, A, B, {C})

    def test_descendant_opens_collider(self):
        """Observing a descendant of the collider opens it too"""
        dag = Dag(4, [(A, C), (B, C), (C, 3)])
        assert not d_separated(dag, A, B, {3})

    def test_same_node_rejected(self):
        """a == b is not a valid query"""
        with pytest.raises(InvalidNode):
            d_separated(CHAIN, A, A)

    def test_endpoint_in_conditioning_set(self):
        """Endpoints cannot be conditioned on"""
        with pytest.raises(InvalidNode):
            d_separated(CHAIN, A, C, {A})

    def test_asia_matches_moral_graph_criterion(self):
        """Every asia query agrees with separation in the moralized ancestral graph"""
        dag = load_fixture("asia")
        graph = dag.graph
        nodes = range(dag.num_nodes)
        for a, b in combinations(nodes, 2):
            others = [v for v in nodes if v not in (a, b)]
            for size in range(4):
                for given in combinations(others, size):
                    keep = {a, b, *given}
                    for v in list(keep):
                        keep |= nx.ancestors(graph, v)
                    moral = nx.moral_graph(graph.subgraph(keep))
                    moral.remove_nodes_from(given)
                    assert d_separated(dag, a, b, given) == (not nx.has_path(moral, a, b)), (a, b, given)


class TestMarkovBlanket:
    """Test parents, children and co-parents"""

    def test_small_graph(self, small_graph):
        """MB(y) is {x1, x2, x3}"""
        y = small_graph.index("y")
        names = {small_graph.names[v] for v in markov_blanket(small_graph, y)}
        assert names == {"x1", "x2", "x3"}

    def test_chain_and_collider(self):
        """The middle of a chain has both ends; collider parents are spouses"""
        assert markov_blanket(CHAIN, B) == {A, C}
        assert markov_blanket(CHAIN, A) == {B}
        assert markov_blanket(COLLIDER, A) == {B, C}


class TestPruning:
    """Test candidate pruning by d-separation"""

    @staticmethod
    def _names(dag, nodes):
        return {dag.names[v] for v in nodes}

    def test_nothing_observed(self, small_graph):
        """x3 is blocked by the unobserved collider"""
        y = small_graph.index("y")
        features = [v for v in range(5) if v != y]
        assert self._names(small_graph, prune_candidates(small_graph, y, (), features)) == {"x1", "x2", "x4"}

    def test_observing_x2_blocks_x4(self, small_graph):
        """x4 only reaches y through x2"""
        y, x2 = small_graph.index("y"), small_graph.index("x2")
        rest = [v for v in range(5) if v not in (y, x2)]
        assert "x4" not in self._names(small_graph, prune_candidates(small_graph, y, (x2,), rest))

    def test_observing_x1_opens_x3(self, small_graph):
        """Observing the collider x1 makes x3 relevant"""
        y, x1 = small_graph.index("y"), small_graph.index("x1")
        rest = [v for v in range(5) if v not in (y, x1)]
        assert "x3" in self._names(small_graph, prune_candidates(small_graph, y, (x1,), rest))

    def test_target_is_not_a_feature(self, small_graph):
        """The target cannot appear among the features"""
        y = small_graph.index("y")
        with pytest.raises(InvalidNode):
            prune_candidates(small_graph, y, (), [y])

    def test_pruning_shrinks_candidate_sets(self):
        """Pruning with a DAG learned from asia samples considers at least 10% fewer candidates"""
        spec = _asia_spec(n=5000)
        ds, truth = gen_linear_gaussian_bn(spec)
        learned = learn_bn(ds)
        assert cpdag_diff(learned, truth).skeleton_errors == 0

        bn = build_linear_gaussian_bn(spec)
        engine = FittedEngine(
            task=Regression(spec.target_node()),
            choice=EngineChoice(kind="gaussian"),
            model=bn.params,
            feature_names=spec.dag.names,
        )
        rows = bn.sample(5, seed=2)
        full = run_batch(engine, rows, stop=Budget(3), n_samples=200)
        pruned = run_batch(engine, rows, stop=Budget(3), pruner=learned, n_samples=200)
        assert candidate_payoff(pruned.traces, 3).sum() <= 0.9 * candidate_payoff(full.traces, 3).sum()

    def test_sample_fit_uses_noise_floor(self):
        """Without generating parameters the exact oracle does not default to epsilon 0"""
        assert default_epsilon("exact") == 0.0
        assert default_epsilon("exact", estimated=True) == default_epsilon("mc") > 0.0
        ds, _ = gen_linear_gaussian_bn(_asia_spec(n=2000))
        learned = learn_bn(ds)
        assert len(learned.edges) <= 10


# ========================================
# Graph structure
# ========================================

class TestDag:
    """Test DAG construction"""

    def test_cycle_rejected(self):
        """Directed cycles are rejected"""
        with pytest.raises(CyclicGraph):
            Dag(3, [(A, B), (B, C), (C, A)])

    def test_edges_sorted(self):
        """Edges are reported in sorted order"""
        assert Dag(3, [(B, C), (A, B)]).edges == ((A, B), (B, C))

    def test_relabel(self):
        """Relabelling moves nodes and keeps the structure"""
        moved = CHAIN.relabel([C, B, A])
        assert moved.edges == ((1, 0), (2, 1))
        assert moved.names == ("C", "B", "A")


class TestEquivalence:
    """Test v-structures, orientation rules and CPDAG comparison"""

    def test_v_structures(self):
        """Only the collider has a v-structure"""
        assert v_structures(CHAIN) == set()
        assert v_structures(COLLIDER) == {(A, C, B)}

    def test_chain_cpdag_is_undirected(self):
        """Chains have no compelled edges"""
        pdag = cpdag_of(CHAIN)
        assert pdag.directed == set()
        assert len(pdag.undirected) == 2

    def test_meek_orients_away_from_collider(self):
        """A -> C <- B with C - D forces C -> D"""
        pdag = Pdag(4, {(A, C), (B, C)}, {frozenset((C, 3))})
        closed = meek_closure(pdag)
        assert (C, 3) in closed.directed
        assert not closed.undirected

    def test_same_class_has_no_errors(self):
        """A chain and its reversal are equivalent"""
        diff = cpdag_diff(CHAIN, Dag(3, [(C, B), (B, A)], ("A", "B", "C")))
        assert diff.skeleton_errors == 0
        assert diff.misoriented == []
        assert diff.v_structure_errors == 0

    def test_chain_against_collider(self):
        """Different classes over one skeleton differ in orientation only"""
        collider = Dag(3, [(A, B), (C, B)], ("A", "B", "C"))
        diff = cpdag_diff(CHAIN, collider)
        assert diff.skeleton_errors == 0
        assert len(diff.misoriented) == 2
        assert diff.v_structure_errors == 1

    def test_missing_and_extra(self):
        """Skeleton differences are listed by name"""
        diff = cpdag_diff(Dag(3, [(A, B)], ("A", "B", "C")), CHAIN)
        assert diff.missing == ["B -- C"]
        assert diff.extra == []
        assert diff.skeleton_errors == 1


class TestEdgeList:
    """Test edge-list files"""

    def test_round_trip(self, tmp_path):
        """Written graphs read back unchanged"""
        dag = load_fixture("asia")
        path = write_edge_list(dag, tmp_path / "asia.txt")
        assert read_edge_list(path) == dag
        assert path.read_text(encoding="utf-8").startswith("# nodes: asia, tub")

    def test_names_override_header(self, tmp_path):
        """Explicit names win and comments are skipped"""
        path = tmp_path / "g.txt"
        path.write_text("# a comment\n\np -> q\n", encoding="utf-8")
        dag = read_edge_list(path, names=["p", "q"])
        assert dag.edges == ((0, 1),)

    def test_bad_line(self, tmp_path):
        """A line without an arrow names its row"""
        path = tmp_path / "g.txt"
        path.write_text("# nodes: p, q\np q\n", encoding="utf-8")
        with pytest.raises(ParseError) as info:
            read_edge_list(path)
        assert info.value.row == 2

    def test_unknown_name(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# nodes: p, q\np -> r\n", encoding="utf-8")
        with pytest.raises(InvalidNode):
            read_edge_list(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            read_edge_list(tmp_path / "nope.txt")


# ========================================
# Structure learning
# ========================================

class TestOracles:
    """Test conditional-independence oracles"""

    def test_exact_chain(self):
        """The exact oracle separates the chain ends given the middle"""
        ci = GaussianExactOracle(CHAIN_PARAMS)
        assert ci.test(A, C, (B,)).independent
        assert not ci.test(A, C).independent
        assert ci.test(C, A, (B,)) == ci.test(A, C, (B,))

    def test_negative_epsilon(self):
        with pytest.raises(ConfigError):
            GaussianExactOracle(CHAIN_PARAMS, epsilon=-1.0)

    def test_mc_oracle_on_sampled_chain(self):
        """The MC oracle agrees with the chain's independences"""
        rng = np.random.default_rng(0)
        a = rng.standard_normal(2000)
        b = a + np.sqrt(0.5) * rng.standard_normal(2000)
        c = b + np.sqrt(0.5) * rng.standard_normal(2000)
        rows = np.column_stack([a, b, c])
        ci = EngineMcOracle(fit_gaussian(rows), rows, epsilon=0.015, n_samples=10, seed=1)
        assert ci.test(A, C, (B,)).independent
        assert not ci.test(A, B).independent

    def test_unknown_null(self):
        rows = np.zeros((5, 2))
        with pytest.raises(ConfigError):
            EngineMcOracle(GaussianParams(mean=np.zeros(2), cov=np.eye(2)), rows, null="bootstrap")


class TestStructureLearning:
    """Test the four learning phases"""

    def test_chain_blankets(self):
        """Chain blankets are the adjacent nodes"""
        mbs = learn_markov_blankets(GaussianExactOracle(CHAIN_PARAMS))
        assert mbs == (frozenset({B}), frozenset({A, C}), frozenset({B}))

    def test_collider_resolution(self):
        """The spouse link is deleted and the collider oriented"""
        ci = GaussianExactOracle(COLLIDER_PARAMS)
        mbs = learn_markov_blankets(ci)
        assert B in mbs[A]
        result = resolve_structure(mbs, ci)
        assert result.sepsets == {(A, B): ()}
        assert result.pdag.directed == {(A, C), (B, C)}
        assert not result.pdag.undirected

    def test_chain_left_undirected(self):
        """Without a v-structure the chain stays undirected"""
        ci = GaussianExactOracle(CHAIN_PARAMS)
        result = resolve_structure(learn_markov_blankets(ci), ci)
        assert result.pdag.directed == set()
        assert result.pdag.skeleton() == {frozenset((A, B)), frozenset((B, C))}

    def test_directed_pdag_converts_to_dag(self):
        """A fully directed PDAG becomes the same DAG, before and after completion"""
        pdag = Pdag.from_dag(COLLIDER)
        assert pdag.to_dag() == COLLIDER
        assert complete_orientation(pdag, 0) == COLLIDER
        with pytest.raises(InvalidNode):
            Pdag(3, set(), {frozenset((A, B))}).to_dag()

    def test_orientation_never_adds_collider(self):
        """Completing the chain never yields A -> B <- C"""
        pdag = Pdag(3, set(), {frozenset((A, B)), frozenset((B, C))})
        for seed in range(20):
            dag = complete_orientation(pdag, seed)
            assert not ({(A, B), (C, B)} <= set(dag.edges))
            assert v_structures(dag) == set()

    def test_asymmetric_blankets_rejected(self):
        ci = GaussianExactOracle(CHAIN_PARAMS)
        with pytest.raises(ConfigError):
            resolve_structure((frozenset({B}), frozenset(), frozenset()), ci)

    def test_asia_recovered_exactly(self):
        """The exact oracle on the generating Gaussian recovers the asia CPDAG"""
        spec = _asia_spec()
        ds, truth = gen_linear_gaussian_bn(spec)
        params = build_linear_gaussian_bn(spec).params
        learned = learn_bn(ds, epsilon=1e-8, params=params)
        diff = cpdag_diff(learned, truth)
        assert diff.skeleton_errors == 0
        assert diff.misoriented == []
        assert diff.v_structure_errors == 0

    def test_blanket_matches_zero_cmi(self):
        """I(x_j; x_v | rest) is zero exactly when j is outside MB(v)"""
        spec = _asia_spec()
        dag = spec.dag
        params = build_linear_gaussian_bn(spec).params
        d = dag.num_nodes
        for v in range(d):
            blanket = markov_blanket(dag, v)
            for j in range(d):
                if j == v:
                    continue
                rest = tuple(k for k in range(d) if k not in (v, j))
                value = cmi_gaussian_exact(params, j, v, rest).value
                assert (value > 1e-12) == (j in blanket)

    def test_huge_epsilon_gives_empty_graph(self):
        """Everything looks independent at a large threshold"""
        spec = _asia_spec()
        ds, _ = gen_linear_gaussian_bn(spec)
        learned = learn_bn(ds, epsilon=1e6, params=build_linear_gaussian_bn(spec).params)
        assert learned.edges == ()
        assert learned.num_nodes == 8

    def test_single_column(self):
        """One column yields a one-node graph"""
        ds = Dataset(rows=np.arange(12.0).reshape(12, 1), task=Regression(0))
        learned = learn_bn(ds)
        assert learned.num_nodes == 1
        assert learned.edges == ()

    def test_unknown_oracle(self, regression_data):
        with pytest.raises(ConfigError):
            learn_bn(regression_data, oracle="magic")

    def test_from_oracle_keeps_names(self):
        dag = learn_bn_from_oracle(GaussianExactOracle(COLLIDER_PARAMS), names=("A", "B", "C"))
        assert set(dag.edges) == {(A, C), (B, C)}
        assert dag.names == ("A", "B", "C")

    @pytest.mark.slow
    def test_mc_oracle_pipeline_on_collider(self):
        """The MC pipeline recovers a strong collider from samples"""
        rng = np.random.default_rng(3)
        a = rng.standard_normal(3000)
        b = rng.standard_normal(3000)
        c = a + b + np.sqrt(0.3) * rng.standard_normal(3000)
        ds = Dataset(rows=np.column_stack([a, b, c]), task=Regression(2), feature_names=("A", "B", "C"))
        learned = learn_bn(ds, oracle="mc", seed=0)
        assert set(learned.edges) == {(A, C), (B, C)}
