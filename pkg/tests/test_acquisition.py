"""
Tests for greedy acquisition.

Tests:
- Next-feature selection and tie breaking
- Episodes under each stopping rule
- Static order
- Prediction
- Candidate pruning soundness
- Batch harness and curves
- Dynamic vs static accuracy on gated data (slow)
"""

import numpy as np
import pytest

from dynacq.acquisition import (
    AcquisitionSession,
    Budget,
    Confidence,
    DynamicPolicy,
    Exhaustion,
    StaticPolicy,
    candidate_payoff,
    first_acquisitions,
    next_feature_dynamic,
    performance_curve,
    predict,
    predict_with_confidence,
    run_batch,
    run_episode,
    static_order,
)
from dynacq.cmi import cmi_classification, cmi_gaussian_sets
from dynacq.condmodel import (
    ClassConditionalModel,
    EngineChoice,
    FittedEngine,
    GaussianParams,
    MixtureModel,
    fit_engine,
)
from dynacq.core import ObservedState
from dynacq.core.dataset import Classification, Dataset, Regression, split
from dynacq.core.errors import ConfigError, NoCandidates, TooFewRows
from dynacq.data import (
    HierarchicalSpec,
    LinearGaussianBnSpec,
    build_linear_gaussian_bn,
    gen_hierarchical,
    load_fixture,
)


def _gated_engine(w1=2.0, w2=0.5):
    """
    Hand-built class-conditional mixture of the gating pattern.

    x0 near 0.25 makes x1 carry the class, x0 near 0.75 makes x2 carry it.
    """
    per_class = []
    for c in range(2):
        left = GaussianParams(mean=np.array([0.25, w1 * c + w2 * 0.25, 0.0]), cov=np.diag([0.02, 0.3, 1.0]))
        right = GaussianParams(mean=np.array([0.75, 0.0, w1 * c + w2 * 0.75]), cov=np.diag([0.02, 1.0, 0.3]))
        per_class.append(MixtureModel(weights=np.array([0.5, 0.5]), components=(left, right)))
    return FittedEngine(
        task=Classification(2),
        choice=EngineChoice(kind="class_conditional", components=2),
        model=ClassConditionalModel(class_prior=np.array([0.5, 0.5]), per_class=tuple(per_class)),
        feature_names=("x0", "x1", "x2"),
    )


def _null_engine():
    """Both classes share one density, so no feature says anything about y."""
    g = GaussianParams(mean=np.zeros(3), cov=np.eye(3))
    return FittedEngine(
        task=Classification(2),
        choice=EngineChoice(kind="gaussian"),
        model=ClassConditionalModel(class_prior=np.array([0.6, 0.4]), per_class=(g, g)),
        feature_names=("a", "b", "c"),
    )


@pytest.fixture
def separated_data():
    """x0 ~ N(+-4, 1) nearly determines the class."""
    rng = np.random.default_rng(5)
    n = 400
    y = rng.integers(2, size=n)
    rows = rng.standard_normal((n, 3))
    rows[:, 0] += np.where(y == 1, 4.0, -4.0)
    return Dataset(rows=rows, task=Classification(2), labels=y)


# ========================================
# Next-feature selection
# ========================================

class TestNextFeature:
    """Test greedy CMI selection"""

    def test_single_candidate(self, classification_engine):
        """A single candidate is returned whatever its score"""
        chosen, scores = next_feature_dynamic(classification_engine, ObservedState.empty(3), [2])
        assert chosen == 2
        assert set(scores) == {2}

    def test_ties_go_to_lowest_index(self):
        """All-zero scores pick the lowest candidate"""
        engine = _null_engine()
        chosen, scores = next_feature_dynamic(engine, ObservedState.empty(3), [2, 1])
        assert chosen == 1
        assert all(abs(v) < 1e-12 for v in scores.values())

    def test_signal_feature_first(self, classification_engine):
        """The informative feature has the highest CMI"""
        chosen, _ = next_feature_dynamic(classification_engine, ObservedState.empty(3), [0, 1, 2], n_samples=50)
        assert chosen == 0

    def test_empty_candidates(self, classification_engine):
        """No candidates raises NoCandidates"""
        with pytest.raises(NoCandidates):
            next_feature_dynamic(classification_engine, ObservedState.empty(3), [])

    def test_thread_count_does_not_change_scores(self, classification_engine):
        """Per-candidate streams make scores independent of workers"""
        state = ObservedState.empty(3)
        _, serial = next_feature_dynamic(classification_engine, state, [0, 1, 2], seed=4)
        _, threaded = next_feature_dynamic(classification_engine, state, [0, 1, 2], seed=4, workers=3)
        assert serial == threaded

    def test_gating_feature_has_zero_marginal_cmi(self):
        """The gate alone says nothing about the class"""
        engine = _gated_engine()
        value = cmi_classification(engine, 0, ObservedState.empty(3), n_samples=50, seed=0).value
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_gate_selects_gated_feature(self):
        """Once the gate is observed, the feature it points at is chosen"""
        engine = _gated_engine()
        left = ObservedState.empty(3).acquire(0, 0.2)
        right = ObservedState.empty(3).acquire(0, 0.8)
        hits = 0
        for seed in range(20):
            hits += next_feature_dynamic(engine, left, [1, 2], seed=seed)[0] == 1
            hits += next_feature_dynamic(engine, right, [1, 2], seed=seed)[0] == 2
        assert hits >= 38


# ========================================
# Episodes
# ========================================

class TestEpisode:
    """Test single-instance episodes"""

    def test_budget_zero(self, classification_engine, two_class_data):
        """Budget(0) acquires nothing and predicts from the prior"""
        trace = run_episode(classification_engine, two_class_data.rows[0], stop=Budget(0))
        assert trace.steps_taken == 0
        assert trace.final_prediction == trace.initial_prediction
        assert trace.initial_confidence == pytest.approx(max(classification_engine.model.class_prior))

    def test_full_budget(self, classification_engine, two_class_data):
        """Budget(d) acquires every feature and ends at the full-information prediction"""
        row = two_class_data.rows[3]
        trace = run_episode(classification_engine, row, stop=Budget(3), seed=1)
        assert sorted(trace.acquired) == [0, 1, 2]
        full = ObservedState(3, (0, 1, 2), tuple(row))
        assert trace.final_prediction == predict(classification_engine, full)
        assert trace.stopped_by == "budget"

    def test_exhaustion(self, classification_engine, two_class_data):
        """Exhaustion acquires until nothing is left"""
        trace = run_episode(classification_engine, two_class_data.rows[0], stop=Exhaustion())
        assert trace.steps_taken == 3
        assert trace.stopped_by == "exhausted"

    def test_budget_above_d(self, classification_engine, two_class_data):
        """A budget larger than d is a configuration error"""
        with pytest.raises(ConfigError):
            run_episode(classification_engine, two_class_data.rows[0], stop=Budget(4))

    def test_confidence_regression_rejected(self, regression_engine, regression_data):
        """Confidence stopping needs a class posterior"""
        with pytest.raises(ConfigError):
            run_episode(regression_engine, regression_data.rows[0], stop=Confidence(0.9))

    def test_confidence_stops_early(self, separated_data):
        """A near-deterministic feature ends most episodes after one step"""
        engine = fit_engine(separated_data, EngineChoice(kind="gaussian"))
        traces = [
            run_episode(engine, row, stop=Confidence(0.99), seed=r, instance_id=r)
            for r, row in enumerate(separated_data.rows[:50])
        ]
        early = sum(t.steps_taken < 3 for t in traces)
        assert early >= 45
        assert all(t.stopped_by in ("confidence", "exhausted") for t in traces)

    def test_confidence_zero_stops_at_once(self, classification_engine, two_class_data):
        """Threshold 0 is met before any acquisition"""
        trace = run_episode(classification_engine, two_class_data.rows[0], stop=Confidence(0.0))
        assert trace.steps_taken == 0
        assert trace.stopped_by == "confidence"

    def test_same_seed_same_trace(self, classification_engine, two_class_data):
        """Episodes are reproducible"""
        row = two_class_data.rows[5]
        a = run_episode(classification_engine, row, stop=Budget(2), seed=9)
        b = run_episode(classification_engine, row, stop=Budget(2), seed=9)
        assert a.to_json() == b.to_json()

    def test_session_replay_matches_batch(self, classification_engine, two_class_data):
        """Driving a session by hand reproduces the batch trace"""
        row = two_class_data.rows[7]
        batch = run_episode(classification_engine, row, stop=Exhaustion(), seed=2)
        session = AcquisitionSession(classification_engine, DynamicPolicy(), seed=2)
        while session.candidates():
            feature, candidates, scores = session.propose()
            session.observe(feature, row[feature], candidates, scores)
        assert session.trace("exhausted").to_json() == batch.to_json()

    def test_static_policy_follows_order(self, classification_engine, two_class_data):
        """Static episodes acquire in the given order"""
        trace = run_episode(classification_engine, two_class_data.rows[0], StaticPolicy((2, 0, 1)), Exhaustion())
        assert trace.acquired == [2, 0, 1]
        assert trace.policy == "sfa"

    def test_static_order_must_be_permutation(self, classification_engine, two_class_data):
        """A partial order is rejected"""
        with pytest.raises(ConfigError):
            run_episode(classification_engine, two_class_data.rows[0], StaticPolicy((0, 1)), Exhaustion())


# ========================================
# Static order
# ========================================

class TestStaticOrder:
    """Test the shared acquisition order"""

    def test_single_feature(self):
        """d = 1 gives the identity order"""
        rng = np.random.default_rng(0)
        ds = Dataset(rows=rng.standard_normal((40, 1)), task=Classification(2), labels=rng.integers(2, size=40))
        engine = fit_engine(ds, EngineChoice(kind="gaussian"))
        assert static_order(engine, ds) == (0,)

    def test_signal_first(self, classification_engine, two_class_data):
        """The informative feature leads the order"""
        order = static_order(classification_engine, two_class_data.rows[:30], n_samples=20)
        assert order[0] == 0
        assert sorted(order) == [0, 1, 2]

    def test_empty_reference(self, classification_engine):
        """The reference set cannot be empty"""
        with pytest.raises(Exception):
            static_order(classification_engine, np.empty((0, 3)))


# ========================================
# Prediction
# ========================================

class TestPredict:
    """Test predictions from the observed set"""

    def test_prior_argmax(self):
        """With nothing observed the prior decides"""
        g = GaussianParams(mean=np.zeros(1), cov=np.eye(1))
        engine = FittedEngine(
            task=Classification(2),
            choice=EngineChoice(kind="gaussian"),
            model=ClassConditionalModel(class_prior=np.array([0.7, 0.3]), per_class=(g, g)),
            feature_names=("x0",),
        )
        label, confidence, std = predict_with_confidence(engine, ObservedState.empty(1))
        assert (label, confidence, std) == (0, pytest.approx(0.7), None)

    def test_regression_independent_features(self):
        """A diagonal model predicts the mean of y whatever is observed"""
        g = GaussianParams(mean=np.array([0.0, 0.0, 2.5]), cov=np.diag([1.0, 2.0, 3.0]))
        engine = FittedEngine(task=Regression(2), choice=EngineChoice(kind="gaussian"), model=g, feature_names=("a", "b", "y"))
        state = ObservedState.empty(3).acquire_many([0, 1], [4.0, -1.0])
        assert predict(engine, state) == pytest.approx(2.5)

    def test_regression_function(self, regression_engine, regression_data):
        """Full observation gives mu_y + S_yo S_oo^-1 (x_o - mu_o)"""
        g = regression_engine.model
        row = regression_data.rows[0]
        o = [0, 1, 2]
        state = ObservedState(4, tuple(o), tuple(row[o]))
        expected = g.mean[3] + g.cov[3, o] @ np.linalg.solve(g.cov[np.ix_(o, o)], row[o] - g.mean[o])
        mean, confidence, std = predict_with_confidence(regression_engine, state)
        assert mean == pytest.approx(expected)
        assert confidence is None
        assert std > 0


# ========================================
# Pruning
# ========================================

class TestPruning:
    """Test d-separation pruning inside episodes"""

    def test_pruned_features_carry_no_information(self):
        """Every pruned feature has zero exact CMI with the target given the observed set"""
        dag = load_fixture("asia")
        spec = LinearGaussianBnSpec(dag=dag, seed=0)
        bn = build_linear_gaussian_bn(spec)
        y = spec.target_node()
        engine = FittedEngine(task=Regression(y), choice=EngineChoice(kind="gaussian"), model=bn.params, feature_names=dag.names)
        rows = bn.sample(10, seed=1)

        for r, row in enumerate(rows):
            session = AcquisitionSession(engine, DynamicPolicy(), pruner=dag, n_samples=20, seed=r)
            while True:
                unobserved = [i for i in session.state.unobserved if i != y]
                candidates = session.candidates()
                for i in set(unobserved) - set(candidates):
                    value = cmi_gaussian_sets(bn.params, [i], [y], session.state.observed).value
                    assert value <= 1e-8
                if not candidates:
                    break
                feature, candidates, scores = session.propose()
                session.observe(feature, row[feature], candidates, scores)

    def test_pruner_size_checked(self, classification_engine):
        """The pruning graph must cover the features plus the target"""
        with pytest.raises(Exception):
            AcquisitionSession(classification_engine, pruner=load_fixture("asia"))


# ========================================
# Harness
# ========================================

class TestHarness:
    """Test batch runs and curves"""

    def test_batch_keeps_input_order(self, classification_engine, two_class_data):
        """Traces come back in row order"""
        batch = run_batch(classification_engine, two_class_data.rows[:6], stop=Budget(1), workers=2)
        assert [t.instance for t in batch.traces] == list(range(6))
        assert batch.failed == []

    def test_batch_skips_failures(self, mocker, classification_engine, two_class_data):
        """A failing episode is reported and the rest still run"""
        real = run_episode

        def flaky(engine, row, *args, instance_id=0, **kwargs):
            if instance_id == 1:
                raise TooFewRows("synthetic failure")
            return real(engine, row, *args, instance_id=instance_id, **kwargs)

        mocker.patch("dynacq.acquisition.harness.run_episode", side_effect=flaky)
        batch = run_batch(classification_engine, two_class_data.rows[:3], stop=Budget(1))
        assert batch.failed == [1]
        assert [t.instance for t in batch.traces] == [0, 2]

    def test_curve_carries_predictions_forward(self, classification_engine, two_class_data):
        """Accuracy exists at every step up to the horizon"""
        rows = two_class_data.rows[:40]
        batch = run_batch(classification_engine, rows, stop=Budget(3))
        curve = performance_curve(batch.traces, two_class_data.labels[:40], two_class_data.task, 3)
        assert curve.steps == [0, 1, 2, 3]
        assert curve.metric == "accuracy"
        assert curve.mean[3] >= curve.mean[0]
        frame = curve.to_frame()
        assert list(frame.columns) == ["step", "metric_mean", "metric_stderr"]

    def test_regression_curve(self, regression_engine, regression_data):
        """Regression curves report RMSE that falls once features arrive"""
        rows = regression_data.rows[:30]
        batch = run_batch(regression_engine, rows, stop=Budget(2))
        curve = performance_curve(batch.traces, regression_data.targets[:30], regression_data.task, 2)
        assert curve.metric == "rmse"
        assert curve.mean[2] < curve.mean[0]

    def test_first_acquisitions(self, classification_engine, two_class_data):
        """First choices are reported per trace"""
        batch = run_batch(classification_engine, two_class_data.rows[:5], stop=Budget(1), n_samples=50)
        assert first_acquisitions(batch.traces) == [0] * 5
        assert first_acquisitions(batch.traces, step=2) == [None] * 5

    def test_candidate_payoff_counts_unreached_steps_as_zero(self, classification_engine, two_class_data):
        """Stopped episodes contribute empty candidate sets"""
        batch = run_batch(classification_engine, two_class_data.rows[:2], stop=Budget(1))
        payoff = candidate_payoff(batch.traces, 2)
        assert payoff.tolist() == [3.0, 0.0]

    @pytest.mark.parametrize("fixture", ["two_class_data", "regression_data"])
    def test_curves_improve_with_features(self, request, fixture):
        """Each policy's curve stays within 0.01 of its best earlier value"""
        ds = request.getfixturevalue(fixture)
        engine = fit_engine(ds, EngineChoice(kind="gaussian"))
        truths = ds.labels if isinstance(ds.task, Classification) else ds.targets
        order = static_order(engine, ds.rows[:100], seed=2)
        for policy in (DynamicPolicy(), StaticPolicy(order)):
            batch = run_batch(engine, ds.rows, policy=policy, stop=Exhaustion(), seed=2)
            curve = performance_curve(batch.traces, truths, ds.task, ds.num_features)
            mean = np.asarray(curve.mean)
            if curve.metric == "accuracy":
                assert np.all(mean >= np.maximum.accumulate(mean) - 0.01), mean
            else:
                assert np.all(mean <= np.minimum.accumulate(mean) + 0.01), mean


# ========================================
# Dynamic vs static on gated data
# ========================================

class TestGatedBenchmark:
    """Test the dynamic policy's advantage on the hierarchical data"""

    @pytest.mark.slow
    def test_dynamic_beats_static_at_budget_two(self):
        """Dynamic acquisition is at least 0.05 more accurate after two features"""
        ds = gen_hierarchical(HierarchicalSpec(n=20000, seed=0))
        train, val, test = split(ds, seed=0)
        engine = fit_engine(train, EngineChoice(kind="class_conditional", components=4), seed=0)
        order = static_order(engine, val.rows[:400], seed=0)
        rows, labels = test.rows[:600], test.labels[:600]

        accuracy = {}
        for name, policy in (("dfa", DynamicPolicy()), ("sfa", StaticPolicy(order))):
            batch = run_batch(engine, rows, policy=policy, stop=Budget(2), seed=0)
            assert batch.failed == []
            accuracy[name] = performance_curve(batch.traces, labels, ds.task, 2).mean[2]
        assert accuracy["dfa"] >= accuracy["sfa"] + 0.05, accuracy
