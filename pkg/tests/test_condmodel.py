"""
Tests for the analytic density engines.

Tests:
- Gaussian fitting, entropy and log-density
- EM mixtures
- Schur-complement conditioning and sampling
- Class-conditional posteriors and marginals
- Engine selection and persistence
"""

import json

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import multivariate_normal, norm

from dynacq.condmodel import (
    ClassConditionalModel,
    EngineChoice,
    GaussianParams,
    MixtureModel,
    REGULARIZATION,
    class_posterior,
    condition,
    fit_class_conditional,
    fit_engine,
    fit_gaussian,
    fit_mixture_em,
    gaussian_entropy,
    joint_given_obs,
    load_engine,
    log_density,
    marginal,
    parse_engine,
    sample,
    save_engine,
)
from dynacq.condmodel.conditional import as_conditional
from dynacq.core.errors import (
    ConfigError,
    DataError,
    DidNotConverge,
    EmptyTarget,
    InsufficientData,
    MissingFile,
    OverlappingSets,
)

CORRELATED = GaussianParams(mean=np.zeros(2), cov=np.array([[1.0, 0.5], [0.5, 1.0]]))


def _random_mixture(seed, d=5, m=3):
    rng = np.random.default_rng(seed)
    components = []
    for _ in range(m):
        a = rng.standard_normal((d, d))
        components.append(GaussianParams(mean=2 * rng.standard_normal(d), cov=a @ a.T + np.eye(d)))
    return MixtureModel(weights=rng.dirichlet(np.ones(m)), components=tuple(components))


# ========================================
# Gaussian
# ========================================

class TestGaussian:
    """Test maximum-likelihood Gaussian fitting"""

    def test_constant_features(self):
        """Constant columns give their value as mean and the regularizer as variance"""
        g = fit_gaussian(np.full((10, 2), 0.3))
        np.testing.assert_allclose(g.mean, [0.3, 0.3])
        np.testing.assert_allclose(g.cov, REGULARIZATION * np.eye(2), atol=1e-15)

    def test_standard_normal_moments(self):
        """Fitted moments of standard-normal data are close to (0, I)"""
        rows = np.random.default_rng(0).standard_normal((10000, 3))
        g = fit_gaussian(rows)
        assert np.all(np.abs(g.mean) < 0.05)
        assert np.all(np.abs(np.diag(g.cov) - 1.0) < 0.1)

    def test_too_few_rows(self):
        """n <= d cannot be fitted"""
        with pytest.raises(InsufficientData):
            fit_gaussian(np.random.default_rng(0).standard_normal((3, 5)))

    def test_entropy_closed_forms(self):
        """Entropy matches 1/2 ln(2 pi e) per unit-variance dimension"""
        assert gaussian_entropy(np.eye(1)) == pytest.approx(1.4189, abs=1e-4)
        assert gaussian_entropy(np.eye(3)) == pytest.approx(4.2568, abs=1e-4)

    def test_entropy_scaling(self):
        """Scaling the covariance by c adds (k/2) ln c"""
        cov = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert gaussian_entropy(4.0 * cov) - gaussian_entropy(cov) == pytest.approx(np.log(4.0))


# ========================================
# Mixtures
# ========================================

class TestMixture:
    """Test EM fitting"""

    def test_single_component_matches_gaussian(self):
        """m = 1 reproduces the MLE Gaussian"""
        rows = np.random.default_rng(1).standard_normal((500, 2))
        mix = fit_mixture_em(rows, 1)
        g = fit_gaussian(rows)
        np.testing.assert_allclose(mix.components[0].mean, g.mean, atol=1e-6)
        np.testing.assert_allclose(mix.components[0].cov, g.cov, atol=1e-6)

    def test_recovers_separated_means(self):
        """Two clusters at +-3 are recovered up to permutation"""
        rng = np.random.default_rng(2)
        rows = np.concatenate([rng.normal(-3, 1, (1000, 1)), rng.normal(3, 1, (1000, 1))])
        mix = fit_mixture_em(rows, 2, seed=0)
        means = sorted(c.mean[0] for c in mix.components)
        assert means[0] == pytest.approx(-3.0, abs=0.1)
        assert means[1] == pytest.approx(3.0, abs=0.1)
        assert mix.converged

    def test_log_likelihood_never_decreases(self):
        """EM trace is monotone up to the covariance ridge"""
        rows = np.random.default_rng(3).standard_normal((400, 2))
        trace = np.array(fit_mixture_em(rows, 3, seed=1).log_likelihood_trace)
        assert np.all(np.diff(trace) > -1e-5)

    def test_too_few_rows(self):
        """Fewer than 10 m rows is rejected"""
        with pytest.raises(InsufficientData):
            fit_mixture_em(np.zeros((15, 1)), 2)

    def test_strict_iteration_cap(self):
        """strict=True turns an unconverged fit into an error"""
        rows = np.random.default_rng(4).standard_normal((100, 2))
        assert not fit_mixture_em(rows, 2, max_iter=1).converged
        with pytest.raises(DidNotConverge):
            fit_mixture_em(rows, 2, max_iter=1, strict=True)


# ========================================
# Conditioning
# ========================================

class TestCondition:
    """Test Schur-complement conditioning"""

    def test_hand_computed_example(self):
        """Conditioning x0 on x1 = 1 gives mean 0.5 and variance 0.75"""
        cd = condition(CORRELATED, [1.0], [1], [0])
        assert cd.means[0, 0] == pytest.approx(0.5)
        assert cd.covs[0, 0, 0] == pytest.approx(0.75)

    def test_matches_matrix_inverse(self):
        """Schur complement agrees with an explicit inverse on a random covariance"""
        rng = np.random.default_rng(4)
        a = rng.standard_normal((4, 4))
        g = GaussianParams(mean=rng.standard_normal(4), cov=a @ a.T + np.eye(4))
        x_o = np.array([0.3, -1.2])
        cd = condition(g, x_o, [1, 3], [0, 2])
        s = g.cov
        u, o = [0, 2], [1, 3]
        gain = s[np.ix_(u, o)] @ np.linalg.inv(s[np.ix_(o, o)])
        np.testing.assert_allclose(cd.means[0], g.mean[u] + gain @ (x_o - g.mean[o]))
        np.testing.assert_allclose(cd.covs[0], s[np.ix_(u, u)] - gain @ s[np.ix_(o, u)], atol=1e-12)

    def test_empty_observation_is_marginal(self):
        """Conditioning on nothing returns the marginal"""
        cd = condition(CORRELATED, [], [], [1])
        assert cd.means[0, 0] == 0.0
        assert cd.covs[0, 0, 0] == 1.0

    def test_independent_features(self):
        """A diagonal covariance makes conditioning a no-op"""
        g = GaussianParams(mean=np.array([1.0, 2.0]), cov=np.diag([2.0, 3.0]))
        cd = condition(g, [10.0], [1], [0])
        assert cd.means[0, 0] == pytest.approx(1.0)
        assert cd.covs[0, 0, 0] == pytest.approx(2.0)

    def test_overlap_rejected(self):
        """Observed and target sets must be disjoint"""
        with pytest.raises(OverlappingSets):
            condition(CORRELATED, [0.0], [0], [0, 1])

    def test_empty_target_rejected(self):
        """An empty target set is rejected"""
        with pytest.raises(EmptyTarget):
            condition(CORRELATED, [], [], [])

    def test_mixture_reweighting(self):
        """Evidence near one component shifts the weight onto it"""
        mix = MixtureModel(
            weights=np.array([0.5, 0.5]),
            components=(
                GaussianParams(mean=np.array([-3.0, -3.0]), cov=np.eye(2)),
                GaussianParams(mean=np.array([3.0, 3.0]), cov=np.eye(2)),
            ),
        )
        cd = condition(mix, [3.0], [0], [1])
        assert cd.weights[1] > 0.99

    def test_conditioning_in_two_stages(self):
        """Observing A and then B gives the same distribution as observing both at once"""
        mix = _random_mixture(seed=6)
        x = np.array([0.4, -0.7, 1.1, 0.2, -0.3])
        staged = condition(condition(mix, x[[0, 3]], [0, 3], [1, 2, 4]), x[[2]], [2], [1, 4])
        direct = condition(mix, x[[0, 2, 3]], [0, 2, 3], [1, 4])
        np.testing.assert_allclose(staged.weights, direct.weights, atol=1e-10)
        np.testing.assert_allclose(staged.means, direct.means, atol=1e-10)
        np.testing.assert_allclose(staged.covs, direct.covs, atol=1e-10)


class TestSampling:
    """Test conditional sampling"""

    def test_moments(self):
        """Draws from N(0.5, 0.75) match its moments"""
        cd = condition(CORRELATED, [1.0], [1], [0])
        draws = sample(cd, 50000, seed=0)[:, 0]
        assert draws.mean() == pytest.approx(0.5, abs=0.02)
        assert draws.var() == pytest.approx(0.75, abs=0.02)

    def test_degenerate_variance(self):
        """A near-point mass stays at its mean"""
        g = GaussianParams(mean=np.array([2.0]), cov=np.array([[REGULARIZATION]]))
        draws = sample(as_conditional(g), 200, seed=1)
        assert np.all(np.abs(draws - 2.0) < 1e-2)

    def test_same_seed_same_draws(self):
        """Sampling is deterministic in the seed"""
        cd = as_conditional(CORRELATED)
        np.testing.assert_array_equal(sample(cd, 10, seed=3), sample(cd, 10, seed=3))


class TestLogDensity:
    """Test conditional log-densities"""

    def test_standard_normal_at_zero(self):
        """log N(0; 0, 1) = -1/2 ln(2 pi)"""
        cd = marginal(as_conditional(CORRELATED), [0])
        assert log_density(cd, [0.0]) == pytest.approx(-0.9189, abs=1e-4)

    def test_integrates_to_one(self):
        """A 1-D conditional integrates to one"""
        cd = condition(CORRELATED, [1.0], [1], [0])
        total, _ = integrate.quad(lambda x: np.exp(log_density(cd, [x])), -10, 10)
        assert total == pytest.approx(1.0, abs=1e-3)

    def test_degenerate_mixture_weight(self):
        """Weights (1, 0) give the first component's density"""
        mix = MixtureModel(
            weights=np.array([1.0, 0.0]),
            components=(
                GaussianParams(mean=np.zeros(1), cov=np.eye(1)),
                GaussianParams(mean=np.full(1, 5.0), cov=np.eye(1)),
            ),
        )
        value = log_density(as_conditional(mix), [0.7])
        assert value == pytest.approx(norm.logpdf(0.7))

    def test_joint_splits_into_conditional_and_marginal(self):
        """log p(u | o) + log p(o) is the joint log-density"""
        rng = np.random.default_rng(8)
        a = rng.standard_normal((4, 4))
        g = GaussianParams(mean=rng.standard_normal(4), cov=a @ a.T + np.eye(4))
        x = rng.standard_normal(4)
        u, o = [0, 2], [1, 3]
        given = log_density(condition(g, x[o], o, u), x[u])
        observed = log_density(marginal(as_conditional(g), o), x[o])
        assert given + observed == pytest.approx(multivariate_normal.logpdf(x, g.mean, g.cov))

    def test_mixture_joint_splits(self):
        """The same identity holds once mixture weights are reweighted"""
        mix = _random_mixture(seed=9)
        x = np.array([0.1, 0.8, -0.5, 1.2, 0.0])
        u, o = [1, 4], [0, 2, 3]
        given = log_density(condition(mix, x[o], o, u), x[u])
        observed = log_density(marginal(as_conditional(mix), o), x[o])
        assert given + observed == pytest.approx(log_density(as_conditional(mix), x))


# ========================================
# Class-conditional engine
# ========================================

def _two_class_model(prior=(0.5, 0.5), means=(0.0, 2.0)):
    return ClassConditionalModel(
        class_prior=np.array(prior),
        per_class=tuple(GaussianParams(mean=np.array([m]), cov=np.eye(1)) for m in means),
    )


class TestClassConditional:
    """Test Bayes-rule posteriors and class-marginalized conditionals"""

    def test_empty_observation_returns_prior(self):
        """No evidence leaves the prior unchanged"""
        np.testing.assert_array_equal(class_posterior(_two_class_model((0.7, 0.3)), [], []), [0.7, 0.3])

    def test_equal_likelihoods_keep_prior(self):
        """Identical class densities cancel out"""
        ccm = _two_class_model((0.9, 0.1), means=(1.0, 1.0))
        np.testing.assert_allclose(class_posterior(ccm, [0.4], [0]), [0.9, 0.1])

    def test_symmetric_posterior(self):
        """Equal likelihoods under a uniform prior give a uniform posterior"""
        np.testing.assert_allclose(class_posterior(_two_class_model(), [1.0], [0]), [0.5, 0.5])

    def test_marginal_density(self):
        """Equal-weight mixture of N(0,1) and N(2,1) has density 0.2420 at 1"""
        cd = joint_given_obs(_two_class_model(), [0], [], [])
        assert np.exp(log_density(cd, [1.0])) == pytest.approx(0.2420, abs=1e-4)

    def test_single_class_equals_condition(self):
        """K = 1 reduces to plain conditioning"""
        ccm = ClassConditionalModel(class_prior=np.ones(1), per_class=(CORRELATED,))
        cd = joint_given_obs(ccm, [0], [1.0], [1])
        plain = condition(CORRELATED, [1.0], [1], [0])
        np.testing.assert_allclose(cd.means, plain.means)
        np.testing.assert_allclose(cd.covs, plain.covs)

    def test_identical_classes_ignore_prior(self):
        """Identical class models make the prior irrelevant"""
        a = joint_given_obs(_two_class_model((0.2, 0.8), (1.0, 1.0)), [0], [], [])
        b = joint_given_obs(_two_class_model((0.6, 0.4), (1.0, 1.0)), [0], [], [])
        assert log_density(a, [0.3]) == pytest.approx(log_density(b, [0.3]))

    def test_fit_prior_is_empirical(self, two_class_data):
        """Fitted prior equals class frequencies"""
        ccm = fit_class_conditional(two_class_data)
        freq = np.bincount(two_class_data.labels) / two_class_data.n
        np.testing.assert_allclose(ccm.class_prior, freq)

    def test_fit_needs_classification(self, regression_data):
        """Regression data cannot fit a class-conditional model"""
        with pytest.raises(DataError):
            fit_class_conditional(regression_data)


# ========================================
# Engines and persistence
# ========================================

class TestEngineChoice:
    """Test engine spelling"""

    @pytest.mark.parametrize("text, kind, m", [
        ("gaussian", "gaussian", 1),
        ("class_conditional(3)", "class_conditional", 3),
        ("mixture( 2 )", "mixture", 2),
    ])
    def test_parse(self, text, kind, m):
        """Known spellings parse"""
        choice = parse_engine(text)
        assert (choice.kind, choice.components) == (kind, m)

    @pytest.mark.parametrize("text", ["flow", "mixture(0)", "gaussian(2)", ""])
    def test_reject(self, text):
        """Unknown spellings are configuration errors"""
        with pytest.raises(ConfigError):
            parse_engine(text)

    def test_family_must_match_task(self, two_class_data, regression_data):
        """mixture(m) is for regression, class_conditional(m) for classification"""
        with pytest.raises(ConfigError):
            fit_engine(two_class_data, EngineChoice(kind="mixture", components=2))
        with pytest.raises(ConfigError):
            fit_engine(regression_data, EngineChoice(kind="class_conditional", components=2))


class TestPersistence:
    """Test the model JSON document"""

    def test_round_trip_densities(self, tmp_path, regression_data):
        """Reloaded engines give identical densities"""
        engine = fit_engine(regression_data, EngineChoice(kind="mixture", components=2), seed=0)
        loaded = load_engine(save_engine(engine, tmp_path / "model.json"))
        probes = np.random.default_rng(0).standard_normal((100, 4))
        before = log_density(as_conditional(engine.model), probes)
        after = log_density(as_conditional(loaded.model), probes)
        np.testing.assert_allclose(before, after, atol=1e-12)
        assert loaded.target_index == 3

    def test_classification_round_trip(self, tmp_path, classification_engine):
        """Class priors and posteriors survive a round trip"""
        loaded = load_engine(save_engine(classification_engine, tmp_path / "m.json"))
        x = [0.4, -1.0]
        np.testing.assert_allclose(
            loaded.class_posterior(x, [0, 2]), classification_engine.class_posterior(x, [0, 2]), atol=1e-12
        )

    def test_byte_identical(self, tmp_path, two_class_data):
        """Two fits with the same seed write the same bytes"""
        choice = EngineChoice(kind="class_conditional", components=2)
        a = save_engine(fit_engine(two_class_data, choice, seed=4), tmp_path / "a.json")
        b = save_engine(fit_engine(two_class_data, choice, seed=4), tmp_path / "b.json")
        assert a.read_bytes() == b.read_bytes()

    def test_missing_file(self, tmp_path):
        """Loading a missing model raises MissingFile"""
        with pytest.raises(MissingFile):
            load_engine(tmp_path / "absent.json")

    def test_malformed_document(self, tmp_path):
        """A document without mixtures is a data error"""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"task": "regression", "engine": "gaussian", "feature_names": []}))
        with pytest.raises(DataError):
            load_engine(path)
