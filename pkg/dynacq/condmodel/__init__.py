"""Analytic arbitrary-conditional density engines."""

from .gaussian import GaussianParams, fit_gaussian, gaussian_entropy, REGULARIZATION
from .mixture import MixtureModel, fit_mixture_em, as_mixture
from .conditional import (
    ConditionalDistribution,
    condition,
    marginal,
    sample,
    log_density,
    label_posterior,
    predictive_mean,
    predictive_variance,
)
from .classcond import (
    ClassConditionalModel,
    fit_class_conditional,
    class_posterior,
    joint_given_obs,
    feature_marginal_given_obs,
)
from .engine import EngineChoice, FittedEngine, parse_engine, fit_engine
from .persistence import save_engine, load_engine

__all__ = [
    "GaussianParams",
    "fit_gaussian",
    "gaussian_entropy",
    "REGULARIZATION",
    "MixtureModel",
    "fit_mixture_em",
    "as_mixture",
    "ConditionalDistribution",
    "condition",
    "marginal",
    "sample",
    "log_density",
    "label_posterior",
    "predictive_mean",
    "predictive_variance",
    "ClassConditionalModel",
    "fit_class_conditional",
    "class_posterior",
    "joint_given_obs",
    "feature_marginal_given_obs",
    "EngineChoice",
    "FittedEngine",
    "parse_engine",
    "fit_engine",
    "save_engine",
    "load_engine",
]
