"""
Chronologically constrained acquisition with a Dirichlet policy.

Only steps after the latest acquired one may be chosen. A prior
Dir(alpha (T - t)) favours early steps; counts drawn from
p(V = t) proportional to exp(I(x_t; y | x_o)) update it by conjugacy, and one
posterior draw picks the step.
"""

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from ..acquisition.greedy import derive_seed
from ..cmi.estimators import DEFAULT_SAMPLES, cmi_classification
from ..condmodel.engine import FittedEngine
from ..core.errors import ConfigError, DimensionMismatch, Misaligned, NoRemainingSteps, StateError
from ..core.state import ObservedState
from .schemas import ChronoStepRecord, ChronoTrace

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 10.0


def step_block(t: int, step_width: int) -> Tuple[int, ...]:
    """Feature indices of time step t (time-major layout)."""
    return tuple(range(t * step_width, (t + 1) * step_width))


@dataclass(frozen=True)
class ChronoState:
    """
    Observed state of a time series with strictly increasing acquired steps.

    Attributes:
        T: Number of time steps
        step_width: Features per step
        state: Underlying observed state over T * step_width features
        acquired_steps: Acquired time steps in order
    """

    T: int
    step_width: int = 1
    state: Optional[ObservedState] = None
    acquired_steps: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.T < 1 or self.step_width < 1:
            raise ConfigError(f"need T >= 1 and step_width >= 1, got T={self.T}, step_width={self.step_width}")
        if self.state is None:
            object.__setattr__(self, "state", ObservedState.empty(self.T * self.step_width))
        if any(b <= a for a, b in zip(self.acquired_steps, self.acquired_steps[1:])):
            raise StateError(f"acquired steps must strictly increase: {self.acquired_steps}")

    @property
    def max_step(self) -> int:
        return self.acquired_steps[-1] if self.acquired_steps else -1

    @property
    def remaining(self) -> Tuple[int, ...]:
        return tuple(range(self.max_step + 1, self.T))

    def acquire_step(self, t: int, values: Sequence[float]) -> "ChronoState":
        if t not in self.remaining:
            raise StateError(f"time step {t} is not after the last acquired step {self.max_step}")
        block = step_block(t, self.step_width)
        return ChronoState(
            T=self.T,
            step_width=self.step_width,
            state=self.state.acquire_many(block, values),
            acquired_steps=self.acquired_steps + (t,),
        )


@dataclass(frozen=True, eq=False)
class DirichletParams:
    support: Tuple[int, ...]
    concentrations: np.ndarray

    def __post_init__(self):
        conc = np.asarray(self.concentrations, dtype=float).reshape(-1)
        object.__setattr__(self, "support", tuple(int(t) for t in self.support))
        object.__setattr__(self, "concentrations", conc)
        if not self.support:
            raise NoRemainingSteps("Dirichlet support is empty")
        if conc.shape[0] != len(self.support):
            raise Misaligned(f"{conc.shape[0]} concentrations for {len(self.support)} steps")
        if np.any(conc <= 0):
            raise ConfigError("Dirichlet concentrations must be positive")

    @property
    def mean(self) -> np.ndarray:
        return self.concentrations / self.concentrations.sum()


def prior_params(T: int, max_o: int, alpha: float = DEFAULT_ALPHA) -> DirichletParams:
    """
    Concentration alpha (T - t) for each t in max_o+1 .. T-1.

    Raises:
        NoRemainingSteps: If max_o >= T - 1
    """
    if alpha <= 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    if max_o >= T - 1:
        raise NoRemainingSteps(f"no time step after {max_o} in a series of length {T}")
    support = tuple(range(max_o + 1, T))
    return DirichletParams(support=support, concentrations=np.array([alpha * (T - t) for t in support], dtype=float))


def posterior_params(prior: DirichletParams, counts) -> DirichletParams:
    """Conjugate update: concentrations plus counts."""
    counts = np.asarray(counts, dtype=float).reshape(-1)
    if counts.shape[0] != len(prior.support):
        raise Misaligned(f"{counts.shape[0]} counts for {len(prior.support)} steps")
    return DirichletParams(support=prior.support, concentrations=prior.concentrations + counts)


def informativeness_probabilities(scores) -> np.ndarray:
    """Softmax of CMI scores clamped below at 0."""
    return softmax(np.maximum(np.asarray(scores, dtype=float), 0.0))


def draw_counts(probs, N: int, seed=None) -> np.ndarray:
    """Counts of N categorical draws from ``probs``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.multinomial(int(N), np.asarray(probs, dtype=float))


def informativeness_scores(
    model: FittedEngine, chrono: ChronoState, n_samples: int = DEFAULT_SAMPLES, seed: int = 0
) -> np.ndarray:
    """Block CMI of every remaining step; step t draws from SeedSequence([seed, 0, t])."""
    if not chrono.remaining:
        raise NoRemainingSteps("no remaining time steps")
    return np.array([
        cmi_classification(
            model.model,
            step_block(t, chrono.step_width),
            chrono.state,
            n_samples,
            np.random.SeedSequence([seed, 0, t]),
        ).value
        for t in chrono.remaining
    ])


def informativeness_counts(
    model: FittedEngine,
    chrono: ChronoState,
    N: Optional[int] = None,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> np.ndarray:
    """
    Counts over the remaining steps from N draws of p(V = t) ~ exp(I).

    N defaults to five times the number of remaining steps.
    """
    scores = informativeness_scores(model, chrono, n_samples, seed)
    N = 5 * len(chrono.remaining) if N is None else N
    return draw_counts(informativeness_probabilities(scores), N, np.random.SeedSequence([seed, 1]))


def select_time_step(post: DirichletParams, seed=None) -> int:
    """Draw rho ~ Dir(post) from normalized Gamma draws and return the argmax step (earliest on ties)."""
    if len(post.support) == 1:
        return post.support[0]
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    gammas = rng.gamma(post.concentrations)
    rho = gammas / gammas.sum()
    return post.support[int(np.argmax(rho))]


def _posterior_summary(model: FittedEngine, state: ObservedState) -> Tuple[int, float]:
    posterior = model.class_posterior(state.x_o, state.observed)
    label = int(np.argmax(posterior))
    return label, float(posterior[label])


def run_chrono_episode(
    model: FittedEngine,
    instance,
    T: int,
    step_width: int = 1,
    budget: Optional[int] = None,
    alpha: float = DEFAULT_ALPHA,
    selection: Literal["dirichlet", "uniform"] = "dirichlet",
    N: Optional[int] = None,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    instance_id: int = 0,
) -> ChronoTrace:
    """
    Budget-mode time-series acquisition.

    Each step selects one remaining time step, either by the Dirichlet
    policy or uniformly at random (baseline), acquires its whole feature
    block and predicts.

    Args:
        budget: Maximum time steps to acquire (default: all T)
    """
    if not model.is_classification:
        raise ConfigError("time-series acquisition is defined for classification engines")
    if selection not in ("dirichlet", "uniform"):
        raise ConfigError(f"unknown selection {selection!r}")
    row = np.asarray(instance, dtype=float).reshape(-1)
    if row.shape[0] != T * step_width or model.dim != T * step_width:
        raise DimensionMismatch(f"expected {T} x {step_width} features, got {row.shape[0]} (engine {model.dim})")
    budget = T if budget is None else budget

    chrono = ChronoState(T=T, step_width=step_width)
    initial_pred, initial_conf = _posterior_summary(model, chrono.state)
    steps = []
    pred = initial_pred

    for k in range(budget):
        if not chrono.remaining:
            break
        step_seed = [seed, 2, k]
        counts = []
        if selection == "dirichlet":
            prior = prior_params(T, chrono.max_step, alpha)
            count_arr = informativeness_counts(model, chrono, N, n_samples, derive_seed(*step_seed))
            t = select_time_step(posterior_params(prior, count_arr), np.random.SeedSequence(step_seed + [1]))
            counts = [int(c) for c in count_arr]
        else:
            rng = np.random.default_rng(np.random.SeedSequence(step_seed))
            t = int(rng.choice(chrono.remaining))
        support = list(chrono.remaining)
        block = step_block(t, step_width)
        chrono = chrono.acquire_step(t, row[list(block)])
        pred, conf = _posterior_summary(model, chrono.state)
        steps.append(ChronoStepRecord(
            time_step=t, features=list(block), support=support, counts=counts, prediction=pred, confidence=conf,
        ))

    return ChronoTrace(
        instance=instance_id,
        selection=selection,
        initial_prediction=initial_pred,
        initial_confidence=initial_conf,
        steps=steps,
        final_prediction=pred,
    )
