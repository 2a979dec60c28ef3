"""Deterministic simulated learner.

A stand-in for an RL trainee with controllable dynamics: each category
has a latent skill and a fixed difficulty offset, success probability is
logistic(skill - offset), and practicing a problem raises skill across
categories in proportion to a coupling matrix and to the problem's mean
absolute advantage.  Skills never decrease, so easy categories saturate
and stop producing signal, which is exactly the regime the curriculum
bandit is supposed to exploit.

Float expressions here are evaluation-order sensitive on purpose: the
wire-protocol conformance suite replays them bit-for-bit from an
independent client, so keep them simple and sequential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .advantages import AdvantageVector, RolloutGroup, grpo_advantages
from .bandit import Batch
from .categories import CategoryKey
from .errors import MissingAdvantage, UnknownCategory
from .rng import FORMAT_STREAM, SUCCESS_STREAM, UniformStream

REWARD_SCHEMES = ("binary", "shaped")


def logistic(x: float) -> float:
    """Overflow-safe logistic function."""
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class LearnerState:
    """Latent skills, fixed offsets, and the cross-category coupling."""

    skill: dict[CategoryKey, float]
    offsets: dict[CategoryKey, float]
    coupling: dict[tuple[CategoryKey, CategoryKey], float]

    def __post_init__(self):
        if set(self.skill) != set(self.offsets):
            raise ValueError("skill and offset keys differ")
        keys = list(self.skill)
        for a in keys:
            for b in keys:
                c = self.coupling.get((a, b))
                if c is None:
                    raise ValueError(f"missing coupling ({a}, {b})")
                if not 0.0 <= c <= 1.0:
                    raise ValueError(f"coupling ({a}, {b}) = {c} outside [0, 1]")
                if c != self.coupling[(b, a)]:
                    raise ValueError(f"coupling not symmetric at ({a}, {b})")
            if self.coupling[(a, a)] != 1.0:
                raise ValueError(f"coupling diagonal at {a} must be 1")


@dataclass(frozen=True)
class LearnerDynamics:
    eta: float
    rollouts: int = 8
    reward_scheme: str = "binary"
    format_success_prob: float = 0.0

    def __post_init__(self):
        if not (self.eta > 0.0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.rollouts < 2:
            raise ValueError(f"need at least 2 rollouts, got {self.rollouts}")
        if self.reward_scheme not in REWARD_SCHEMES:
            raise ValueError(f"unknown reward scheme {self.reward_scheme!r}")
        if not 0.0 <= self.format_success_prob <= 1.0:
            raise ValueError("format_success_prob outside [0, 1]")


def success_probability(state: LearnerState, category: CategoryKey) -> float:
    if category not in state.skill:
        raise UnknownCategory(str(category))
    return logistic(state.skill[category] - state.offsets[category])


def rollout(
    state: LearnerState,
    dynamics: LearnerDynamics,
    problem_id: str,
    category: CategoryKey,
    success_stream: UniformStream,
    format_stream: UniformStream | None = None,
) -> RolloutGroup:
    """One group of Bernoulli rollouts through the reward scheme.

    Consumes exactly `rollouts` doubles from the success stream, plus
    (for the shaped scheme) the same number from the format stream
    regardless of which rollouts succeeded, so consumption is
    data-independent.
    """
    p = success_probability(state, category)
    n = dynamics.rollouts
    draws = success_stream.take(n)
    if dynamics.reward_scheme == "shaped":
        if format_stream is None:
            raise ValueError("shaped scheme needs a format stream")
        format_draws = format_stream.take(n)
        rewards = tuple(
            1.0 if u < p else (0.1 if f < dynamics.format_success_prob else 0.0)
            for u, f in zip(draws, format_draws)
        )
    else:
        rewards = tuple(1.0 if u < p else 0.0 for u in draws)
    return RolloutGroup(problem_id, rewards)


def train_update(
    state: LearnerState,
    dynamics: LearnerDynamics,
    batch: Batch,
    abs_advantages: Mapping[str, float],
) -> LearnerState:
    """Practice every batch slot: skills gain eta * coupling * mean-abs.

    Slots are processed in batch order and categories in state order, so
    the resulting floats are reproducible.  Duplicate slots train twice.
    """
    skill = dict(state.skill)
    targets = list(skill)
    for problem_id, category in batch.entries:
        if category not in skill:
            raise UnknownCategory(str(category))
        if problem_id not in abs_advantages:
            raise MissingAdvantage(problem_id)
        value = float(abs_advantages[problem_id])
        if not (value >= 0.0 and math.isfinite(value)):
            raise ValueError(f"{problem_id}: bad advantage value {value}")
        for target in targets:
            c = state.coupling[(category, target)]
            if c != 0.0:
                skill[target] += dynamics.eta * c * value
    return LearnerState(skill, state.offsets, state.coupling)


def evaluate(
    state: LearnerState, categories: Iterable[CategoryKey]
) -> dict[CategoryKey, float]:
    """Exact per-category success probability; consumes no randomness."""
    return {c: success_probability(state, c) for c in categories}


class SimulatedLearner:
    """Stateful wrapper bundling learner state, dynamics, and noise.

    `true_category` translates pool problem ids back to the categories
    the learner actually models, for runs where the curriculum's arms
    are a re-binned view of the pool.
    """

    def __init__(
        self,
        state: LearnerState,
        dynamics: LearnerDynamics,
        seed: int,
        true_category: Mapping[str, CategoryKey] | None = None,
        estimator: Callable[[RolloutGroup], AdvantageVector] = grpo_advantages,
    ):
        self.state = state
        self.dynamics = dynamics
        self.success_stream = UniformStream(seed, SUCCESS_STREAM)
        self.format_stream = UniformStream(seed, FORMAT_STREAM)
        self._true_category = dict(true_category or {})
        self._estimator = estimator

    def _resolve(self, problem_id: str, category: CategoryKey) -> CategoryKey:
        return self._true_category.get(problem_id, category)

    def rollout(self, problem_id: str, category: CategoryKey) -> RolloutGroup:
        return rollout(
            self.state,
            self.dynamics,
            problem_id,
            self._resolve(problem_id, category),
            self.success_stream,
            self.format_stream,
        )

    def batch_advantages(self, batch: Batch) -> dict[str, float]:
        """Mean-abs advantage per unique problem id, first-occurrence order.

        One rollout group per unique id; duplicate slots reuse the value.
        """
        values: dict[str, float] = {}
        for problem_id, category in batch.entries:
            if problem_id not in values:
                group = self.rollout(problem_id, category)
                values[problem_id] = self._estimator(group).mean_abs
        return values

    def train(self, batch: Batch, abs_advantages: Mapping[str, float]) -> None:
        resolved = Batch(
            tuple(
                (pid, self._resolve(pid, category)) for pid, category in batch.entries
            )
        )
        self.state = train_update(self.state, self.dynamics, resolved, abs_advantages)

    def evaluate(self, categories: Iterable[CategoryKey]) -> dict[CategoryKey, float]:
        return evaluate(self.state, categories)
