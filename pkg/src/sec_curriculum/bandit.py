"""Curriculum bandit core.

Problem categories are arms of a non-stationary bandit.  Each arm keeps
a value estimate Q updated by an exponential moving average of the
category's observed reward (the mean absolute advantage of its sampled
problems), and batches are drawn from the Boltzmann distribution over
current Q values.  High Q means "training on this category currently
moves the learner"; the temperature trades exploitation against keeping
stale arms alive.

Everything here is a pure function over small value types; the engine
module owns state, logging, and the wire protocol on top of these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .categories import CategoryKey, Registry
from .errors import (
    BadConfig,
    EmptyCategories,
    MissingAdvantage,
    UnknownCategory,
)
from .rng import DrawStreams, categorical, uniform_index

# Smallest positive double; used to floor probabilities so that extreme
# temperatures cannot round an arm's probability to exactly zero.
_TINY = 5e-324

DEFAULT_ALPHA = 0.5
DEFAULT_TAU = 1.0


@dataclass(frozen=True)
class BanditConfig:
    alpha: float = DEFAULT_ALPHA
    tau: float = DEFAULT_TAU
    batch_size: int = 64
    seed: int = 0
    dedupe_within_batch: bool = False

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise BadConfig(f"alpha must be in (0, 1], got {self.alpha}")
        if not (self.tau > 0.0 and math.isfinite(self.tau)):
            raise BadConfig(f"tau must be positive, got {self.tau}")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise BadConfig(f"batch size must be a positive integer, got {self.batch_size}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise BadConfig(f"seed must be a uint64, got {self.seed}")


@dataclass
class QTable:
    """Per-category value estimates plus the update counter.

    Treat instances as immutable; td0_update returns a new table.
    """

    values: dict[CategoryKey, float]
    step: int = 0


@dataclass(frozen=True)
class Batch:
    """Ordered batch slots; the same problem may fill several slots."""

    entries: tuple[tuple[str, CategoryKey], ...]


@dataclass(frozen=True)
class CategoryReward:
    category: CategoryKey
    reward: float
    support: int

    def __post_init__(self):
        if not (self.reward >= 0.0 and math.isfinite(self.reward)):
            raise ValueError(f"reward must be finite and >= 0, got {self.reward}")
        if self.support < 1:
            raise ValueError(f"support must be >= 1, got {self.support}")


def init_qtable(categories: Iterable[CategoryKey]) -> QTable:
    cats = list(categories)
    if not cats:
        raise EmptyCategories("need at least one category")
    if len(set(cats)) != len(cats):
        raise ValueError("duplicate categories")
    return QTable({c: 0.0 for c in cats}, step=0)


def category_distribution(qtable: QTable, tau: float) -> dict[CategoryKey, float]:
    """Boltzmann distribution over arms at temperature tau.

    The max is subtracted before exponentiation, which bounds the
    exponents at zero and makes the result invariant (to rounding) under
    shifting all Q values by a constant.
    """
    if not qtable.values:
        raise EmptyCategories("empty QTable")
    top = max(qtable.values.values())
    weights = []
    for v in qtable.values.values():
        w = math.exp((v - top) / tau)
        weights.append(w if w > 0.0 else _TINY)
    z = 0.0
    for w in weights:
        z += w
    dist = {}
    for key, w in zip(qtable.values.keys(), weights):
        p = w / z
        dist[key] = p if p > 0.0 else _TINY
    return dist


def sample_from_distribution(
    dist: Mapping[CategoryKey, float],
    registry: Registry,
    count: int,
    streams: DrawStreams,
    dedupe_within_batch: bool = False,
) -> Batch:
    """Draw `count` slots: category from dist, then problem uniformly.

    Slot j consumes exactly one double from the category stream and one
    from the pool stream (plus one pool double per dedupe re-draw), in
    slot order; this consumption contract is what makes trajectories
    reproducible across processes.
    """
    keys = list(dist.keys())
    weights = [dist[k] for k in keys]
    pools = {k: registry.problems_in(k) for k in keys}
    taken: dict[CategoryKey, set[int]] = {k: set() for k in keys}
    entries = []
    for _ in range(count):
        key = keys[categorical(streams.category.next(), weights)]
        pool = pools[key]
        index = uniform_index(streams.pool.next(), len(pool))
        if dedupe_within_batch:
            while index in taken[key] and len(taken[key]) < len(pool):
                index = uniform_index(streams.pool.next(), len(pool))
            taken[key].add(index)
        entries.append((pool[index].problem_id, key))
    return Batch(tuple(entries))


def sample_batch(
    qtable: QTable,
    registry: Registry,
    config: BanditConfig,
    streams: DrawStreams,
) -> Batch:
    """One training batch drawn from the current Boltzmann distribution."""
    for key in qtable.values:
        if not registry.has_category(key):
            raise UnknownCategory(str(key))
    dist = category_distribution(qtable, config.tau)
    return sample_from_distribution(
        dist, registry, config.batch_size, streams, config.dedupe_within_batch
    )


def aggregate_rewards(
    batch: Batch, abs_advantages: Mapping[str, float]
) -> list[CategoryReward]:
    """Mean absolute advantage per category over the batch's slots.

    Categories are emitted in first-occurrence order; a slot whose
    problem id has no advantage value is a contract violation.
    """
    grouped: dict[CategoryKey, list[float]] = {}
    for problem_id, category in batch.entries:
        if problem_id not in abs_advantages:
            raise MissingAdvantage(problem_id)
        grouped.setdefault(category, []).append(float(abs_advantages[problem_id]))
    rewards = []
    for category, values in grouped.items():
        total = 0.0
        for v in values:
            total += v
        rewards.append(CategoryReward(category, total / len(values), len(values)))
    return rewards


def td0_update(
    qtable: QTable, rewards: Sequence[CategoryReward], alpha: float
) -> QTable:
    """Blend observed rewards into Q; unrewarded arms keep their value."""
    values = dict(qtable.values)
    for item in rewards:
        if item.category not in values:
            raise UnknownCategory(str(item.category))
        values[item.category] = alpha * item.reward + (1.0 - alpha) * values[item.category]
    return QTable(values, step=qtable.step + 1)


AdvantageSource = Callable[[Batch], Mapping[str, float]]


def step(
    qtable: QTable,
    registry: Registry,
    config: BanditConfig,
    streams: DrawStreams,
    advantage_source: AdvantageSource,
) -> tuple[Batch, list[CategoryReward], QTable]:
    """sample -> collect advantages -> aggregate -> update, atomically."""
    batch = sample_batch(qtable, registry, config, streams)
    values = advantage_source(batch)
    rewards = aggregate_rewards(batch, values)
    return batch, rewards, td0_update(qtable, rewards, config.alpha)
