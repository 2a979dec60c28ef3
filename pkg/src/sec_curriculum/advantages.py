"""Group-relative advantage estimators.

A learner reports one reward per rollout; a group is all rollouts of one
problem.  Advantages are computed within the group, and the curriculum
only ever consumes their mean absolute value, which for outcome-level
rewards measures how informative the problem currently is: zero when the
group is uniformly solved or uniformly failed, largest near a 50%
success rate.

All arithmetic here is plain Python floats with a fixed evaluation
order.  Other components (the engine log, the wire protocol, external
client mirrors) depend on these exact bit patterns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import DuplicateId, GroupTooSmall

DEFAULT_EPS = 1e-8


@dataclass(frozen=True)
class RolloutGroup:
    """All rollout rewards for one problem."""

    problem_id: str
    rewards: tuple[float, ...]

    def __post_init__(self):
        if len(self.rewards) < 2:
            raise GroupTooSmall(
                f"{self.problem_id}: need at least 2 rollouts, got {len(self.rewards)}"
            )
        object.__setattr__(self, "rewards", tuple(float(r) for r in self.rewards))
        for r in self.rewards:
            if not math.isfinite(r):
                raise ValueError(f"{self.problem_id}: non-finite reward {r!r}")


@dataclass(frozen=True)
class AdvantageVector:
    values: tuple[float, ...]

    @property
    def mean_abs(self) -> float:
        total = 0.0
        for v in self.values:
            total += abs(v)
        return total / len(self.values)


def grpo_advantages(group: RolloutGroup, eps: float = DEFAULT_EPS) -> AdvantageVector:
    """Standardize rewards within the group (population std).

    A spread below eps means the group carries no learning signal; the
    whole vector collapses to zeros rather than dividing by noise.
    """
    n = len(group.rewards)
    mean = 0.0
    for r in group.rewards:
        mean += r
    mean /= n
    var = 0.0
    for r in group.rewards:
        d = r - mean
        var += d * d
    var /= n
    std = math.sqrt(var)
    if std < eps:
        return AdvantageVector((0.0,) * n)
    return AdvantageVector(tuple((r - mean) / std for r in group.rewards))


def rloo_advantages(group: RolloutGroup) -> AdvantageVector:
    """Each reward against the mean of the other rollouts."""
    n = len(group.rewards)
    total = 0.0
    for r in group.rewards:
        total += r
    return AdvantageVector(
        tuple(r - (total - r) / (n - 1) for r in group.rewards)
    )


def expected_abs_grpo(p: float, n: int, eps: float = DEFAULT_EPS) -> float:
    """Exact E[mean_abs] for a group of n Bernoulli(p) rewards.

    For a binary group with k successes the advantage magnitudes are
    (1-k/n)/s for successes and (k/n)/s for failures with s the
    population std, so the group's mean_abs collapses to 2s; the
    expectation is the binomial-weighted sum over counts, with the same
    degenerate-group convention as grpo_advantages.  As n grows this
    approaches 2*sqrt(p*(1-p)), peaking at p = 1/2.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise GroupTooSmall(f"need at least 2 rollouts, got {n!r}")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"probability {p} outside [0, 1]")
    # Evaluate at max(p, 1-p): the identity is symmetric about 1/2, and
    # 1.0 - hi is exact for hi >= 0.5, so p and 1-p give equal bits.
    hi = max(p, 1.0 - p)
    lo = 1.0 - hi
    terms = []
    for k in range(n + 1):
        phat = k / n
        std = math.sqrt(phat * (1.0 - phat))
        if std < eps:
            continue
        weight = math.comb(n, k) * hi**k * lo ** (n - k)
        terms.append(weight * (2.0 * std))
    return math.fsum(terms)


def batch_mean_abs(
    groups: Iterable[RolloutGroup],
    estimator: Callable[[RolloutGroup], AdvantageVector] = grpo_advantages,
) -> dict[str, float]:
    """Map problem id -> mean absolute advantage, one group per problem."""
    out: dict[str, float] = {}
    for group in groups:
        if group.problem_id in out:
            raise DuplicateId(group.problem_id)
        out[group.problem_id] = estimator(group).mean_abs
    return out
