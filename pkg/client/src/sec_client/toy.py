"""A toy Bernoulli trainer for driving a curriculum server.

This is the client-side twin of the server package's simulated learner:
per-category latent skill, logistic success probability against a fixed
difficulty offset, and skill gains proportional to reported advantage
magnitudes through a coupling matrix.  The float expressions are written
in the exact evaluation order the server's learner uses, so at equal
seeds a loop driven through the wire reproduces the engine's logged Q
trajectory bit-for-bit.  Scenario files use the same JSON schema the
server's harness consumes.

The toy assumes the curriculum's arms are the learner's own categories;
re-binned pools (the server's --bins mode) are out of scope here.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Mapping, Sequence

import numpy as np

DIFFICULTY_AXIS = "difficulty"

# Noise stream ids, matching the simulated learner's convention: one
# Philox stream per noise source, keyed (seed, stream id).
SUCCESS_STREAM = 2
FORMAT_STREAM = 3

REWARD_SCHEMES = ("binary", "shaped")
ESTIMATORS = ("grpo", "rloo")

GRPO_EPS = 1e-8


def logistic(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def grpo_mean_abs(rewards: Sequence[float]) -> float:
    """Mean |standardized reward| with the population std, 0 when flat."""
    n = len(rewards)
    mean = 0.0
    for r in rewards:
        mean += r
    mean /= n
    var = 0.0
    for r in rewards:
        d = r - mean
        var += d * d
    var /= n
    std = math.sqrt(var)
    if std < GRPO_EPS:
        return 0.0
    total = 0.0
    for r in rewards:
        total += abs((r - mean) / std)
    return total / n


def rloo_mean_abs(rewards: Sequence[float]) -> float:
    """Mean |reward minus the mean of the other rollouts|."""
    n = len(rewards)
    total = 0.0
    for r in rewards:
        total += r
    acc = 0.0
    for r in rewards:
        acc += abs(r - (total - r) / (n - 1))
    return acc / n


def _parse_parts(text: str) -> tuple[tuple[str, str], ...]:
    parts = []
    for chunk in text.split("|"):
        axis, sep, label = chunk.partition("=")
        if not sep or not axis or not label:
            raise ValueError(f"bad category text {text!r}")
        parts.append((axis, label))
    return tuple(parts)


def _cross(axes: Sequence[tuple[str, Sequence[str]]]) -> list[str]:
    # Cartesian product in text form, first axis varying slowest.
    texts = [""]
    for axis, labels in axes:
        texts = [
            (prefix + "|" if prefix else "") + f"{axis}={label}"
            for prefix in texts
            for label in labels
        ]
    return texts


class ToyScenario:
    """Parsed scenario file, keyed by category text form."""

    def __init__(self, raw: dict):
        try:
            self.name = raw["name"]
            self.eta = float(raw["eta"])
            self.rollouts = int(raw["rollouts"])
            self.reward_scheme = raw["reward_scheme"]
            self.format_success_prob = float(raw.get("format_success_prob", 0.0))
            axes = [(axis, list(labels)) for axis, labels in raw["axes"]]
            ood = [(axis, list(labels)) for axis, labels in raw.get("ood", [])]
            self.offsets = {text: float(v) for text, v in raw["offsets"].items()}
            self.rho = float(raw["coupling"]["rho"])
            self.cross = float(raw["coupling"].get("cross_task", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad scenario document: {exc}") from exc
        if self.reward_scheme not in REWARD_SCHEMES:
            raise ValueError(f"unknown reward scheme {self.reward_scheme!r}")
        if self.rollouts < 2:
            raise ValueError(f"need at least 2 rollouts, got {self.rollouts}")

        self.training = _cross(axes)
        self.held_out = _cross(ood) if ood else []
        # State order everywhere: training categories then held-out ones.
        self.categories = self.training + self.held_out
        self._parts = {text: _parse_parts(text) for text in self.categories}

        levels: list[str] = []
        for axis_list in (axes, ood):
            for axis, labels in axis_list:
                if axis == DIFFICULTY_AXIS:
                    levels.extend(l for l in labels if l not in levels)
        self._levels = levels

        for text in self.categories:
            if text not in self.offsets:
                raise ValueError(f"missing offset for {text}")
            if DIFFICULTY_AXIS not in dict(self._parts[text]):
                raise ValueError(f"{text} has no {DIFFICULTY_AXIS} axis")

    def _label(self, text: str, axis: str) -> str:
        return dict(self._parts[text])[axis]

    def coupling(self, a: str, b: str) -> float:
        distance = abs(
            self._levels.index(self._label(a, DIFFICULTY_AXIS))
            - self._levels.index(self._label(b, DIFFICULTY_AXIS))
        )
        value = self.rho**distance
        same_task = all(
            label == self._label(b, axis)
            for axis, label in self._parts[a]
            if axis != DIFFICULTY_AXIS
        )
        if not same_task:
            value *= self.cross
        return value


def load_toy_scenario(path: str) -> ToyScenario:
    with open(path, "r", encoding="utf-8") as fh:
        return ToyScenario(json.load(fh))


class ToyLearner:
    """Stateful toy trainee consuming batches of (problem_id, category)."""

    def __init__(self, scenario: ToyScenario, seed: int, estimator: str = "grpo"):
        if estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {estimator!r}")
        self.scenario = scenario
        self.skill = {text: 0.0 for text in scenario.categories}
        self.offsets = {text: scenario.offsets[text] for text in scenario.categories}
        self.coupling = {
            (a, b): scenario.coupling(a, b)
            for a in scenario.categories
            for b in scenario.categories
        }
        self._mean_abs = grpo_mean_abs if estimator == "grpo" else rloo_mean_abs
        self._success = np.random.Generator(np.random.Philox(key=[seed, SUCCESS_STREAM]))
        self._format = np.random.Generator(np.random.Philox(key=[seed, FORMAT_STREAM]))

    def success_probability(self, category: str) -> float:
        if category not in self.skill:
            raise ValueError(f"unknown category {category!r}")
        return logistic(self.skill[category] - self.offsets[category])

    def _rollout_rewards(self, category: str) -> tuple[float, ...]:
        # Stream consumption is data-independent: exactly `rollouts`
        # doubles from the success stream, plus the same number from the
        # format stream under the shaped scheme.
        p = self.success_probability(category)
        n = self.scenario.rollouts
        draws = [float(u) for u in self._success.random(n)]
        if self.scenario.reward_scheme == "shaped":
            format_draws = [float(u) for u in self._format.random(n)]
            return tuple(
                1.0
                if u < p
                else (0.1 if f < self.scenario.format_success_prob else 0.0)
                for u, f in zip(draws, format_draws)
            )
        return tuple(1.0 if u < p else 0.0 for u in draws)

    def batch_advantages(self, entries: Iterable[tuple[str, str]]) -> dict[str, float]:
        """Mean-abs advantage per unique problem id, first-occurrence order."""
        values: dict[str, float] = {}
        for problem_id, category in entries:
            if problem_id not in values:
                values[problem_id] = self._mean_abs(self._rollout_rewards(category))
        return values

    def train(
        self,
        entries: Iterable[tuple[str, str]],
        abs_advantages: Mapping[str, float],
    ) -> None:
        """Practice every batch slot: skills gain eta * coupling * mean-abs.

        Slots in batch order, target categories in state order, so the
        resulting floats are reproducible.  Duplicate slots train twice.
        """
        targets = list(self.skill)
        for problem_id, category in entries:
            value = float(abs_advantages[problem_id])
            for target in targets:
                c = self.coupling[(category, target)]
                if c != 0.0:
                    self.skill[target] += self.scenario.eta * c * value

    def evaluate(self) -> dict[str, float]:
        """Exact per-category success probability; consumes no randomness."""
        return {text: self.success_probability(text) for text in self.scenario.categories}
