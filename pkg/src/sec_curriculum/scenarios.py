"""Learner scenario files.

A scenario is a small JSON document describing a simulated learner and
its problem pool: category axes, per-category difficulty offsets, the
coupling rule, the learning rate, and the reward scheme.  The package
ships three (see scenarios/):

    single-task-3lvl   one difficulty axis, three training levels plus a
                       held-out harder level; adjacent levels coupled
    multi-task-3x3     three tasks x three levels (nine arms), coupling
                       only within a task, tasks of very different
                       difficulty
    reverse-failure    like single-task but the hard levels start nearly
                       unsolvable, so training hardest-first stalls

Schema (all fields required unless noted):

    name                 string
    eta                  learning rate, > 0
    rollouts             rollouts per problem, >= 2
    reward_scheme        "binary" or "shaped"
    format_success_prob  real in [0, 1] (shaped scheme only; optional)
    pool_size            problems generated per training category
    axes                 ordered [axis, [labels...]] pairs; training
                         categories are their cross product
    ood                  same shape; held-out categories, evaluated but
                         never trained (optional)
    offsets              category text form -> difficulty offset
    coupling             {"rho": r, "cross_task": c}: categories at
                         difficulty-level distance d couple with r^d,
                         scaled by c when any non-difficulty axis
                         differs

Category state order is training categories (cross-product order)
followed by held-out categories; every float-sensitive loop in the
learner iterates in that order.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from importlib import resources

from .categories import CategoryKey, ProblemRecord, cross_axes
from .errors import UnknownScenario
from .learner import LearnerDynamics, LearnerState, logistic

DIFFICULTY_AXIS = "difficulty"

AxisSpec = tuple[tuple[str, tuple[str, ...]], ...]


@dataclass(frozen=True)
class Scenario:
    name: str
    eta: float
    rollouts: int
    reward_scheme: str
    format_success_prob: float
    pool_size: int
    axes: AxisSpec
    ood_axes: AxisSpec
    offsets: dict[CategoryKey, float]
    coupling_rho: float
    coupling_cross: float

    def training_categories(self) -> list[CategoryKey]:
        return cross_axes(self.axes)

    def ood_categories(self) -> list[CategoryKey]:
        if not self.ood_axes:
            return []
        return cross_axes(self.ood_axes)

    def all_categories(self) -> list[CategoryKey]:
        return self.training_categories() + self.ood_categories()

    def difficulty_levels(self) -> list[str]:
        """Training difficulty labels then held-out ones, in file order."""
        levels = []
        for axes in (self.axes, self.ood_axes):
            for axis, labels in axes:
                if axis == DIFFICULTY_AXIS:
                    levels.extend(l for l in labels if l not in levels)
        return levels

    def coupling(self, a: CategoryKey, b: CategoryKey) -> float:
        levels = self.difficulty_levels()
        distance = abs(
            levels.index(a.label(DIFFICULTY_AXIS)) - levels.index(b.label(DIFFICULTY_AXIS))
        )
        value = self.coupling_rho**distance
        same_task = all(
            label == b.label(axis)
            for axis, label in a.parts
            if axis != DIFFICULTY_AXIS
        )
        if not same_task:
            value *= self.coupling_cross
        return value

    def dynamics(self) -> LearnerDynamics:
        return LearnerDynamics(
            eta=self.eta,
            rollouts=self.rollouts,
            reward_scheme=self.reward_scheme,
            format_success_prob=self.format_success_prob,
        )

    def build_state(self) -> LearnerState:
        categories = self.all_categories()
        coupling = {
            (a, b): self.coupling(a, b) for a in categories for b in categories
        }
        return LearnerState(
            skill={c: 0.0 for c in categories},
            offsets={c: self.offsets[c] for c in categories},
            coupling=coupling,
        )

    def initial_rate(self, category: CategoryKey) -> float:
        return logistic(0.0 - self.offsets[category])

    def build_problems(self) -> list[ProblemRecord]:
        """Synthetic pool: pool_size problems per training category.

        Ids are stable ("<labels>-<index>") and each problem carries its
        category's exact initial success probability as its rate, which
        is what success-rate binning consumes.
        """
        problems = []
        for category in self.training_categories():
            stem = "-".join(label for _, label in category.parts)
            rate = self.initial_rate(category)
            problems.extend(
                ProblemRecord(f"{stem}-{i:04d}", category, b"", rate)
                for i in range(self.pool_size)
            )
        return problems

    def true_categories(self) -> dict[str, CategoryKey]:
        return {rec.problem_id: rec.category for rec in self.build_problems()}


def _parse_axes(raw, what: str) -> AxisSpec:
    if not isinstance(raw, list):
        raise ValueError(f"{what} must be a list of [axis, labels] pairs")
    return tuple((axis, tuple(labels)) for axis, labels in raw)


def parse_scenario(raw: dict) -> Scenario:
    try:
        axes = _parse_axes(raw["axes"], "axes")
        ood_axes = _parse_axes(raw.get("ood", []), "ood")
        coupling = raw["coupling"]
        scenario = Scenario(
            name=raw["name"],
            eta=float(raw["eta"]),
            rollouts=int(raw["rollouts"]),
            reward_scheme=raw["reward_scheme"],
            format_success_prob=float(raw.get("format_success_prob", 0.0)),
            pool_size=int(raw["pool_size"]),
            axes=axes,
            ood_axes=ood_axes,
            offsets={
                CategoryKey.parse(text): float(value)
                for text, value in raw["offsets"].items()
            },
            coupling_rho=float(coupling["rho"]),
            coupling_cross=float(coupling.get("cross_task", 0.0)),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad scenario document: {exc}") from exc
    if scenario.pool_size < 1:
        raise ValueError("pool_size must be >= 1")
    if not 0.0 <= scenario.coupling_rho <= 1.0:
        raise ValueError("coupling rho outside [0, 1]")
    if not 0.0 <= scenario.coupling_cross <= 1.0:
        raise ValueError("coupling cross_task outside [0, 1]")
    for category in scenario.all_categories():
        if category not in scenario.offsets:
            raise ValueError(f"missing offset for {category}")
        if DIFFICULTY_AXIS not in category.axes:
            raise ValueError(f"{category} has no {DIFFICULTY_AXIS} axis")
        if not math.isfinite(scenario.offsets[category]):
            raise ValueError(f"offset for {category} not finite")
    scenario.build_state()  # runs the full state validation
    return scenario


def shipped_scenarios() -> list[str]:
    names = []
    for entry in resources.files(__package__).joinpath("scenarios").iterdir():
        if entry.name.endswith(".json"):
            names.append(entry.name[: -len(".json")])
    return sorted(names)


def load_scenario(name_or_path: str) -> Scenario:
    """Load a shipped scenario by name, or any scenario file by path."""
    shipped = resources.files(__package__).joinpath("scenarios").joinpath(
        f"{name_or_path}.json"
    )
    if shipped.is_file():
        raw = json.loads(shipped.read_text(encoding="utf-8"))
    elif os.path.exists(name_or_path):
        with open(name_or_path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raise UnknownScenario(
            f"{name_or_path!r} is not a shipped scenario {shipped_scenarios()} "
            "or a readable file"
        )
    return parse_scenario(raw)
