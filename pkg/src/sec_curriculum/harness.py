"""Experiment harness: full runs of a curriculum against a simulated learner.

A run wires together one scenario, one curriculum policy, and one
simulated learner, steps them for a fixed budget, and reports step
records plus periodic exact evaluations.  Baseline policies (random,
ordered, reverse) live here; they drive the same Engine as the adaptive
policy so their logs are directly comparable.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .advantages import grpo_advantages, rloo_advantages
from .bandit import BanditConfig, CategoryReward
from .categories import CategoryKey, Registry, bin_by_success_rate, build_registry
from .engine import Engine, SecPolicy, StepRecord, numeric_difficulty
from .errors import BadConfig, CurriculumError, NonNumericAxis
from .learner import SimulatedLearner
from .scenarios import Scenario, load_scenario
from .serialize import emit_line, parse_line

CURRICULA = ("sec", "sec-2d", "random", "ordered", "reverse")
ESTIMATORS = {"grpo": grpo_advantages, "rloo": rloo_advantages}

STEPS_FILE = "steps.jsonl"
EVALS_FILE = "evals.jsonl"
SUMMARY_FILE = "run.json"


class RandomPolicy:
    """Stationary baseline: category mass proportional to pool size.

    Equivalent to drawing problems uniformly from the whole pool, just
    factored through the category machinery so logs stay comparable.
    Never reads or writes Q values.
    """

    kind = "random"

    def __init__(self, registry: Registry):
        total = sum(registry.pool_size(c) for c in registry.categories)
        self._dist = {
            c: registry.pool_size(c) / total for c in registry.categories
        }

    def distribution(self, step: int) -> dict[CategoryKey, float]:
        return dict(self._dist)

    def update(self, rewards: Sequence[CategoryReward]) -> None:
        pass

    def q_items(self) -> list[tuple[CategoryKey, float]]:
        return []


class SchedulePolicy:
    """Fixed-order baseline: equal time slices over difficulty levels.

    Categories are grouped by numeric difficulty and each group gets an
    equal slice of the step budget, easiest first.  Within the active
    slice, mass is proportional to pool size.  The mirrored variant
    replays the same schedule backwards: mirrored step t behaves exactly
    like forward step (total - 1 - t).
    """

    def __init__(self, registry: Registry, total_steps: int, mirrored: bool = False):
        if total_steps < 1:
            raise BadConfig(f"total_steps must be >= 1, got {total_steps}")
        levels: dict[float, list[CategoryKey]] = {}
        for category in registry.categories:
            value = numeric_difficulty(category)
            if value is None:
                raise NonNumericAxis(
                    f"cannot order category {category} by difficulty"
                )
            levels.setdefault(value, []).append(category)
        self._groups = [levels[v] for v in sorted(levels)]
        self._total = total_steps
        self._mirrored = mirrored
        self._registry = registry
        self.kind = "reverse" if mirrored else "ordered"

    def group_index(self, step: int) -> int:
        if self._mirrored:
            step = self._total - 1 - step
        step = min(max(step, 0), self._total - 1)
        return min(len(self._groups) - 1, step * len(self._groups) // self._total)

    def distribution(self, step: int) -> dict[CategoryKey, float]:
        group = self._groups[self.group_index(step)]
        total = sum(self._registry.pool_size(c) for c in group)
        return {c: self._registry.pool_size(c) / total for c in group}

    def update(self, rewards: Sequence[CategoryReward]) -> None:
        pass

    def q_items(self) -> list[tuple[CategoryKey, float]]:
        return []


@dataclass(frozen=True)
class RunConfig:
    curriculum: str = "sec"
    scenario: str = "single-task-3lvl"
    steps: int = 400
    eval_every: int = 50
    alpha: float = 0.5
    tau: float = 1.0
    batch_size: int = 64
    seed: int = 0
    estimator: str = "grpo"
    bins: int | None = None
    rollouts: int | None = None
    dedupe_within_batch: bool = False
    out: str | None = None

    def __post_init__(self) -> None:
        if self.curriculum not in CURRICULA:
            raise BadConfig(
                f"unknown curriculum {self.curriculum!r}; expected one of {CURRICULA}"
            )
        if not isinstance(self.steps, int) or self.steps < 1:
            raise BadConfig(f"steps must be a positive integer, got {self.steps!r}")
        if not isinstance(self.eval_every, int) or self.eval_every < 1:
            raise BadConfig(
                f"eval_every must be a positive integer, got {self.eval_every!r}"
            )
        if self.eval_every > self.steps:
            raise BadConfig(
                f"eval_every ({self.eval_every}) must not exceed steps ({self.steps})"
            )
        if self.estimator not in ESTIMATORS:
            raise BadConfig(
                f"unknown estimator {self.estimator!r}; expected one of "
                f"{tuple(sorted(ESTIMATORS))}"
            )
        if self.bins is not None and (not isinstance(self.bins, int) or self.bins < 1):
            raise BadConfig(f"bins must be a positive integer, got {self.bins!r}")
        if self.rollouts is not None and (
            not isinstance(self.rollouts, int) or self.rollouts < 2
        ):
            raise BadConfig(
                f"rollouts must be an integer >= 2, got {self.rollouts!r}"
            )
        # alpha, tau, batch_size, seed are checked by BanditConfig.
        self.bandit_config()

    def bandit_config(self) -> BanditConfig:
        return BanditConfig(
            alpha=self.alpha,
            tau=self.tau,
            batch_size=self.batch_size,
            seed=self.seed,
            dedupe_within_batch=self.dedupe_within_batch,
        )

    def to_obj(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class RunReport:
    config: RunConfig
    records: list[StepRecord]
    evals: list[dict]
    summary: dict


def build_policy(config: RunConfig, registry: Registry):
    if config.curriculum in ("sec", "sec-2d"):
        return SecPolicy(registry.categories, config.alpha, config.tau)
    if config.curriculum == "random":
        return RandomPolicy(registry)
    return SchedulePolicy(
        registry, config.steps, mirrored=config.curriculum == "reverse"
    )


def _mean(values: Sequence[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def _eval_record(
    step: int, learner: SimulatedLearner, scenario: Scenario
) -> dict:
    accuracy = learner.evaluate(scenario.all_categories())
    train = [accuracy[c] for c in scenario.training_categories()]
    ood = [accuracy[c] for c in scenario.ood_categories()]
    return {
        "step": step,
        "accuracy": {str(c): v for c, v in accuracy.items()},
        "train_mean": _mean(train),
        "ood_mean": _mean(ood) if ood else None,
    }


def _task_means(scenario: Scenario, accuracy: dict[str, float]) -> dict[str, float] | None:
    """Per-task training accuracy when the scenario has a second axis."""
    groups: dict[str, list[float]] = {}
    for category in scenario.training_categories():
        rest = [
            (axis, label)
            for axis, label in category.parts
            if axis != "difficulty"
        ]
        if not rest:
            return None
        key = str(CategoryKey(tuple(rest)))
        groups.setdefault(key, []).append(accuracy[str(category)])
    return {k: _mean(v) for k, v in groups.items()}


def run(config: RunConfig) -> RunReport:
    scenario = load_scenario(config.scenario)
    if config.curriculum == "sec-2d":
        if config.bins is not None:
            raise BadConfig("sec-2d schedules over scenario axes, not rate bins")
        if len(scenario.axes) != 2:
            raise BadConfig(
                f"sec-2d needs a two-axis scenario, {scenario.name!r} has "
                f"{len(scenario.axes)}"
            )
    problems = scenario.build_problems()
    if config.bins is not None:
        registry = bin_by_success_rate(problems, config.bins)
    else:
        registry = build_registry(problems)

    dynamics = scenario.dynamics()
    if config.rollouts is not None:
        dynamics = dataclasses.replace(dynamics, rollouts=config.rollouts)
    learner = SimulatedLearner(
        scenario.build_state(),
        dynamics,
        seed=config.seed,
        true_category=scenario.true_categories(),
        estimator=ESTIMATORS[config.estimator],
    )

    policy = build_policy(config, registry)
    extra = (
        {"total_steps": config.steps}
        if config.curriculum in ("ordered", "reverse")
        else None
    )

    log_stream = None
    out_dir = config.out
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        log_stream = open(
            os.path.join(out_dir, STEPS_FILE), "w", encoding="utf-8", newline="\n"
        )
    try:
        engine = Engine(
            registry,
            config.bandit_config(),
            policy,
            log_stream=log_stream,
            extra_header=extra,
        )
        records: list[StepRecord] = []
        evals: list[dict] = []
        for t in range(config.steps):
            batch = engine.begin_step()
            values = learner.batch_advantages(batch)
            learner.train(batch, values)
            records.append(engine.complete_step(values))
            if (t + 1) % config.eval_every == 0:
                evals.append(_eval_record(t + 1, learner, scenario))
    finally:
        if log_stream is not None:
            log_stream.close()

    final = evals[-1]
    summary = {
        "config": config.to_obj(),
        "final_train_accuracy": final["train_mean"],
        "final_ood_accuracy": final["ood_mean"],
        "final_accuracy": final["accuracy"],
        "final_q": {str(c): v for c, v in engine.policy.q_items()},
    }
    task_means = _task_means(scenario, final["accuracy"])
    if task_means is not None:
        summary["final_task_accuracy"] = task_means
        summary["final_min_task_accuracy"] = min(task_means.values())

    if out_dir is not None:
        with open(
            os.path.join(out_dir, EVALS_FILE), "w", encoding="utf-8", newline="\n"
        ) as fh:
            for record in evals:
                fh.write(emit_line(record))
        with open(
            os.path.join(out_dir, SUMMARY_FILE), "w", encoding="utf-8", newline="\n"
        ) as fh:
            fh.write(emit_line(summary))
    return RunReport(config=config, records=records, evals=evals, summary=summary)


# -- difficulty trace -------------------------------------------------------


def _load_mean_difficulties(source) -> list[float | None]:
    if isinstance(source, RunReport):
        return [r.mean_difficulty for r in source.records]
    path = source
    if os.path.isdir(path):
        path = os.path.join(path, STEPS_FILE)
    values: list[float | None] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = parse_line(line)
            if "log" in obj:
                continue
            values.append(obj["mean_difficulty"])
    return values


def difficulty_trace(source, window: int = 20) -> list[tuple[int, float]]:
    """Moving average of per-step mean difficulty.

    `source` is a RunReport, a steps file, or a run directory.  The
    window is centered: step t averages steps [t - window//2,
    t + (window - window//2)), clipped to the run, so window 1 is the
    identity.  Raises NonNumericAxis when any step's categories have no
    numeric difficulty.
    """
    if not isinstance(window, int) or window < 1:
        raise BadConfig(f"window must be a positive integer, got {window!r}")
    values = _load_mean_difficulties(source)
    for value in values:
        if value is None:
            raise NonNumericAxis("run has steps without numeric difficulty")
    n = len(values)
    trace: list[tuple[int, float]] = []
    for t in range(n):
        lo = max(0, t - window // 2)
        hi = min(n, t + (window - window // 2))
        trace.append((t, _mean(values[lo:hi])))
    return trace


# -- sweeps ------------------------------------------------------------------


def _run_row(args: tuple[int, object]) -> dict:
    index, spec = args
    fields = spec.to_obj() if isinstance(spec, RunConfig) else dict(spec)
    row = {"index": index}
    for key in ("curriculum", "scenario", "alpha", "tau", "seed", "steps"):
        if key in fields:
            row[key] = fields[key]
    try:
        config = spec if isinstance(spec, RunConfig) else RunConfig(**spec)
        report = run(config)
    except CurriculumError as exc:
        row["status"] = "error"
        row["error"] = str(exc)
        return row
    row["status"] = "ok"
    row["final_train_accuracy"] = report.summary["final_train_accuracy"]
    row["final_ood_accuracy"] = report.summary["final_ood_accuracy"]
    if "final_min_task_accuracy" in report.summary:
        row["final_min_task_accuracy"] = report.summary["final_min_task_accuracy"]
    if config.out is not None:
        row["out"] = config.out
    return row


def sweep(
    configs: Sequence[object],
    out_dir: str | None = None,
    jobs: int = 1,
) -> list[dict]:
    """Run a list of configs, in order, and return one row per config.

    Entries are RunConfig objects or plain keyword dicts; a dict that
    fails validation becomes an "error" row instead of aborting, as does
    any run that raises.  With jobs > 1 runs execute in separate
    processes; row order still matches config order.
    """
    if not isinstance(jobs, int) or jobs < 1:
        raise BadConfig(f"jobs must be a positive integer, got {jobs!r}")
    configs = list(configs)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        assigned = []
        for i, c in enumerate(configs):
            out = os.path.join(out_dir, f"run-{i:04d}")
            if isinstance(c, RunConfig):
                assigned.append(dataclasses.replace(c, out=out))
            else:
                assigned.append({**c, "out": out})
        configs = assigned
    tasks = list(enumerate(configs))
    if jobs == 1:
        rows = [_run_row(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_row, tasks))
    if out_dir is not None:
        with open(
            os.path.join(out_dir, "sweep.jsonl"), "w", encoding="utf-8", newline="\n"
        ) as fh:
            for row in rows:
                fh.write(emit_line(row))
    return rows
