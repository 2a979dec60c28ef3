"""Stateful curriculum engine.

One Engine owns the bandit state, the two draw streams, and the step
log for a run.  Both front ends (the in-process harness and the wire
protocol server) drive the same begin_step/complete_step pair, so a
given (seed, config, registry, advantage source) produces byte-identical
step logs no matter which path drove it.

A step is pending between begin_step and complete_step.  begin_step is
idempotent while pending: re-requesting the current batch (a client that
reconnected mid-step) returns the same batch instead of consuming more
randomness.
"""

from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .bandit import (
    Batch,
    BanditConfig,
    CategoryReward,
    QTable,
    aggregate_rewards,
    category_distribution,
    init_qtable,
    sample_from_distribution,
    td0_update,
)
from .categories import CategoryKey, Registry
from .errors import BadConfig, CorruptFile, VersionMismatch
from .rng import DrawStreams
from .serialize import emit_json, emit_line, parse_line, sha256_text

CHECKPOINT_FORMAT = "sec-checkpoint/1"
LOG_FORMAT = "sec-curriculum/steps"
PROTOCOL_VERSION = "sec/1"


def numeric_difficulty(category: CategoryKey) -> float | None:
    """Numeric difficulty of a category, when one can be read off.

    difficulty-axis labels "L1".."Ln" map to 1..n (plain integer labels
    map to themselves); otherwise a rate-bin index counts as difficulty.
    """
    for axis, label in category.parts:
        if axis == "difficulty":
            match = re.fullmatch(r"L(\d+)", label)
            if match:
                return float(match.group(1))
            if label.isdigit():
                return float(label)
            return None
    for axis, label in category.parts:
        if axis == "rate-bin" and label.isdigit():
            return float(label)
    return None


class SecPolicy:
    """The adaptive arm: Boltzmann sampling over TD-updated Q values."""

    kind = "sec"

    def __init__(self, categories: Sequence[CategoryKey], alpha: float, tau: float):
        self.alpha = alpha
        self.tau = tau
        self.qtable = init_qtable(categories)

    def distribution(self, step: int) -> dict[CategoryKey, float]:
        return category_distribution(self.qtable, self.tau)

    def update(self, rewards: Sequence[CategoryReward]) -> None:
        self.qtable = td0_update(self.qtable, rewards, self.alpha)

    def q_items(self) -> list[tuple[CategoryKey, float]]:
        return list(self.qtable.values.items())


@dataclass(frozen=True)
class StepRecord:
    step: int
    counts: dict[str, int]
    rewards: dict[str, float]
    q: dict[str, float]
    mean_difficulty: float | None

    def to_obj(self) -> dict:
        return {
            "step": self.step,
            "counts": self.counts,
            "rewards": self.rewards,
            "q": self.q,
            "mean_difficulty": self.mean_difficulty,
        }

    def line(self) -> str:
        return emit_line(self.to_obj())


class Engine:
    def __init__(
        self,
        registry: Registry,
        config: BanditConfig,
        policy=None,
        log_stream: io.TextIOBase | None = None,
        extra_header: Mapping[str, object] | None = None,
    ):
        self.registry = registry
        self.config = config
        self.policy = policy if policy is not None else SecPolicy(
            registry.categories, config.alpha, config.tau
        )
        self.streams = DrawStreams.from_seed(config.seed)
        self.step_index = 0
        self.pending: Batch | None = None
        self._log = log_stream
        self._extra_header = dict(extra_header or {})
        if self._log is not None and self._log.tell() == 0:
            self._log.write(emit_line(self._header()))
            self._log.flush()

    # -- identity ---------------------------------------------------------

    def _engine_obj(self) -> dict:
        obj: dict = {"curriculum": self.policy.kind}
        if isinstance(self.policy, SecPolicy):
            obj["alpha"] = self.policy.alpha
            obj["tau"] = self.policy.tau
        obj.update(self._extra_header)
        obj["batch_size"] = self.config.batch_size
        obj["seed"] = self.config.seed
        obj["dedupe_within_batch"] = self.config.dedupe_within_batch
        obj["registry_sha256"] = self.registry.sha256()
        return obj

    def _header(self) -> dict:
        engine_obj = self._engine_obj()
        return {
            "log": LOG_FORMAT,
            "version": PROTOCOL_VERSION,
            "engine": engine_obj,
            "config_hash": sha256_text(emit_json(engine_obj)),
        }

    # -- stepping ---------------------------------------------------------

    def begin_step(self) -> Batch:
        if self.pending is None:
            dist = self.policy.distribution(self.step_index)
            self.pending = sample_from_distribution(
                dist,
                self.registry,
                self.config.batch_size,
                self.streams,
                self.config.dedupe_within_batch,
            )
        return self.pending

    def complete_step(self, abs_advantages: Mapping[str, float]) -> StepRecord:
        if self.pending is None:
            raise RuntimeError("no pending batch; call begin_step first")
        batch = self.pending
        rewards = aggregate_rewards(batch, abs_advantages)
        self.policy.update(rewards)
        record = self._make_record(batch, rewards)
        if self._log is not None:
            self._log.write(record.line())
            self._log.flush()
        self.pending = None
        self.step_index += 1
        return record

    def run_step(self, advantage_source) -> StepRecord:
        batch = self.begin_step()
        return self.complete_step(advantage_source(batch))

    def _make_record(self, batch: Batch, rewards: Sequence[CategoryReward]) -> StepRecord:
        counts: dict[CategoryKey, int] = {}
        for _, category in batch.entries:
            counts[category] = counts.get(category, 0) + 1
        reward_map = {r.category: r.reward for r in rewards}
        ordered_counts = {}
        ordered_rewards = {}
        for category in self.registry.categories:
            if category in counts:
                ordered_counts[str(category)] = counts[category]
                ordered_rewards[str(category)] = reward_map[category]
        mean_difficulty: float | None = 0.0
        total = 0.0
        for _, category in batch.entries:
            value = numeric_difficulty(category)
            if value is None:
                mean_difficulty = None
                break
            total += value
        if mean_difficulty is not None:
            mean_difficulty = total / len(batch.entries)
        return StepRecord(
            step=self.step_index,
            counts=ordered_counts,
            rewards=ordered_rewards,
            q={str(c): v for c, v in self.policy.q_items()},
            mean_difficulty=mean_difficulty,
        )

    # -- snapshot / checkpoint ---------------------------------------------

    def snapshot(self) -> tuple[int, list[tuple[CategoryKey, float]]]:
        return self.step_index, self.policy.q_items()

    def checkpoint(self, path: str) -> None:
        """Persist engine state; quiescent engines round-trip exactly.

        A pending (issued, unreported) batch is persisted too so that a
        restore keeps re-issuing the same batch.
        """
        payload = {
            "engine": self._engine_obj(),
            "step": self.step_index,
            "q": {str(c): v for c, v in self.policy.q_items()},
            "streams": self.streams.get_state(),
            "pending": None
            if self.pending is None
            else [[pid, str(cat)] for pid, cat in self.pending.entries],
        }
        body = emit_json(payload)
        blob = {
            "format": CHECKPOINT_FORMAT,
            "payload": payload,
            "sha256": sha256_text(body),
        }
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(emit_line(blob))
        os.replace(tmp, path)

    @classmethod
    def restore(
        cls,
        path: str,
        registry: Registry,
        log_stream: io.TextIOBase | None = None,
    ) -> "Engine":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                blob = parse_line(fh.read())
        except (OSError, ValueError) as exc:
            raise CorruptFile(f"{path}: unreadable checkpoint: {exc}") from exc
        if not isinstance(blob, dict) or "format" not in blob:
            raise CorruptFile(f"{path}: not a checkpoint file")
        if blob["format"] != CHECKPOINT_FORMAT:
            raise VersionMismatch(
                f"{path}: checkpoint format {blob['format']!r}, expected {CHECKPOINT_FORMAT!r}"
            )
        try:
            payload = blob["payload"]
            stated = blob["sha256"]
        except KeyError as exc:
            raise CorruptFile(f"{path}: missing {exc}") from exc
        if sha256_text(emit_json(payload)) != stated:
            raise CorruptFile(f"{path}: checksum mismatch")
        try:
            engine_obj = payload["engine"]
            if engine_obj["curriculum"] != "sec":
                raise VersionMismatch(
                    f"{path}: only sec engines are checkpointable, got {engine_obj['curriculum']!r}"
                )
            if engine_obj["registry_sha256"] != registry.sha256():
                raise VersionMismatch(f"{path}: checkpoint belongs to a different registry")
            config = BanditConfig(
                alpha=float(engine_obj["alpha"]),
                tau=float(engine_obj["tau"]),
                batch_size=int(engine_obj["batch_size"]),
                seed=int(engine_obj["seed"]),
                dedupe_within_batch=bool(engine_obj["dedupe_within_batch"]),
            )
            engine = cls(registry, config, log_stream=log_stream)
            engine.step_index = int(payload["step"])
            q_values = {
                CategoryKey.parse(text): float(value)
                for text, value in payload["q"].items()
            }
            if set(q_values) != set(registry.categories):
                raise VersionMismatch(f"{path}: Q vector categories differ from registry")
            engine.policy.qtable = QTable(
                {c: q_values[c] for c in registry.categories}, step=engine.step_index
            )
            engine.streams = DrawStreams.from_state(payload["streams"])
            if payload["pending"] is not None:
                engine.pending = Batch(
                    tuple(
                        (pid, CategoryKey.parse(text))
                        for pid, text in payload["pending"]
                    )
                )
        except (KeyError, TypeError, ValueError, BadConfig) as exc:
            raise CorruptFile(f"{path}: malformed payload: {exc}") from exc
        return engine
