"""Problem pool and category bookkeeping.

A category is an ordered tuple of (axis, label) pairs; one axis for flat
difficulty curricula, two for task-by-difficulty grids.  The registry
groups an immutable pool of problems by category and fixes the canonical
category order (first observed) that every downstream component relies
on for reproducible iteration.
"""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

from .errors import BadK, DuplicateId, EmptyPool, MissingRate
from .serialize import emit_line, parse_line, sha256_text

# Axis names and labels appear in the compact text form "axis=label|axis=label"
# used by logs, the wire protocol, and registry files.
_FORBIDDEN = ("=", "|", "\n")


def _check_part(part: str, what: str) -> None:
    if not part:
        raise ValueError(f"empty {what}")
    for ch in _FORBIDDEN:
        if ch in part:
            raise ValueError(f"{what} {part!r} contains forbidden character {ch!r}")


@dataclass(frozen=True)
class CategoryKey:
    """Ordered (axis, label) pairs identifying one bandit arm."""

    parts: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("category needs at least one axis")
        seen = set()
        for axis, label in self.parts:
            _check_part(axis, "axis name")
            _check_part(label, "label")
            if axis in seen:
                raise ValueError(f"duplicate axis {axis!r}")
            seen.add(axis)

    @classmethod
    def single(cls, axis: str, label: str) -> "CategoryKey":
        return cls(((axis, label),))

    @classmethod
    def parse(cls, text: str) -> "CategoryKey":
        parts = []
        for chunk in text.split("|"):
            axis, sep, label = chunk.partition("=")
            if not sep:
                raise ValueError(f"bad category text {text!r}")
            parts.append((axis, label))
        return cls(tuple(parts))

    def label(self, axis: str) -> str:
        for name, value in self.parts:
            if name == axis:
                return value
        raise KeyError(axis)

    @property
    def axes(self) -> tuple[str, ...]:
        return tuple(axis for axis, _ in self.parts)

    def __str__(self) -> str:
        return "|".join(f"{axis}={label}" for axis, label in self.parts)


@dataclass(frozen=True)
class ProblemRecord:
    """One training problem.  The payload is opaque to the curriculum."""

    problem_id: str
    category: CategoryKey
    payload: bytes = b""
    success_rate: float | None = None

    def __post_init__(self):
        if not self.problem_id:
            raise ValueError("empty problem id")
        if self.success_rate is not None:
            rate = float(self.success_rate)
            if not (0.0 <= rate <= 1.0) or not math.isfinite(rate):
                raise ValueError(f"success rate {rate} outside [0, 1]")


@dataclass(frozen=True)
class Registry:
    """Immutable problem pool grouped by category (no empty categories)."""

    problems: tuple[ProblemRecord, ...]
    _by_category: dict[CategoryKey, tuple[ProblemRecord, ...]] = field(
        init=False, repr=False, compare=False
    )
    _by_id: dict[str, ProblemRecord] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.problems:
            raise EmptyPool("registry needs at least one problem")
        groups: dict[CategoryKey, list[ProblemRecord]] = {}
        by_id: dict[str, ProblemRecord] = {}
        for rec in self.problems:
            if rec.problem_id in by_id:
                raise DuplicateId(rec.problem_id)
            by_id[rec.problem_id] = rec
            groups.setdefault(rec.category, []).append(rec)
        object.__setattr__(
            self, "_by_category", {key: tuple(recs) for key, recs in groups.items()}
        )
        object.__setattr__(self, "_by_id", by_id)

    @property
    def categories(self) -> tuple[CategoryKey, ...]:
        """Canonical order: first appearance in the problem list."""
        return tuple(self._by_category.keys())

    def problems_in(self, category: CategoryKey) -> tuple[ProblemRecord, ...]:
        return self._by_category[category]

    def has_category(self, category: CategoryKey) -> bool:
        return category in self._by_category

    def pool_size(self, category: CategoryKey) -> int:
        return len(self._by_category[category])

    def lookup(self, problem_id: str) -> ProblemRecord:
        return self._by_id[problem_id]

    def __len__(self) -> int:
        return len(self.problems)

    def canonical_text(self) -> str:
        return "".join(_record_line(rec) for rec in self.problems)

    def sha256(self) -> str:
        return sha256_text(self.canonical_text())


def build_registry(problems: Iterable[ProblemRecord]) -> Registry:
    """Group problems by category; rejects empty pools and duplicate ids."""
    return Registry(tuple(problems))


def bin_by_success_rate(problems: Iterable[ProblemRecord], k: int) -> Registry:
    """Re-categorize problems into k equal-width success-rate bins.

    Bin i covers [i/k, (i+1)/k), except the top bin which also includes
    rate 1.0.  Empty bins simply never appear as categories.  Every
    problem must carry a rate.
    """
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise BadK(f"bin count must be a positive integer, got {k!r}")
    binned = []
    for rec in problems:
        if rec.success_rate is None:
            raise MissingRate(rec.problem_id)
        index = min(int(rec.success_rate * k), k - 1)
        key = CategoryKey.single("rate-bin", str(index))
        binned.append(
            ProblemRecord(rec.problem_id, key, rec.payload, rec.success_rate)
        )
    return build_registry(binned)


def cross_axes(axes: Sequence[tuple[str, Sequence[str]]]) -> list[CategoryKey]:
    """Cartesian product of axis labels, first axis varying slowest."""
    if not axes:
        raise ValueError("need at least one axis")
    for name, labels in axes:
        if not labels:
            raise ValueError(f"axis {name!r} has no labels")
    names = [name for name, _ in axes]
    return [
        CategoryKey(tuple(zip(names, combo)))
        for combo in product(*(labels for _, labels in axes))
    ]


def _record_line(rec: ProblemRecord) -> str:
    body: dict = {"id": rec.problem_id, "category": str(rec.category)}
    if rec.success_rate is not None:
        body["rate"] = float(rec.success_rate)
    body["payload"] = base64.b64encode(rec.payload).decode("ascii")
    return emit_line(body)


def save_registry(registry: Registry, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(registry.canonical_text())


def load_registry(path) -> Registry:
    problems = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            row = parse_line(line)
            try:
                problems.append(
                    ProblemRecord(
                        problem_id=row["id"],
                        category=CategoryKey.parse(row["category"]),
                        payload=base64.b64decode(row["payload"]),
                        success_rate=float(row["rate"]) if "rate" in row else None,
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad registry line: {exc}") from exc
    return build_registry(problems)
