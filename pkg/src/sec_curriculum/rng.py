"""Deterministic random streams.

All randomness flows through Philox-4x64-10, a published counter-based
generator, as implemented by numpy.  A stream is identified by the pair
(seed, stream id), passed as the two words of the Philox key, so streams
split from one seed never overlap and any of them can be reconstructed
independently.  Stream ids are fixed constants:

    0  category draws (one double per batch slot)
    1  within-category problem draws (one double per slot, plus one per
       dedupe re-draw)
    2  learner success noise (one double per rollout)
    3  learner format noise (shaped reward scheme only; one double per
       rollout, consumed whether or not the rollout succeeded)

Doubles are produced by numpy's standard 53-bit conversion of the raw
64-bit output.  Consumers must draw in the documented order; given that,
trajectories are bit-reproducible from (seed, config, inputs) alone.
"""

from __future__ import annotations

from typing import Any

import numpy as np

CATEGORY_STREAM = 0
POOL_STREAM = 1
SUCCESS_STREAM = 2
FORMAT_STREAM = 3

MAX_SEED = 2**64 - 1


class UniformStream:
    """Sequential uniform doubles in [0, 1) from one Philox stream."""

    def __init__(self, seed: int, stream_id: int):
        if not 0 <= seed <= MAX_SEED:
            raise ValueError(f"seed must be a uint64, got {seed}")
        self.seed = seed
        self.stream_id = stream_id
        self._gen = np.random.Generator(np.random.Philox(key=[seed, stream_id]))

    def next(self) -> float:
        return float(self._gen.random())

    def take(self, n: int) -> list[float]:
        """n sequential draws; identical to calling next() n times."""
        return [float(u) for u in self._gen.random(n)]

    def get_state(self) -> dict[str, Any]:
        """JSON-safe snapshot of the generator position."""
        raw = self._gen.bit_generator.state
        return {
            "seed": self.seed,
            "stream_id": self.stream_id,
            "counter": [int(x) for x in raw["state"]["counter"]],
            "key": [int(x) for x in raw["state"]["key"]],
            "buffer": [int(x) for x in raw["buffer"]],
            "buffer_pos": int(raw["buffer_pos"]),
            "has_uint32": int(raw["has_uint32"]),
            "uinteger": int(raw["uinteger"]),
        }

    @classmethod
    def from_state(cls, state: dict[str, Any]) -> "UniformStream":
        stream = cls(int(state["seed"]), int(state["stream_id"]))
        raw = stream._gen.bit_generator.state
        raw["state"]["counter"] = np.array(state["counter"], dtype=np.uint64)
        raw["state"]["key"] = np.array(state["key"], dtype=np.uint64)
        raw["buffer"] = np.array(state["buffer"], dtype=np.uint64)
        raw["buffer_pos"] = int(state["buffer_pos"])
        raw["has_uint32"] = int(state["has_uint32"])
        raw["uinteger"] = int(state["uinteger"])
        stream._gen.bit_generator.state = raw
        return stream


class DrawStreams:
    """The engine's two draw streams (category, then within-category)."""

    def __init__(self, category: UniformStream, pool: UniformStream):
        self.category = category
        self.pool = pool

    @classmethod
    def from_seed(cls, seed: int) -> "DrawStreams":
        return cls(
            UniformStream(seed, CATEGORY_STREAM),
            UniformStream(seed, POOL_STREAM),
        )

    def get_state(self) -> dict[str, Any]:
        return {"category": self.category.get_state(), "pool": self.pool.get_state()}

    @classmethod
    def from_state(cls, state: dict[str, Any]) -> "DrawStreams":
        return cls(
            UniformStream.from_state(state["category"]),
            UniformStream.from_state(state["pool"]),
        )


def categorical(u: float, weights: list[float]) -> int:
    """Index of the first cumulative weight exceeding u.

    Weights must sum to ~1; a tail shortfall from rounding falls through
    to the last index.
    """
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if u < acc:
            return i
    return len(weights) - 1


def uniform_index(u: float, n: int) -> int:
    """Uniform index in [0, n) from one double."""
    i = int(u * n)
    return n - 1 if i >= n else i
