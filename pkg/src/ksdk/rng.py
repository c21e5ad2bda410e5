# src/ksdk/rng.py
"""
Counter-based random streams.

Every random draw of the package is addressed by (seed, path_id, tag, step):
the Philox key holds (seed, path_id), the two high counter words hold
(tag, step). Draws therefore do not depend on the order in which paths or
steps are evaluated, which keeps ensembles reproducible under any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# stream tags: one independent family of streams per random object
TAG_NOISE = 1
TAG_OU_NOISE = 2
TAG_PARTICLES = 3
TAG_INITIAL = 4

_U64 = (1 << 64) - 1


def philox(seed: int, path_id: int, tag: int, step: int) -> np.random.Generator:
    key = np.array([seed & _U64, path_id & _U64], dtype=np.uint64)
    # low words are advanced by the generator itself, the high ones address the stream
    counter = np.array([0, 0, tag & _U64, step & _U64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True)
class CounterStream:
    """NoiseSource for one path: at(step) returns a fresh generator for that step."""

    seed: int
    path_id: int = 0
    tag: int = TAG_NOISE

    def at(self, step: int) -> np.random.Generator:
        assert step >= 0, "steps are counted from 0"
        return philox(self.seed, self.path_id, self.tag, step)

    def with_tag(self, tag: int) -> "CounterStream":
        return CounterStream(self.seed, self.path_id, tag)
