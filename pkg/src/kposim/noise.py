"""Reproducible per-trajectory noise streams.

Streams are keyed by (seed, stream_id) through a counter-based Philox
generator, so ensemble members are statistically independent and any stream
can be regenerated bit-for-bit without touching the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if not 0 <= self.stream_id < 2**64:
            raise ValueError("stream_id must fit in an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def wiener_increments(self, n: int, tau: float) -> np.ndarray:
        """n i.i.d. Gaussian increments with mean 0 and variance tau."""
        return self.generator().normal(0.0, math.sqrt(tau), n)

    def uniforms(self, n: int) -> np.ndarray:
        return self.generator().random(n)

    def child(self, stream_id: int) -> "NoiseStream":
        return NoiseStream(self.seed, stream_id)
