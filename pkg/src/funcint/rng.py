"""Reproducible random-number streams.

Every stochastic routine in the library takes an :class:`RngStream` rather
than a bare seed so that (seed, stream_id) pairs reproduce bit-identical
output and independent streams can be spawned for parallel accumulation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream_id) pair naming one deterministic random stream."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, k: int) -> "RngStream":
        """Derived stream for parallel fan-out; distinct from the parent."""
        return RngStream(self.seed, (self.stream_id << 20) + k + 1)
