"""Reproducible random-number streams for Monte Carlo sampling.

Each Monte Carlo sample gets its own substream, derived as a pure function
of (master seed, substream index).  Substreams built this way are
statistically independent and insensitive to execution order, so per-sample
work can be scheduled in parallel without changing any draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """Identifies one reproducible stream: (seed, substream_index)."""

    seed: int
    substream_index: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this substream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.substream_index,))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, index: int) -> "RngStream":
        """Stream for sample `index` under the same master seed."""
        return RngStream(self.seed, index)
