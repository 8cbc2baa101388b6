"""Deterministic derivation of child seeds from one master seed.

Every stochastic component takes an integer seed and builds its own
generator, so reproducibility reduces to drawing child seeds in a
documented, fixed order. SeedStream is that order: a seeded generator
yielding 63-bit integers, one per call.
"""

from __future__ import annotations

import numpy as np


class SeedStream:
    def __init__(self, master_seed: int):
        self._rng = np.random.default_rng(master_seed)

    def next(self) -> int:
        return int(self._rng.integers(0, 2**63))
