"""Seeded Philox streams.

Every Monte Carlo batch draws from its own counter-based stream keyed by
``(seed, batch_index)``, so results do not depend on how batches are
scheduled across workers.
"""

from __future__ import annotations

import numpy as np


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent stream number ``index`` derived from ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))
