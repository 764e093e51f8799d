"""Reproducible random streams for stochastic commands.

Streams use the counter-based Philox bit generator keyed by the scenario
seed; per-trial sub-streams are derived with ``jumped(trial)``, so trial k
draws the same numbers no matter how many trials run or in what order.
"""

from __future__ import annotations

import numpy as np

BIT_GENERATOR = "Philox"


def stream(seed: int, trial: int = 0) -> np.random.Generator:
    """Generator for one trial of a seeded run."""
    seed = int(seed)
    trial = int(trial)
    if seed < 0 or seed > 2**64 - 1:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    if trial < 0:
        raise ValueError("trial index must be non-negative")
    bg = np.random.Philox(key=seed)
    if trial:
        bg = bg.jumped(trial)
    return np.random.Generator(bg)
