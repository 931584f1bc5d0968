"""Counter-based random streams.

Every stream is a Philox generator keyed by a ``SeedSequence`` built from
``(master seed, trial, stream id)``.  A trial's draws therefore never
depend on how many other trials ran before it or in which order.
"""

from __future__ import annotations

import numpy as np


def generator(seed: int, *ids: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(i) & 0xFFFFFFFF for i in ids]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def trial_generators(seed: int, trials: int, stream: int = 0) -> list[np.random.Generator]:
    return [generator(seed, t, stream) for t in range(trials)]


def cell_generator(seed: int, trial: int, cell: int) -> np.random.Generator:
    """The per-(trial, cell) stream, used where a run touches few cells."""
    return generator(seed, trial, 1 << 20 | cell)
