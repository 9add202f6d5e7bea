"""Counter-based random streams for reproducible (parallel) Monte Carlo.

Each (trial, purpose) pair gets its own Philox key derived from the master
seed, so draws are identical no matter how trials are scheduled across
workers.
"""

from __future__ import annotations

import numpy as np

# purpose ids; keep below _PURPOSES
CHANNEL = 0
NOISE = 1
SYMBOLS = 2
MC_INPUT = 3

_PURPOSES = 16


def substream(seed, trial=0, purpose=0) -> np.random.Generator:
    """Independent generator for one (trial, purpose) slot of a master seed."""
    key = np.array([np.uint64(seed), np.uint64(trial) * _PURPOSES + purpose], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed, trial=0, purpose=0) -> int:
    """64-bit sub-seed for code that takes a scalar seed of its own."""
    return int(substream(seed, trial, purpose).integers(0, 1 << 63))
