"""Deterministic random streams for the verification suites.

All randomized suites draw from numpy's Philox 4x64 counter-based generator
keyed by the two 64-bit words (master seed, unit index).  A unit is the
smallest independently schedulable piece of work (one random instance, one
sweep point, ...), so the instance stream is reproducible from the seed
alone and independent of how units are distributed over workers.
"""

import numpy as np


def unit_generator(seed: int, unit: int) -> np.random.Generator:
    """Generator for one work unit; (seed, unit) fully determine the stream."""
    key = np.array([np.uint64(seed), np.uint64(unit)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
