"""Seeded random streams.

All randomness in the package flows through counter-based Philox generators
keyed by (seed, stream), so every artifact is reproducible from integer seeds
alone. Stream indices keep independent uses of the same seed decoupled; the
algorithm identifier is stamped into run records.
"""
from __future__ import annotations

import numpy as np

PRNG_ID = "philox4x64"

STREAM_DATA = 0
STREAM_PARTITION = 1
STREAM_INIT = 2
STREAM_BOUNDS = 3
STREAM_CHECKS = 4

_MASK64 = (1 << 64) - 1


def make_rng(seed: int, stream: int = STREAM_DATA) -> np.random.Generator:
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def open_uniform(rng: np.random.Generator, lo, hi, size) -> np.ndarray:
    """Uniform samples guaranteed to land strictly inside (lo, hi)."""
    u = rng.random(size)
    while np.any(u == 0.0):
        u = np.where(u == 0.0, rng.random(size), u)
    return lo + u * (np.asarray(hi) - np.asarray(lo))
