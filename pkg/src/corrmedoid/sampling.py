"""Seeded randomness helpers shared by every stochastic routine.

All randomness in this package flows through numpy's PCG64 bit generator,
constructed from an explicit 64-bit seed. Derived seeds (per trial, per
doubling run) come from a splitmix64 finalizer chain so that nearby base
seeds do not produce correlated streams.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MASK64 = (1 << 64) - 1

# splitmix64 increment and finalizer multipliers (Steele, Lea, Flood 2014).
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(z: int) -> int:
    """One splitmix64 finalizer step on a 64-bit value."""
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, *words: int) -> int:
    """Mix a base seed with integer words into a fresh 64-bit seed.

    Each word is absorbed into the running state before a splitmix64
    finalizer step, so (base, w1, w2, ...) acts as one wide input. Used for
    per-trial seeds (base, budget index, trial index) and per-run seeds in
    the doubling wrapper (base, run index).
    """
    state = splitmix64(base & _MASK64)
    for w in words:
        state = splitmix64((state + (w & _MASK64)) & _MASK64)
    return state


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide generator: PCG64 behind numpy's Generator API."""
    return np.random.Generator(np.random.PCG64(seed))


@njit(cache=True)
def _partial_shuffle(pool, offsets, k):
    # Fisher-Yates, first k positions only; offsets[i] in [0, n-i).
    for i in range(k):
        j = i + offsets[i]
        tmp = pool[i]
        pool[i] = pool[j]
        pool[j] = tmp


def sample_without_replacement(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Draw k distinct indices uniformly from range(n), returned ascending.

    Partial Fisher-Yates shuffle; the draw order is discarded because every
    caller treats the result as a set and accumulates in ascending index
    order for determinism.
    """
    if not 0 <= k <= n:
        raise ValueError(f"cannot draw {k} from {n} without replacement")
    if k == 0:
        return np.empty(0, dtype=np.int64)
    pool = np.arange(n, dtype=np.int64)
    offsets = rng.integers(0, n - np.arange(k), dtype=np.int64)
    _partial_shuffle(pool, offsets, k)
    out = pool[:k]
    out.sort()
    return out
