"""Counter-based derivation of independent random streams from one seed.

A base seed expands into child seeds by running the splitmix64 sequence:
child i is the (i+1)-th output of splitmix64 started at the base seed.  The
mixing function is fixed and documented below, so any implementation of
splitmix64 reproduces the same child seeds; the draws themselves then come
from numpy's default bit generator seeded with the child value.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream_seed", "child_rng"]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    # splitmix64 finalizer (Steele, Lea, Flood 2014).
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def stream_seed(base_seed: int, index: int) -> int:
    """The `index`-th child seed derived from base_seed (both 64-bit)."""
    if index < 0:
        raise ValueError(f"stream index must be >= 0, got {index}")
    state = (int(base_seed) + (index + 1) * _GOLDEN) & _MASK64
    return _mix64(state)


def child_rng(base_seed: int, *indices: int) -> np.random.Generator:
    """Generator for the stream addressed by a chain of child indices."""
    seed = int(base_seed) & _MASK64
    for i in indices:
        seed = stream_seed(seed, i)
    return np.random.default_rng(seed)
