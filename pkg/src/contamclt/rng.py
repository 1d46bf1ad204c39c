"""Deterministic stream splitting for reproducible parallel simulation.

Replicate i of a run always draws from a generator seeded by
``split_seed(master_seed, i)``, so results are identical no matter how
replicates are scheduled across workers.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def split_seed(master_seed: int, stream_index: int) -> int:
    """Derive an independent 64-bit stream seed from a master seed.

    Mixes ``master_seed + (stream_index + 1) * golden_gamma`` through the
    SplitMix64 finalizer, a 64-bit avalanche permutation.  Streams with
    distinct indices are decorrelated even for adjacent master seeds.
    """
    if stream_index < 0:
        raise ValueError(f"stream_index must be >= 0, got {stream_index}")
    z = (int(master_seed) + (stream_index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def stream_generator(master_seed: int, stream_index: int) -> np.random.Generator:
    """Generator for one stream; pure function of (master_seed, stream_index)."""
    return np.random.default_rng(split_seed(master_seed, stream_index))
