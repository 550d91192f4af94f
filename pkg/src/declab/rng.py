"""Counter-based random streams.

Every stochastic routine in the package draws from a Philox generator whose
128-bit key encodes (seed, stream id, block index).  A Monte Carlo loop over
fixed-size blocks therefore produces the same numbers no matter how blocks
are distributed over workers, and block b can be generated without touching
blocks 0..b-1.
"""

from __future__ import annotations

import numpy as np

BLOCK = 1 << 18  # samples per reduction block in Monte Carlo loops

_MASK64 = (1 << 64) - 1


def stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Independent Philox stream for (seed, stream_id)."""
    return block_stream(seed, stream_id, 0)


def block_stream(seed: int, stream_id: int, block_index: int) -> np.random.Generator:
    """Generator for one fixed block of one stream (order-independent)."""
    key = (seed & _MASK64, ((stream_id & 0xFFFFFFFF) << 32 | (block_index & 0xFFFFFFFF)))
    return np.random.Generator(np.random.Philox(key=key))


def spawn_seed(seed: int, *path: int) -> int:
    """Derive a child seed from a root seed and an integer path (stable hash)."""
    h = seed & _MASK64
    for p in path:
        h ^= (p & _MASK64) + 0x9E3779B97F4A7C15 + ((h << 6) & _MASK64) + (h >> 2)
        h &= _MASK64
    return h
