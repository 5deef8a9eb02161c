"""Deterministic random-number streams.

Every stochastic routine in the package draws from a counter-based Philox
generator keyed by a (master seed, index...) path, so a given trial's draws
do not depend on execution order, worker count, or how many other trials
ran before it.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream", "substream_seed"]


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the stream identified by (seed, *path)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, *path))))


def substream_seed(seed: int, *path: int) -> int:
    """Derive a 64-bit child seed from (seed, *path), for APIs that take seeds."""
    return int(np.random.SeedSequence((seed, *path)).generate_state(1, np.uint64)[0])
