"""Deterministic counter-based random streams.

Each stream is a Philox generator keyed by a hash of integer words such as
``(master_seed, trial, purpose)``.  Draw ``i`` of a stream belongs to user
``i``, so a user's randomness depends only on the seed words and its index,
never on how work is scheduled.
"""

from __future__ import annotations

import numpy as np

INPUTS = 0
PRIVATIZE = 1
KEYS = 2


def stream(master_seed: int, *words: int) -> np.random.Generator:
    seq = np.random.SeedSequence([int(master_seed) & (2**64 - 1), *[int(w) for w in words]])
    key = seq.generate_state(2, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(master_seed: int, n: int, *words: int) -> np.ndarray:
    """``n`` uniforms in ``[0, 1)``; entry ``i`` is user ``i``'s draw."""
    return stream(master_seed, *words).random(n)
