"""Deterministic seed derivation for experiments."""

from typing import Union

import numpy as np

# Stream tags keep planning, execution and episode seeds apart
SCORE_STREAM = 0
EXECUTE_STREAM = 1
EPISODE_STREAM = 2
DEMO_STREAM = 3

SeedKey = Union[int, str]


def _as_int(key: SeedKey) -> int:
    if isinstance(key, str):
        return int.from_bytes(key.encode("utf-8")[:8].ljust(8, b"\0"), "little")
    return int(key)


def derive_seed(*keys: SeedKey) -> int:
    """Combine keys into one 63-bit seed; identical keys always give the same seed."""
    sequence = np.random.SeedSequence([_as_int(k) & 0xFFFFFFFFFFFFFFFF for k in keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
