"""
Seeded counter-based random streams.

Every stream is a Philox generator keyed by a tuple of integers, so the
numbers drawn for (seed, signer, sample) never depend on draw order
elsewhere in the program.
"""

import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _as_int(part: Key) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError(f"Random stream keys must be non-negative, got {part}")
    return int(part)


def make_rng(*keys: Key) -> np.random.Generator:
    """Philox generator for the given key path"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([_as_int(k) for k in keys])))
