"""Seeded random streams.

Every random draw in the pipeline comes from a generator keyed by a master
seed plus a tuple of integers (epoch, image index, ...). Streams for
different keys are statistically independent, and each can be rebuilt in
any order, which is what keeps batch processing order-independent.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def stream(seed: int, *key) -> np.random.Generator:
    """Return the generator for ``(seed, *key)``.

    String key parts are hashed with CRC32 so callers can name purposes
    (``stream(seed, "shuffle", epoch)``) without colliding with numeric
    keys.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_part(k) for k in key))
    return np.random.default_rng(ss)
