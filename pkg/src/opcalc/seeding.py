"""Deterministic RNG derivation.

All randomness in the workbench flows from a single base seed through
counted spawn keys, so every ensemble member is individually reproducible.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode())


def rng_for(seed: int, *key) -> np.random.Generator:
    """Child generator for (seed, key...); stable across runs and workers."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_part(p) for p in key))
    return np.random.Generator(np.random.PCG64(ss))
