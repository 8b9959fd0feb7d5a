"""Deterministic RNG substreams.

Every randomised operation draws from a named substream keyed by
(seed, labels...).  Substreams are independent of each other and of the
order in which they are created, so results never depend on scheduling
or worker count.
"""

import hashlib

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & _MASK64
    digest = hashlib.blake2b(str(key).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def substream(seed: int, *keys) -> np.random.Generator:
    """Generator for a named substream; same (seed, keys) -> same stream."""
    entropy = [int(seed) & _MASK64] + [_key_to_int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *keys) -> int:
    """A plain integer seed derived from a named substream."""
    return int(substream(seed, *keys).integers(0, 2**63))
