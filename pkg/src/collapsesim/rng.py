"""Seeded, counter-based random streams.

Every stream is a Philox generator whose 128-bit key is the BLAKE2b digest of
``"<seed>:<stream index>"``. Streams with different indices are independent;
the same ``(seed, index)`` pair always yields the same sequence.
"""

import hashlib

import numpy as np

SEED_MAX = 2**64 - 1


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be in [0, 2**64 - 1], got {seed}")
    return seed


def stream_key(seed: int, index: int) -> int:
    digest = hashlib.blake2b(f"{check_seed(seed)}:{int(index)}".encode(), digest_size=16).digest()
    return int.from_bytes(digest, "little")


def make_stream(seed: int, index: int = 0) -> np.random.Generator:
    """Return the generator for sub-stream ``index`` of ``seed``."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, index)))
