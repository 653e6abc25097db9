"""Seed handling.

All randomness goes through ``numpy.random.Generator`` backed by the PCG64
bit generator, which produces the same stream on every platform for a given
seed. Child seeds are derived from a root seed by hashing
``(root, stage, index)`` with SHA-256 and keeping the first 8 bytes
(little-endian) as an unsigned 64-bit integer, so work units can be
evaluated in any order and still see the same random stream.
"""

from __future__ import annotations

import hashlib

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def derive_seed(root: int, stage: str, index: int = 0) -> int:
    """Child seed for ``(root, stage, index)``."""
    payload = f"{check_seed(root)}:{stage}:{int(index)}".encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(check_seed(seed)))
