"""Deterministic, named RNG substreams for parallel Monte Carlo work."""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, *path: object) -> np.random.Generator:
    """Return a counter-based generator for the substream named by ``path``.

    The same ``(seed, path)`` always yields the same stream, and distinct
    paths yield statistically independent streams, so trials and query types
    can draw in parallel without coordination.
    """
    tag = repr(tuple(str(p) for p in path)).encode()
    digest = hashlib.sha256(tag).digest()
    words = np.frombuffer(digest[:16], dtype=np.uint32)
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(w) for w in words)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *path: object) -> int:
    """Collapse ``(seed, path)`` into a stable 63-bit integer seed."""
    tag = repr((int(seed),) + tuple(str(p) for p in path)).encode()
    digest = hashlib.sha256(tag).digest()
    return int.from_bytes(digest[:8], "big") >> 1
