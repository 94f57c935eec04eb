"""Counter-based per-example random numbers.

A uniform draw for an example depends only on (seed, example id, stream),
never on how many other examples exist or in which order they are visited.
"""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer
    z = x + _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def example_keys(ids: Sequence[str], seed: int) -> np.ndarray:
    key = str(int(seed)).encode("ascii")
    out = np.empty(len(ids), dtype=np.uint64)
    for i, ex_id in enumerate(ids):
        digest = hashlib.blake2b(ex_id.encode("utf-8"), digest_size=8, key=key).digest()
        out[i] = int.from_bytes(digest, "little")
    return out


def uniforms(keys: np.ndarray, stream: int) -> np.ndarray:
    """One float in [0, 1) per key for the given stream number."""
    salt = _mix(np.array([stream], dtype=np.uint64))[0]
    bits = _mix(keys ^ salt)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def exact_count(fraction: float, n: int) -> int:
    """``round(fraction * n)`` with halves rounded up."""
    return int(np.floor(fraction * n + 0.5))


def pick_subset(keys: np.ndarray, ids: Sequence[str], k: int, stream: int) -> np.ndarray:
    """Boolean mask selecting exactly ``k`` examples uniformly at random."""
    sel = np.zeros(len(keys), dtype=bool)
    if k <= 0:
        return sel
    u = uniforms(keys, stream)
    order = sorted(range(len(keys)), key=lambda i: (u[i], ids[i]))
    sel[order[:k]] = True
    return sel
