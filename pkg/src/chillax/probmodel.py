"""From conditional node scores to unconditional label probabilities.

Each node predictor outputs P(s | x, some parent of s present). The
probability that a parent is present combines the parents' unconditional
probabilities as a noisy-OR, and the root's parent presence is taken as
certain:

    P(s | x) = P(s | x, parents) * (1 - prod_p (1 - P(p | x)))

Scores may be a single vector over ``h.nodes`` or a batch with nodes on the
last axis.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameters, KTooLarge, LengthMismatch
from .hierarchy import Hierarchy


def _check_scores(h: Hierarchy, cond) -> np.ndarray:
    cond = np.asarray(cond, dtype=np.float64)
    if cond.ndim == 0 or cond.shape[-1] != len(h):
        raise LengthMismatch(f"expected {len(h)} node scores, got shape {cond.shape}")
    if np.any(~((cond >= 0.0) & (cond <= 1.0))):
        raise InvalidParameters("conditional scores must lie in [0, 1]")
    return cond


def unconditional_probs(h: Hierarchy, cond) -> np.ndarray:
    cond = _check_scores(h, cond)
    out = np.empty_like(cond)
    for i in h.topo_order:
        parents = h.parents_idx(i)
        if not parents:
            out[..., i] = cond[..., i]
            continue
        absent = 1.0 - out[..., parents[0]]
        for p in parents[1:]:
            absent = absent * (1.0 - out[..., p])
        out[..., i] = cond[..., i] * (1.0 - absent)
    return out


def leaf_ranking(scores: np.ndarray) -> np.ndarray:
    """Column indices sorted by decreasing score; equal scores keep column order."""
    return np.argsort(-np.asarray(scores), axis=-1, kind="stable")


def leaf_probs(h: Hierarchy, cond) -> np.ndarray:
    """Unconditional probabilities restricted to ``h.leaves`` (in that order)."""
    return unconditional_probs(h, cond)[..., list(h.leaf_idx)]


def predict_leaf(h: Hierarchy, cond) -> str:
    probs = leaf_probs(h, cond)
    if probs.ndim != 1:
        raise LengthMismatch("predict_leaf takes a single score vector")
    return h.leaves[int(np.argmax(probs))]


def top_k_leaves(h: Hierarchy, cond, k: int) -> list[str]:
    n_leaves = len(h.leaf_idx)
    if k < 1:
        raise InvalidParameters(f"k must be positive, got {k}")
    if k > n_leaves:
        raise KTooLarge(f"k={k} exceeds the number of leaves ({n_leaves})")
    probs = leaf_probs(h, cond)
    if probs.ndim != 1:
        raise LengthMismatch("top_k_leaves takes a single score vector")
    leaves = h.leaves
    return [leaves[j] for j in leaf_ranking(probs)[:k]]
