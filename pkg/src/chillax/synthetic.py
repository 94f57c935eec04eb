"""Synthetic hierarchies and Gaussian-cluster datasets.

Every non-root node owns one feature axis. A leaf's cluster mean has value
``scale`` on the axes of the leaf and all its non-root ancestors, so leaves
that share more of their ancestry sit closer together and the feature space
mirrors the hierarchy. ``scale`` is chosen so the closest pair of leaf means
is exactly ``margin * sigma`` apart.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .data import LabeledExample
from .hierarchy import Hierarchy, load_hierarchy


def tree_edges(branching: Sequence[int], root: str = "root") -> str:
    """Edge list of a complete tree with ``branching[l]`` children per node at level ``l``."""
    lines = []
    level = [root]
    for depth, b in enumerate(branching):
        nxt = []
        for parent in level:
            for c in range(b):
                child = f"n{c}" if depth == 0 else f"{parent}.{c}"
                lines.append(f"{child}\t{parent}")
                nxt.append(child)
        level = nxt
    return "\n".join(lines) + "\n"


def tree_hierarchy(branching: Sequence[int], root: str = "root") -> Hierarchy:
    return load_hierarchy(tree_edges(branching, root))


def cluster_means(h: Hierarchy, margin: float = 2.0, sigma: float = 1.0) -> np.ndarray:
    """Leaf means, one row per leaf, one column per non-root node."""
    axes = [i for i in range(len(h)) if i != h.root_idx]
    col = {node: j for j, node in enumerate(axes)}
    paths = []
    for leaf in h.leaf_idx:
        on = (set(h.ancestors_idx(leaf)) | {leaf}) - {h.root_idx}
        paths.append(on)
    if len(paths) > 1:
        closest = min(len(a ^ b) for a, b in itertools.combinations(paths, 2))
    else:
        closest = 1
    scale = margin * sigma / np.sqrt(closest)
    means = np.zeros((len(paths), len(axes)))
    for r, on in enumerate(paths):
        means[r, [col[i] for i in on]] = scale
    return means


def gaussian_clusters(h: Hierarchy, per_leaf: int, *, margin: float = 2.0, sigma: float = 1.0,
                      noise_dims: int = 0, seed: int = 0, prefix: str = "") -> list[LabeledExample]:
    """``per_leaf`` examples around each leaf mean, isotropic noise ``sigma``."""
    rng = np.random.default_rng(seed)
    means = cluster_means(h, margin, sigma)
    dim = means.shape[1] + noise_dims
    out = []
    for r, leaf in enumerate(h.leaves):
        centre = np.concatenate([means[r], np.zeros(noise_dims)])
        feats = centre + sigma * rng.standard_normal((per_leaf, dim))
        out.extend(
            LabeledExample(id=f"{prefix}{leaf}#{k}", label=leaf, features=feats[k])
            for k in range(per_leaf)
        )
    return out
