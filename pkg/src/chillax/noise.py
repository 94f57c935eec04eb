"""Synthetic label imprecision and inaccuracy.

Precise (leaf-labeled) data is degraded by sampling a target depth for every
label from a depth model and walking up the hierarchy until that depth is
reached. Depth models:

``geometric``
    Web-crawled labels. Mass ``q * (1 - q)**k`` at depth ``d_max - k``, so
    ``q`` is the share of labels left at full depth (``q = 1`` is noise free).
``poisson``
    Volunteer labels. Absolute depth ``d ~ Poisson(lam)``.
``relabel``
    A fixed fraction of labels replaced by a direct parent.
``benchmark``
    No imprecision.

Both distributions are restricted to depths ``shift..d_max`` and
renormalized. All randomness is derived per example from ``(seed, id)``, so
results do not depend on dataset order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _random
from .data import LabeledExample, check_ids, check_labels
from .errors import InvalidParameters, NotLeafLabeled
from .hierarchy import Hierarchy

KINDS = ("geometric", "poisson", "relabel", "benchmark")

# stream numbers for per-example uniforms
_INACC_PICK = 1
_INACC_LEAF = 2
_RELABEL_PICK = 3
_RELABEL_PARENT = 4
_DEPTH = 5
_WALK = 64


@dataclass(frozen=True)
class DepthModel:
    kind: str
    q: float = 1.0
    lam: float = 0.0
    fraction: float = 0.0
    shift: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameters(f"unknown depth model {self.kind!r}; expected one of {KINDS}")
        if self.kind == "geometric" and not (0.0 < self.q <= 1.0):
            raise InvalidParameters(f"geometric q must be in (0, 1], got {self.q}")
        if self.kind == "poisson" and not (self.lam >= 0.0 and math.isfinite(self.lam)):
            raise InvalidParameters(f"poisson lambda must be a finite non-negative number, got {self.lam}")
        if self.kind == "relabel" and not (0.0 <= self.fraction <= 1.0):
            raise InvalidParameters(f"relabel fraction must be in [0, 1], got {self.fraction}")
        if int(self.shift) != self.shift or self.shift < 0:
            raise InvalidParameters(f"shift must be a non-negative integer, got {self.shift}")

    @classmethod
    def geometric(cls, q: float, shift: int = 0) -> "DepthModel":
        return cls("geometric", q=q, shift=shift)

    @classmethod
    def poisson(cls, lam: float, shift: int = 0) -> "DepthModel":
        return cls("poisson", lam=lam, shift=shift)

    @classmethod
    def relabel(cls, fraction: float) -> "DepthModel":
        return cls("relabel", fraction=fraction)

    @classmethod
    def benchmark(cls) -> "DepthModel":
        return cls("benchmark")


def depth_pmf(model: DepthModel, d_max: int) -> np.ndarray:
    """Target-depth distribution over ``0..d_max`` after truncation."""
    if d_max < 0:
        raise InvalidParameters(f"d_max must be non-negative, got {d_max}")
    pmf = np.zeros(d_max + 1)
    if model.kind == "benchmark":
        pmf[d_max] = 1.0
        return pmf
    if model.kind == "relabel":
        raise InvalidParameters("the relabel model replaces labels by parents and has no depth distribution")
    if model.shift > d_max:
        raise InvalidParameters(f"shift {model.shift} exceeds maximum depth {d_max}")

    if model.kind == "geometric":
        for k in range(d_max - model.shift + 1):
            pmf[d_max - k] = model.q * (1.0 - model.q) ** k
    else:
        lam = model.lam
        for d in range(model.shift, d_max + 1):
            if lam == 0.0:
                pmf[d] = 1.0 if d == 0 else 0.0
            else:
                pmf[d] = math.exp(d * math.log(lam) - lam - math.lgamma(d + 1))
    total = pmf.sum()
    if total <= 0.0:
        raise InvalidParameters(f"{model} puts no mass on depths {model.shift}..{d_max}")
    return pmf / total


def sample_depths(pmf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling of depths from uniforms in [0, 1)."""
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    d = np.searchsorted(cdf, u, side="right")
    last = int(np.flatnonzero(pmf > 0)[-1])
    return np.minimum(d, last)


def _parent_table(h: Hierarchy) -> np.ndarray:
    width = max(1, max(len(h.parents_idx(i)) for i in range(len(h))))
    table = np.full((len(h), width), -1, dtype=np.int64)
    for i in range(len(h)):
        ps = h.parents_idx(i)
        table[i, :len(ps)] = ps
    return table


def _step_up(h: Hierarchy, node: int, target: int, u: float) -> int:
    # only parents that still lie at or below the target depth can lead to it
    eligible = [p for p in h.parents_idx(node) if h.depths[p] >= target]
    return eligible[min(int(u * len(eligible)), len(eligible) - 1)]


def _walk_up(h: Hierarchy, node: int, target: int, draw: Callable[[], float]) -> int:
    while h.depths[node] > target:
        node = _step_up(h, node, target, draw())
    return node


def _walk_up_batch(h: Hierarchy, nodes: np.ndarray, targets: np.ndarray,
                   draw: Callable[[int, np.ndarray], np.ndarray]) -> np.ndarray:
    """Vectorized ``_walk_up``; ``draw(step, rows)`` gives one uniform per active row."""
    nodes = nodes.copy()
    table = _parent_table(h)
    depths = h.depths
    step = 0
    while True:
        active = np.flatnonzero(depths[nodes] > targets)
        if active.size == 0:
            return nodes
        cand = table[nodes[active]]
        ok = (cand >= 0) & (depths[np.maximum(cand, 0)] >= targets[active, None])
        count = ok.sum(axis=1)
        choice = np.minimum((draw(step, active) * count).astype(np.int64), count - 1)
        rank = np.cumsum(ok, axis=1) - 1
        col = np.argmax(ok & (rank == choice[:, None]), axis=1)
        nodes[active] = cand[np.arange(active.size), col]
        step += 1


def imprecisify_label(h: Hierarchy, y: str, target_depth: int, rng: np.random.Generator) -> str:
    """Replace ``y`` by an ancestor at ``target_depth``.

    Labels already at or above the target depth are returned unchanged.
    Where a node has several parents the walk picks one uniformly among
    those from which the target depth is still reachable.
    """
    i = h.index(y)
    if not 0 <= target_depth <= h.max_depth:
        raise InvalidParameters(f"target depth {target_depth} outside 0..{h.max_depth}")
    return h.nodes[_walk_up(h, i, target_depth, rng.random)]


def _require_leaves(h: Hierarchy, dataset: Sequence[LabeledExample]) -> None:
    for ex in dataset:
        if not h.is_leaf(ex.label):
            raise NotLeafLabeled(f"example {ex.id!r} is labeled with inner node {ex.label!r}")


def relabel_parents(h: Hierarchy, dataset: Sequence[LabeledExample], fraction: float,
                    seed: int) -> list[LabeledExample]:
    """Replace the labels of exactly ``round(fraction * N)`` examples by a direct parent.

    The parent is drawn uniformly when there are several. A selected
    example labeled with the root keeps its label.
    """
    if not 0.0 <= fraction <= 1.0:
        raise InvalidParameters(f"fraction must be in [0, 1], got {fraction}")
    check_ids(dataset)
    check_labels(h, dataset)
    ids = [ex.id for ex in dataset]
    keys = _random.example_keys(ids, seed)
    picked = _random.pick_subset(keys, ids, _random.exact_count(fraction, len(dataset)), _RELABEL_PICK)
    u = _random.uniforms(keys, _RELABEL_PARENT)
    out = []
    for j, ex in enumerate(dataset):
        parents = h.parents(ex.label)
        if picked[j] and parents:
            ex = ex.relabel(parents[min(int(u[j] * len(parents)), len(parents) - 1)])
        out.append(ex)
    return out


def inject_inaccuracy(h: Hierarchy, dataset: Sequence[LabeledExample], fraction: float,
                      seed: int) -> list[LabeledExample]:
    """Give exactly ``round(fraction * N)`` examples a different, uniformly drawn leaf label."""
    if not 0.0 <= fraction <= 1.0:
        raise InvalidParameters(f"fraction must be in [0, 1], got {fraction}")
    check_ids(dataset)
    check_labels(h, dataset)
    _require_leaves(h, dataset)
    k = _random.exact_count(fraction, len(dataset))
    if k == 0:
        return list(dataset)
    leaves = h.leaves
    if len(leaves) < 2:
        raise InvalidParameters("inaccuracy needs at least two leaves")
    leaf_pos = {name: j for j, name in enumerate(leaves)}
    ids = [ex.id for ex in dataset]
    keys = _random.example_keys(ids, seed)
    picked = _random.pick_subset(keys, ids, k, _INACC_PICK)
    u = _random.uniforms(keys, _INACC_LEAF)
    out = []
    for j, ex in enumerate(dataset):
        if picked[j]:
            r = min(int(u[j] * (len(leaves) - 1)), len(leaves) - 2)
            if r >= leaf_pos[ex.label]:
                r += 1
            ex = ex.relabel(leaves[r])
        out.append(ex)
    return out


def apply_imprecision(h: Hierarchy, dataset: Sequence[LabeledExample], model: DepthModel,
                      seed: int) -> list[LabeledExample]:
    """Degrade label precision only (no leaf requirement, no inaccuracy)."""
    check_ids(dataset)
    check_labels(h, dataset)
    if model.kind == "benchmark" or not dataset:
        return list(dataset)
    if model.kind == "relabel":
        return relabel_parents(h, dataset, model.fraction, seed)

    pmf = depth_pmf(model, h.max_depth)
    ids = [ex.id for ex in dataset]
    keys = _random.example_keys(ids, seed)
    targets = sample_depths(pmf, _random.uniforms(keys, _DEPTH))
    nodes = np.array([h.index(ex.label) for ex in dataset], dtype=np.int64)
    walked = _walk_up_batch(
        h, nodes, targets, lambda step, rows: _random.uniforms(keys[rows], _WALK + step)
    )
    names = h.nodes
    return [
        ex if walked[j] == nodes[j] else ex.relabel(names[walked[j]])
        for j, ex in enumerate(dataset)
    ]


def degrade_dataset(h: Hierarchy, dataset: Sequence[LabeledExample], model: DepthModel,
                    inaccuracy: float = 0.0, seed: int = 0) -> list[LabeledExample]:
    """Confuse a fraction of leaf labels, then apply imprecision.

    Inaccuracy comes first so that confused labels are later coarsened like
    any other label; their share among the outputs can therefore drop.
    """
    check_ids(dataset)
    check_labels(h, dataset)
    _require_leaves(h, dataset)
    if inaccuracy > 0.0:
        dataset = inject_inaccuracy(h, dataset, inaccuracy, seed)
    return apply_imprecision(h, dataset, model, seed)
