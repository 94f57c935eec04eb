"""Per-node targets and loss masks for a single training label.

For a label ``y`` the target vector marks ``y`` and all of its ancestors as
present. Two masks choose which node predictors receive a loss:

* ``mask_original`` trains ``y``, the children of ``y`` (as negatives) and
  every child of a strict ancestor of ``y``.
* ``mask_chillax`` drops the children of ``y``: an imprecise label says
  nothing about which child applies, so those predictors are left alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .hierarchy import Hierarchy

MaskKind = Literal["chillax", "original"]


@dataclass(frozen=True)
class MaskedTarget:
    targets: np.ndarray
    mask: np.ndarray
    label: str


def _encode_idx(h: Hierarchy, y: int) -> np.ndarray:
    e = np.zeros(len(h), dtype=np.int8)
    e[y] = 1
    e[list(h.ancestors_idx(y))] = 1
    return e


def _ancestor_children_idx(h: Hierarchy, y: int) -> set[int]:
    out = set()
    for a in h.ancestors_idx(y):
        out.update(h.children_idx(a))
    return out


def _mask_idx(h: Hierarchy, y: int, kind: MaskKind) -> np.ndarray:
    m = np.zeros(len(h), dtype=np.int8)
    m[y] = 1
    m[list(_ancestor_children_idx(h, y))] = 1
    if kind == "original":
        m[list(h.children_idx(y))] = 1
    elif kind != "chillax":
        raise ValueError(f"unknown mask kind {kind!r}")
    return m


def encode(h: Hierarchy, y: str) -> np.ndarray:
    """0/1 vector over ``h.nodes``: 1 for ``y`` and each of its ancestors."""
    return _encode_idx(h, h.index(y))


def mask_original(h: Hierarchy, y: str) -> np.ndarray:
    return _mask_idx(h, h.index(y), "original")


def mask_chillax(h: Hierarchy, y: str) -> np.ndarray:
    return _mask_idx(h, h.index(y), "chillax")


def masked_target(h: Hierarchy, y: str, kind: MaskKind = "chillax") -> MaskedTarget:
    i = h.index(y)
    return MaskedTarget(targets=_encode_idx(h, i), mask=_mask_idx(h, i, kind), label=y)


def target_tables(h: Hierarchy, kind: MaskKind = "chillax") -> tuple[np.ndarray, np.ndarray]:
    """Encodings and masks for every possible label, as float64 ``(N, N)`` tables.

    Row ``i`` belongs to label ``h.nodes[i]``; batches gather rows by label index.
    """
    n = len(h)
    enc = np.empty((n, n))
    mask = np.empty((n, n))
    for i in range(n):
        enc[i] = _encode_idx(h, i)
        mask[i] = _mask_idx(h, i, kind)
    return enc, mask
