"""Class hierarchies as immutable rooted DAGs.

Edges are read as ``child<TAB>parent`` pairs (child is-a parent). Nodes are
addressed by their string token in the public API and by a dense integer
index (their position in ``node_order``) in the numeric modules.
"""

from __future__ import annotations

import hashlib
import heapq
from collections import deque
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CycleDetected,
    DuplicateEdge,
    EmptyDocument,
    MalformedLine,
    MultipleRoots,
    NoRoot,
    UnknownNode,
)


class Hierarchy:
    """Rooted, acyclic is-a graph over class labels.

    ``nodes`` is the fixed node order used for every per-node vector in the
    package. ``leaves`` (the precise label set) keeps that order.
    """

    __slots__ = (
        "_names", "_index", "_parents", "_children", "_root", "_depths",
        "_leaf_idx", "_topo", "_anc", "_leaf_desc", "_fingerprint",
    )

    def __init__(self, names: Sequence[str], edges: Iterable[tuple[int, int]]):
        names = tuple(names)
        n = len(names)
        index = {name: i for i, name in enumerate(names)}
        if len(index) != n:
            raise ValueError("node names must be unique")

        parents: list[list[int]] = [[] for _ in range(n)]
        children: list[list[int]] = [[] for _ in range(n)]
        seen = set()
        for child, parent in edges:
            if (child, parent) in seen:
                raise DuplicateEdge(f"duplicate edge {names[child]!r} -> {names[parent]!r}")
            if child == parent:
                raise CycleDetected(f"self-loop on {names[child]!r}")
            seen.add((child, parent))
            parents[child].append(parent)
            children[parent].append(child)
        if not seen:
            raise EmptyDocument("hierarchy has no edges")
        for lst in parents:
            lst.sort()
        for lst in children:
            lst.sort()

        # Kahn's algorithm from the parentless side; ties resolved by node order.
        indeg = [len(p) for p in parents]
        heap = [i for i in range(n) if indeg[i] == 0]
        heapq.heapify(heap)
        topo = []
        while heap:
            i = heapq.heappop(heap)
            topo.append(i)
            for c in children[i]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, c)
        if len(topo) != n:
            stuck = sorted(names[i] for i in range(n) if indeg[i] > 0)
            raise CycleDetected(f"directed cycle among {stuck}")

        roots = [i for i in range(n) if not parents[i]]
        if not roots:
            raise NoRoot("every node has a parent")
        if len(roots) > 1:
            raise MultipleRoots(f"multiple parentless nodes: {[names[r] for r in roots]}")
        root = roots[0]

        depths = np.full(n, -1, dtype=np.int64)
        depths[root] = 0
        queue = deque([root])
        while queue:
            i = queue.popleft()
            for c in children[i]:
                if depths[c] < 0:
                    depths[c] = depths[i] + 1
                    queue.append(c)
        depths.setflags(write=False)

        anc: list[frozenset[int]] = [frozenset()] * n
        for i in topo:
            acc = set()
            for p in parents[i]:
                acc.add(p)
                acc |= anc[p]
            anc[i] = frozenset(acc)

        leaf_desc: list[frozenset[int]] = [frozenset()] * n
        for i in reversed(topo):
            if not children[i]:
                leaf_desc[i] = frozenset((i,))
            else:
                acc = set()
                for c in children[i]:
                    acc |= leaf_desc[c]
                leaf_desc[i] = frozenset(acc)

        self._names = names
        self._index = index
        self._parents = tuple(tuple(p) for p in parents)
        self._children = tuple(tuple(c) for c in children)
        self._root = root
        self._depths = depths
        self._leaf_idx = tuple(i for i in range(n) if not children[i])
        self._topo = tuple(topo)
        self._anc = tuple(anc)
        self._leaf_desc = tuple(leaf_desc)
        self._fingerprint = hashlib.sha256(
            "\n".join(names).encode("utf-8")
            + b"\0"
            + ";".join(f"{c},{p}" for c, p in sorted(seen)).encode("ascii")
        ).hexdigest()

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]]) -> "Hierarchy":
        """Build from ``(child, parent)`` name pairs.

        Node order is order of first appearance, reading each pair parent
        first so that a top-down edge list yields a top-down order.
        """
        names: dict[str, int] = {}
        idx_edges = []
        for child, parent in edges:
            for name in (parent, child):
                if name not in names:
                    names[name] = len(names)
            idx_edges.append((names[child], names[parent]))
        return cls(list(names), idx_edges)

    # -- name-level API -------------------------------------------------

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name) -> bool:
        return name in self._index

    def __repr__(self) -> str:
        return (f"Hierarchy(root={self.root!r}, nodes={len(self)}, "
                f"leaves={len(self._leaf_idx)}, max_depth={self.max_depth})")

    @property
    def nodes(self) -> tuple[str, ...]:
        return self._names

    @property
    def root(self) -> str:
        return self._names[self._root]

    @property
    def leaves(self) -> tuple[str, ...]:
        return tuple(self._names[i] for i in self._leaf_idx)

    @property
    def max_depth(self) -> int:
        return int(self._depths.max())

    @property
    def fingerprint(self) -> str:
        """Digest of node order and edges; guards checkpoints against a different hierarchy."""
        return self._fingerprint

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownNode(f"unknown node {name!r}") from None

    def depth(self, name: str) -> int:
        return int(self._depths[self.index(name)])

    def is_leaf(self, name: str) -> bool:
        return not self._children[self.index(name)]

    def parents(self, name: str) -> tuple[str, ...]:
        return tuple(self._names[p] for p in self._parents[self.index(name)])

    def children(self, name: str) -> tuple[str, ...]:
        return tuple(self._names[c] for c in self._children[self.index(name)])

    def ancestors(self, name: str) -> frozenset[str]:
        """Strict transitive ancestors of ``name`` (empty for the root)."""
        return frozenset(self._names[a] for a in self._anc[self.index(name)])

    def leaf_descendants(self, name: str) -> frozenset[str]:
        """Leaves reachable downward from ``name``; ``{name}`` for a leaf."""
        return frozenset(self._names[i] for i in self._leaf_desc[self.index(name)])

    def lca_depth(self, a: str, b: str) -> int:
        """Depth of the deepest common ancestor, counting each node as its own ancestor."""
        return self.lca_depth_idx(self.index(a), self.index(b))

    # -- index-level API used by the numeric modules ---------------------

    @property
    def root_idx(self) -> int:
        return self._root

    @property
    def depths(self) -> np.ndarray:
        return self._depths

    @property
    def leaf_idx(self) -> tuple[int, ...]:
        return self._leaf_idx

    @property
    def topo_order(self) -> tuple[int, ...]:
        """Parents before children; ties by node order."""
        return self._topo

    def parents_idx(self, i: int) -> tuple[int, ...]:
        return self._parents[i]

    def children_idx(self, i: int) -> tuple[int, ...]:
        return self._children[i]

    def ancestors_idx(self, i: int) -> frozenset[int]:
        return self._anc[i]

    def leaf_descendants_idx(self, i: int) -> frozenset[int]:
        return self._leaf_desc[i]

    def lca_depth_idx(self, a: int, b: int) -> int:
        common = (self._anc[a] | {a}) & (self._anc[b] | {b})
        return int(max(self._depths[c] for c in common))


def _parse_edges(text: str) -> list[tuple[str, str]]:
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = raw.rstrip("\r\n").split("\t")
        if len(fields) != 2 or not fields[0].strip() or not fields[1].strip():
            raise MalformedLine(f"line {lineno}: expected 'child<TAB>parent', got {raw!r}")
        edges.append((fields[0].strip(), fields[1].strip()))
    if not edges:
        raise EmptyDocument("edge list contains no edges")
    return edges


def load_hierarchy(text: str) -> Hierarchy:
    """Parse a ``child<TAB>parent`` edge list; ``#`` lines are comments."""
    return Hierarchy.from_edges(_parse_edges(text))


def read_hierarchy(path) -> Hierarchy:
    return load_hierarchy(Path(path).read_text(encoding="utf-8"))


def dump_hierarchy(h: Hierarchy) -> str:
    """Edge-list text for ``h`` (parents before children)."""
    lines = []
    for i in h.topo_order:
        for p in h.parents_idx(i):
            lines.append(f"{h.nodes[i]}\t{h.nodes[p]}")
    return "\n".join(lines) + "\n"
