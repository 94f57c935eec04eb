"""Label depth of free-text metadata.

Texts are tokenized and each token is looked up in a lexicon that maps
lemmas to hierarchy nodes. Each matched lemma resolves to its shallowest
candidate node (the least committal reading); the text as a whole takes the
deepest of those nodes, the most descriptive one. Texts without any match
are dropped.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import FormatError, UnknownNode
from .hierarchy import Hierarchy

_TOKEN = re.compile(r"[^\W_]+")

Lexicon = Mapping[str, frozenset]


@dataclass(frozen=True)
class TextRecord:
    id: str
    fields: Mapping[str, str]


def parse_lexicon(text: str, h: Hierarchy) -> dict[str, frozenset]:
    """Read ``lemma<TAB>node[,node...]`` lines; repeated lemmas accumulate."""
    lex: dict[str, set] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        parts = raw.rstrip("\r\n").split("\t")
        if len(parts) != 2 or not parts[0].strip():
            raise FormatError(f"lexicon line {lineno}: expected 'lemma<TAB>node[,node...]'")
        nodes = [n.strip() for n in parts[1].split(",") if n.strip()]
        if not nodes:
            raise FormatError(f"lexicon line {lineno}: no nodes for {parts[0]!r}")
        for n in nodes:
            if n not in h:
                raise UnknownNode(f"lexicon line {lineno}: unknown node {n!r}")
        lex.setdefault(parts[0].strip().lower(), set()).update(nodes)
    return {k: frozenset(v) for k, v in lex.items()}


def read_lexicon(path, h: Hierarchy) -> dict[str, frozenset]:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"), h)


def parse_records(text: str) -> list[TextRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            fields = rec["fields"]
            if not isinstance(fields, dict):
                raise TypeError("'fields' must be an object")
            if any(not k for k in fields):
                raise ValueError("empty field name")
            out.append(TextRecord(id=str(rec["id"]), fields={str(k): str(v) for k, v in fields.items()}))
        except (ValueError, KeyError, TypeError) as err:
            raise FormatError(f"records line {lineno}: {err}") from None
    return out


def read_records(path) -> list[TextRecord]:
    return parse_records(Path(path).read_text(encoding="utf-8"))


def lemmas_of(text: str, lexicon: Optional[Lexicon] = None) -> list[str]:
    """Lowercase alphanumeric tokens, with plural endings stripped when that hits the lexicon."""
    out = []
    for tok in _TOKEN.findall(text.lower()):
        if lexicon is not None and tok not in lexicon:
            for suffix in ("es", "s"):
                if tok.endswith(suffix) and tok[: -len(suffix)] in lexicon:
                    tok = tok[: -len(suffix)]
                    break
        out.append(tok)
    return out


def _lemma_node(h: Hierarchy, candidates: Iterable[str]) -> int:
    return min((h.index(c) for c in candidates), key=lambda i: (h.depths[i], i))


def best_node(h: Hierarchy, lexicon: Lexicon, text: str) -> Optional[str]:
    """The deepest among the per-lemma shallowest matches, or ``None`` without matches."""
    picked = {_lemma_node(h, lexicon[lem]) for lem in lemmas_of(text, lexicon) if lem in lexicon}
    if not picked:
        return None
    return h.nodes[max(picked, key=lambda i: (h.depths[i], -i))]


def best_depth(h: Hierarchy, lexicon: Lexicon, text: str) -> Optional[int]:
    node = best_node(h, lexicon, text)
    return None if node is None else h.depth(node)


def depth_histogram(h: Hierarchy, lexicon: Lexicon,
                    records: Iterable[TextRecord]) -> dict[str, np.ndarray]:
    """Per field, counts of best depth over ``0..max_depth``.

    Only fields present in at least one record get an entry; records whose
    text has no match are not counted.
    """
    hist: dict[str, np.ndarray] = {}
    for rec in records:
        for name, text in rec.fields.items():
            counts = hist.setdefault(name, np.zeros(h.max_depth + 1, dtype=np.int64))
            d = best_depth(h, lexicon, text)
            if d is not None:
                counts[d] += 1
    return hist


def write_histogram(path, field_name: str, counts: Optional[np.ndarray]) -> None:
    """``field,depth,count`` CSV; header only when the field never occurred."""
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["field", "depth", "count"])
        if counts is not None:
            w.writerows((field_name, d, int(c)) for d, c in enumerate(counts))


def fields_in_order(records: Sequence[TextRecord]) -> list[str]:
    seen: dict[str, None] = {}
    for rec in records:
        for name in rec.fields:
            seen.setdefault(name)
    return list(seen)
