"""Labeled feature vectors and their JSON-Lines representation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, DuplicateId, EmptyDataset, FormatError, UnknownNode
from .hierarchy import Hierarchy


@dataclass(frozen=True)
class LabeledExample:
    id: str
    label: str
    features: np.ndarray = field(default_factory=lambda: np.zeros(0), compare=False)

    def relabel(self, label: str) -> "LabeledExample":
        return replace(self, label=label)


def check_ids(dataset: Sequence[LabeledExample]) -> None:
    seen = set()
    for ex in dataset:
        if ex.id in seen:
            raise DuplicateId(f"example id {ex.id!r} occurs more than once")
        seen.add(ex.id)


def check_labels(h: Hierarchy, dataset: Iterable[LabeledExample]) -> None:
    for ex in dataset:
        if ex.label not in h:
            raise UnknownNode(f"example {ex.id!r} has unknown label {ex.label!r}")


def feature_matrix(dataset: Sequence[LabeledExample]) -> np.ndarray:
    if not dataset:
        raise EmptyDataset("no examples")
    dims = {len(ex.features) for ex in dataset}
    if len(dims) != 1:
        raise DimensionMismatch(f"examples have differing feature dimensions {sorted(dims)}")
    return np.stack([np.asarray(ex.features, dtype=np.float64) for ex in dataset])


def parse_examples(text: str) -> list[LabeledExample]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            ex = LabeledExample(
                id=str(rec["id"]),
                label=str(rec["label"]),
                features=np.asarray(rec.get("features", []), dtype=np.float64),
            )
        except (ValueError, KeyError, TypeError) as err:
            raise FormatError(f"line {lineno}: {err}") from None
        out.append(ex)
    return out


def read_examples(path) -> list[LabeledExample]:
    return parse_examples(Path(path).read_text(encoding="utf-8"))


def format_examples(dataset: Iterable[LabeledExample]) -> str:
    lines = []
    for ex in dataset:
        rec = {"id": ex.id, "label": ex.label, "features": [float(v) for v in ex.features]}
        lines.append(json.dumps(rec, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def write_examples(path, dataset: Iterable[LabeledExample]) -> None:
    Path(path).write_text(format_examples(dataset), encoding="utf-8")
