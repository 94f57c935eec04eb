"""Accuracy and semantic-error metrics on a precise validation set."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import LabeledExample, check_labels, feature_matrix
from .errors import EmptyValidationSet, FormatError, KTooLarge, NotLeafLabeled
from .hierarchy import Hierarchy
from .probmodel import leaf_probs, leaf_ranking
from .training import HeadModel, score


@dataclass
class EvalReport:
    top1: float
    topk: dict[int, float]
    mean_mispred_lca_depth: float
    n_examples: int
    n_mispredicted: int
    per_class: dict[str, tuple[int, int]] = field(default_factory=dict)
    """leaf -> (validation examples, correct top-1 predictions)"""


def leaf_scores(h: Hierarchy, model: HeadModel, features) -> np.ndarray:
    """Scores over ``h.leaves`` for each feature row."""
    if model.fingerprint and model.fingerprint != h.fingerprint:
        raise FormatError("model was trained on a different hierarchy")
    s = score(model, features)
    if model.kind == "chillax":
        return leaf_probs(h, s)
    return s


def report_from_rankings(h: Hierarchy, truth: Sequence[int], ranking: np.ndarray,
                         ks: Iterable[int] = (1,)) -> EvalReport:
    """Build a report from true leaf positions and per-example leaf rankings.

    ``truth[i]`` and the entries of ``ranking`` are positions in ``h.leaves``.
    """
    n = len(truth)
    if n == 0:
        raise EmptyValidationSet("validation set is empty")
    ks = sorted(set(ks) | {1})
    n_leaves = len(h.leaf_idx)
    if ks[0] < 1 or ks[-1] > n_leaves:
        raise KTooLarge(f"k values {ks} must lie in 1..{n_leaves}")
    truth = np.asarray(truth)
    ranking = np.asarray(ranking)
    hits = ranking == truth[:, None]
    topk = {k: float(hits[:, :k].any(axis=1).mean()) for k in ks}

    pred = ranking[:, 0]
    wrong = np.flatnonzero(pred != truth)
    leaf_idx = h.leaf_idx
    if wrong.size:
        lca = [h.lca_depth_idx(leaf_idx[truth[i]], leaf_idx[pred[i]]) for i in wrong]
        mean_lca = float(np.mean(lca))
    else:
        mean_lca = math.nan

    per_class = {}
    for j, name in enumerate(h.leaves):
        rows = truth == j
        if rows.any():
            per_class[name] = (int(rows.sum()), int((pred[rows] == j).sum()))
    return EvalReport(top1=topk[1], topk=topk, mean_mispred_lca_depth=mean_lca,
                      n_examples=n, n_mispredicted=int(wrong.size), per_class=per_class)


def evaluate(h: Hierarchy, model: HeadModel, valset: Sequence[LabeledExample],
             ks: Iterable[int] = (1,)) -> EvalReport:
    if not valset:
        raise EmptyValidationSet("validation set is empty")
    check_labels(h, valset)
    leaf_pos = {name: j for j, name in enumerate(h.leaves)}
    for ex in valset:
        if ex.label not in leaf_pos:
            raise NotLeafLabeled(f"validation example {ex.id!r} has inner label {ex.label!r}")
    scores = leaf_scores(h, model, feature_matrix(valset))
    truth = [leaf_pos[ex.label] for ex in valset]
    return report_from_rankings(h, truth, leaf_ranking(scores), ks)


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.4f}"


def report_rows(report: EvalReport) -> list[tuple[str, str]]:
    rows = [(f"top{k}", _fmt(report.topk[k])) for k in sorted(report.topk)]
    rows.append(("mean_mispred_lca_depth", _fmt(report.mean_mispred_lca_depth)))
    rows.append(("n_examples", str(report.n_examples)))
    rows.append(("n_mispredicted", str(report.n_mispredicted)))
    return rows


def emit_report(report: EvalReport, path) -> None:
    """Write ``metric,value`` rows; rates with four decimals, counts as integers."""
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value"])
        w.writerows(report_rows(report))
