import csv
import math

import numpy as np
import pytest

from chillax.data import LabeledExample
from chillax.errors import EmptyValidationSet, FormatError, KTooLarge, NotLeafLabeled
from chillax.evaluation import EvalReport, emit_report, evaluate, report_from_rankings
from chillax.hierarchy import load_hierarchy
from chillax.synthetic import tree_hierarchy
from chillax.training import HeadModel

from conftest import ANIMAL_TEXT, random_dag, random_tree


def _onehot_dataset(h, labels):
    """Features are one-hot leaf codes, so a weight matrix can hard-wire any predictor."""
    leaves = list(h.leaves)
    eye = np.eye(len(leaves))
    return [LabeledExample(f"v{k}", lab, tuple(eye[leaves.index(lab)])) for k, lab in enumerate(labels)]


def _softmax_router(h, mapping):
    """Softmax head that sends leaf i's one-hot code to leaf mapping[i]."""
    n = len(h.leaves)
    w = np.zeros((n, n))
    for src, dst in enumerate(mapping):
        w[dst, src] = 50.0
    return HeadModel("softmax", h.leaves, w, np.zeros(n), fingerprint=h.fingerprint)


def _chillax_router(h, mapping):
    """Sigmoid head whose conditional scores spell out the path of the mapped leaf."""
    n = len(h.leaves)
    w = np.full((len(h), n), -50.0)
    for src, dst in enumerate(mapping):
        target = h.leaf_idx[dst]
        for node in {target} | set(h.ancestors_idx(target)):
            w[node, src] = 50.0
    return HeadModel("chillax", h.nodes, w, np.zeros(len(h)), fingerprint=h.fingerprint)


@pytest.mark.parametrize("router", [_softmax_router, _chillax_router])
def test_oracle_model(t1, router):
    model = router(t1, [0, 1, 2])
    report = evaluate(t1, model, _onehot_dataset(t1, ["a1", "a2", "b1", "a1"]), ks=(1, 2))
    assert report.top1 == 1.0 and report.topk == {1: 1.0, 2: 1.0}
    assert report.n_mispredicted == 0 and math.isnan(report.mean_mispred_lca_depth)


@pytest.mark.parametrize("router", [_softmax_router, _chillax_router])
def test_everything_predicted_a2(t1, router):
    model = router(t1, [1, 1, 1])
    report = evaluate(t1, model, _onehot_dataset(t1, ["a1"] * 5))
    assert report.top1 == 0.0 and report.n_mispredicted == 5
    assert report.mean_mispred_lca_depth == 1.0
    assert report.per_class == {"a1": (5, 0)}


def test_mixed_errors(t1):
    model = _softmax_router(t1, [1, 2, 2])
    report = evaluate(t1, model, _onehot_dataset(t1, ["a1", "a2", "b1", "b1"]))
    # a1 -> a2 (lca depth 1), a2 -> b1 (lca depth 0), b1 correct twice
    assert report.top1 == 0.5
    assert report.mean_mispred_lca_depth == 0.5


def test_errors(t1):
    model = _softmax_router(t1, [0, 1, 2])
    with pytest.raises(EmptyValidationSet):
        evaluate(t1, model, [])
    with pytest.raises(NotLeafLabeled):
        evaluate(t1, model, [LabeledExample("x", "A", (1.0, 0.0, 0.0))])
    with pytest.raises(KTooLarge):
        evaluate(t1, model, _onehot_dataset(t1, ["a1"]), ks=(4,))
    other = load_hierarchy(ANIMAL_TEXT)
    with pytest.raises(FormatError):
        evaluate(other, model, [LabeledExample("x", "cat", (1.0, 0.0, 0.0))])


def _recount(h, truth, ranking, k):
    hits = sum(truth[i] in list(ranking[i][:k]) for i in range(len(truth)))
    wrong = [i for i in range(len(truth)) if ranking[i][0] != truth[i]]
    depths = []
    for i in wrong:
        a, b = h.leaves[truth[i]], h.leaves[ranking[i][0]]
        common = (h.ancestors(a) | {a}) & (h.ancestors(b) | {b})
        depths.append(max(h.depth(c) for c in common))
    mean = sum(depths) / len(depths) if depths else math.nan
    return hits / len(truth), mean, len(wrong)


@pytest.mark.parametrize("seed", range(20))
def test_report_matches_recount(seed):
    rng = np.random.default_rng(seed)
    h = random_dag(rng, 14)
    n_leaves = len(h.leaves)
    n = 60
    truth = rng.integers(0, n_leaves, n)
    ranking = np.array([rng.permutation(n_leaves) for _ in range(n)])
    ks = sorted({1, n_leaves, int(rng.integers(1, n_leaves + 1))})
    report = report_from_rankings(h, truth, ranking, ks)
    for k in ks:
        acc, mean, n_wrong = _recount(h, truth, ranking, k)
        assert report.topk[k] == pytest.approx(acc, abs=1e-15)
    assert report.n_mispredicted == n_wrong
    if n_wrong:
        assert report.mean_mispred_lca_depth == pytest.approx(mean, abs=1e-12)
    values = [report.topk[k] for k in ks]
    assert values == sorted(values) and report.topk[n_leaves] == 1.0


@pytest.mark.parametrize("seed", range(20))
def test_lca_bound_on_trees(seed):
    # shortcut edges in a DAG can make a shared ancestor deeper than a leaf, so trees only
    rng = np.random.default_rng(seed)
    h = random_tree(rng, 14)
    n_leaves = len(h.leaves)
    if n_leaves < 2:
        return
    truth = rng.integers(0, n_leaves, 50)
    ranking = np.array([rng.permutation(n_leaves) for _ in range(50)])
    report = report_from_rankings(h, truth, ranking)
    if report.n_mispredicted:
        assert report.mean_mispred_lca_depth < max(h.depth(x) for x in h.leaves)


def test_sibling_errors_score_at_least_cross_branch():
    h = tree_hierarchy([2, 2, 2])
    leaves = list(h.leaves)
    for t, leaf in enumerate(leaves):
        sibling = next(j for j, o in enumerate(leaves) if o != leaf and h.parents(o) == h.parents(leaf))
        far = next(j for j, o in enumerate(leaves) if h.lca_depth(o, leaf) == 0)
        rest = lambda first: [first] + [j for j in range(len(leaves)) if j != first]
        near_r = report_from_rankings(h, [t], np.array([rest(sibling)]))
        far_r = report_from_rankings(h, [t], np.array([rest(far)]))
        assert near_r.mean_mispred_lca_depth >= far_r.mean_mispred_lca_depth
        assert near_r.mean_mispred_lca_depth == 2 and far_r.mean_mispred_lca_depth == 0


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_emit_report_format(tmp_path):
    r = EvalReport(top1=0.5, topk={5: 0.9, 1: 0.5}, mean_mispred_lca_depth=1.23456,
                   n_examples=10, n_mispredicted=5)
    emit_report(r, tmp_path / "r.csv")
    assert _rows(tmp_path / "r.csv") == [
        ["metric", "value"],
        ["top1", "0.5000"],
        ["top5", "0.9000"],
        ["mean_mispred_lca_depth", "1.2346"],
        ["n_examples", "10"],
        ["n_mispredicted", "5"],
    ]


def test_emit_report_nan(tmp_path):
    r = EvalReport(top1=1.0, topk={1: 1.0}, mean_mispred_lca_depth=math.nan,
                   n_examples=3, n_mispredicted=0)
    emit_report(r, tmp_path / "r.csv")
    assert ["mean_mispred_lca_depth", "nan"] in _rows(tmp_path / "r.csv")


def test_emit_report_unwritable(tmp_path):
    r = EvalReport(top1=1.0, topk={1: 1.0}, mean_mispred_lca_depth=math.nan,
                   n_examples=3, n_mispredicted=0)
    with pytest.raises(OSError):
        emit_report(r, tmp_path / "missing" / "r.csv")
