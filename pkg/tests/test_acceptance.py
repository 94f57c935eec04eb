"""Acceptance gate: one test per criterion, summarized as PASS/FAIL lines at the end of the run.

Run just this file with ``pytest tests/test_acceptance.py``.
"""

import csv
import math
import time

import numpy as np
import pytest

from chillax.data import LabeledExample
from chillax.encoding import encode, mask_chillax, mask_original
from chillax.evaluation import report_from_rankings
from chillax.experiment import ExperimentConfig, run_experiment
from chillax.hierarchy import load_hierarchy
from chillax.noise import DepthModel, degrade_dataset, depth_pmf, relabel_parents
from chillax.probmodel import top_k_leaves, unconditional_probs
from chillax.synthetic import tree_hierarchy
from chillax.training import (
    PRESETS,
    HyperParams,
    SgdrSchedule,
    masked_bce_grad,
    masked_bce_loss,
    preprocess,
    sgdr_lr,
    train,
)

from conftest import D1_TEXT, ANIMAL_TEXT, T1_TEXT, chain, random_dag, random_tree
from test_evaluation import _recount
from test_probmodel import naive_probs
from test_training import _rel_err, _target, finite_diff_logits


def _covered(h, y):
    return {c for a in h.ancestors(y) for c in h.children(a)}


@pytest.mark.acceptance(1, "mask algebra on 50 random DAGs")
def test_ac01_mask_algebra():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    for _ in range(50):
        h = random_dag(rng, int(rng.integers(2, 13)))
        pos = {n: i for i, n in enumerate(h.nodes)}
        for y in h.nodes:
            m, mp = mask_original(h, y), mask_chillax(h, y)
            assert np.all(mp <= m)
            if h.is_leaf(y):
                assert np.array_equal(m, mp)
            diff = {n for n in h.nodes if m[pos[n]] != mp[pos[n]]}
            assert diff == set(h.children(y)) - _covered(h, y)
    assert time.perf_counter() - start < 1.0


@pytest.mark.acceptance(2, "animal/cat/dog mask reproduction")
def test_ac02_animal_masks():
    h = load_hierarchy(ANIMAL_TEXT)
    assert h.nodes == ("root", "animal", "cat", "dog")
    assert encode(h, "animal").tolist() == [1, 1, 0, 0]
    assert mask_original(h, "animal").tolist() == [0, 1, 1, 1]
    assert mask_chillax(h, "animal").tolist() == [0, 1, 0, 0]


@pytest.mark.acceptance(3, "inference against naive recursion and worked values")
def test_ac03_inference_oracle():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        h = random_dag(rng, int(rng.integers(2, 13)))
        cond = rng.random(len(h))
        np.testing.assert_allclose(unconditional_probs(h, cond), naive_probs(h, cond), rtol=0, atol=1e-12)
    t1 = load_hierarchy(T1_TEXT)
    got = unconditional_probs(t1, [0.9, 0.5, 0.4, 0.8, 0.3, 0.6])
    np.testing.assert_allclose(got, [0.9, 0.45, 0.36, 0.36, 0.135, 0.216], rtol=0, atol=1e-15)
    d1 = load_hierarchy(D1_TEXT)
    c = unconditional_probs(d1, [0.9, 0.5, 0.4, 0.8, 0.3, 0.6, 0.5])[d1.index("c")]
    assert c == pytest.approx(0.324, abs=1e-15)


@pytest.mark.acceptance(4, "root-ranking invariance on 100 random trees")
def test_ac04_root_invariance():
    rng = np.random.default_rng(11)
    for _ in range(100):
        h = random_tree(rng, int(rng.integers(3, 13)))
        cond = rng.random(len(h))
        rankings = set()
        for a in (0.1, 0.5, 1.0):
            cond[h.root_idx] = a
            rankings.add(tuple(top_k_leaves(h, cond, len(h.leaves))))
        assert len(rankings) == 1


@pytest.mark.acceptance(5, "gradient check over 100 random configurations")
def test_ac05_gradient_check():
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 100:
        n = 6
        z = rng.uniform(-4, 4, n)
        t = _target(rng.integers(0, 2, n), rng.integers(0, 2, n))
        if not t.mask.any():
            continue
        assert _rel_err(masked_bce_grad(1 / (1 + np.exp(-z)), t), finite_diff_logits(z, t)) <= 1e-5
        checked += 1
    assert masked_bce_loss([0.5], _target([1], [1])) == pytest.approx(math.log(2))
    assert time.perf_counter() - start < 1.0


@pytest.mark.acceptance(6, "noise-model depth distributions on a depth-6 chain")
def test_ac06_noise_distributions():
    start = time.perf_counter()
    h = chain(6)
    n = 100_000
    ds = [LabeledExample(f"e{k}", "d6") for k in range(n)]
    models = [DepthModel.geometric(q) for q in (0.5, 0.8, 0.9, 0.95)]
    models += [DepthModel.poisson(lam) for lam in (1.0, 2.0, 3.0, 4.0)]
    for seed, model in enumerate(models):
        out = degrade_dataset(h, ds, model, seed=seed)
        counts = np.bincount([h.depth(e.label) for e in out], minlength=7)
        tv = 0.5 * np.abs(counts / n - depth_pmf(model, 6)).sum()
        assert tv <= 0.01, (model, tv)
    assert degrade_dataset(h, ds, DepthModel.geometric(1.0), seed=1) == ds
    assert degrade_dataset(h, ds, DepthModel.benchmark(), seed=1) == ds
    assert time.perf_counter() - start < 5.0


@pytest.mark.acceptance(7, "relabel model exact count and parent replacement")
def test_ac07_relabel():
    h = tree_hierarchy([3, 2, 2])
    rng = np.random.default_rng(0)
    ds = [LabeledExample(f"e{k}", h.leaves[int(j)]) for k, j in enumerate(rng.integers(0, 12, 1001))]
    for f in (0.0, 0.1, 0.25, 0.5, 0.9):
        out = relabel_parents(h, ds, f, seed=3)
        assert sum(a.label != b.label for a, b in zip(ds, out)) == math.floor(f * len(ds) + 0.5)
    out = relabel_parents(h, ds, 1.0, seed=3)
    assert all(b.label == h.parents(a.label)[0] for a, b in zip(ds, out))


@pytest.mark.acceptance(8, "baselines identical without imprecision")
def test_ac08_baseline_equivalence():
    h = tree_hierarchy([2, 2])
    rng = np.random.default_rng(8)
    ds = [LabeledExample(f"e{k}", h.leaves[int(j)], tuple(rng.normal(size=4)))
          for k, j in enumerate(rng.integers(0, 4, 200))]
    assert preprocess(h, ds, "leaves_only", 0) == preprocess(h, ds, "random_leaf", 0)
    hp = HyperParams(SgdrSchedule(lr_max=0.5, lr_min=1e-3, t0=100, total_steps=300), seed=6)
    a, b = train(h, ds, "leaves_only", hp), train(h, ds, "random_leaf", hp)
    assert all(p.tobytes() == q.tobytes() for p, q in zip(a.params(), b.params()))


def _mean_top1(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return {r[0]: float(r[2].split("±")[0]) for r in rows if r[1] == "mean±std"}


@pytest.mark.acceptance(9, "direction of the accuracy comparison at desk scale")
def test_ac09_desk_scale_direction(tmp_path):
    start = time.perf_counter()
    noisy = _mean_top1(run_experiment(ExperimentConfig(model="poisson", lam=1.0, out=str(tmp_path / "p"))))
    clean = _mean_top1(run_experiment(ExperimentConfig(model="benchmark", out=str(tmp_path / "b"))))
    print(f"poisson lambda=1 mean top1: {noisy}")
    print(f"benchmark mean top1: {clean}")
    assert noisy["chillax"] - noisy["leaves_only"] >= 0.05
    assert noisy["chillax"] > noisy["random_leaf"]
    assert noisy["leaves_only"] > noisy["random_leaf"]
    assert abs(clean["leaves_only"] - clean["chillax"]) <= 0.03
    assert time.perf_counter() - start < 60.0


@pytest.mark.acceptance(10, "LCA metric recount and higher-is-better direction")
def test_ac10_lca_recount():
    rng = np.random.default_rng(10)
    h = random_dag(rng, 16)
    n_leaves = len(h.leaves)
    truth = rng.integers(0, n_leaves, 1000)
    ranking = np.array([rng.permutation(n_leaves) for _ in range(1000)])
    report = report_from_rankings(h, truth, ranking)
    acc, mean, n_wrong = _recount(h, truth, ranking, 1)
    assert report.n_mispredicted == n_wrong and report.top1 == acc
    assert report.mean_mispred_lca_depth == pytest.approx(mean, abs=1e-12)

    tree = tree_hierarchy([2, 2, 2])
    leaves = list(tree.leaves)
    for t, leaf in enumerate(leaves):
        for j, other in enumerate(leaves):
            if j == t:
                continue
            order = [j] + [i for i in range(len(leaves)) if i != j]
            got = report_from_rankings(tree, [t], np.array([order])).mean_mispred_lca_depth
            sibling = tree.parents(other) == tree.parents(leaf)
            assert got == (2 if sibling else tree.lca_depth(leaf, other))
            assert not sibling or got >= max(tree.lca_depth(leaf, o) for o in leaves if o != leaf)


@pytest.mark.acceptance(11, "SGDR schedule values and the NABirds preset")
def test_ac11_sgdr():
    s = SgdrSchedule(lr_max=0.003, lr_min=1e-6, t0=80, total_steps=400, warmup_steps=8, warmup_lr=0.01)
    assert sgdr_lr(s, 7) == 0.01
    assert sgdr_lr(s, 8) == 0.003
    quarter = 1e-6 + 0.5 * (0.003 - 1e-6) * (1 + math.cos(math.pi / 4))
    assert sgdr_lr(s, 8 + 20) == pytest.approx(quarter, abs=1e-12)
    # the 0.854 coefficient is (1 + cos(pi/4)) / 2 to three decimals
    assert round((quarter - 1e-6) / (0.003 - 1e-6), 3) == 0.854
    assert sgdr_lr(s, 8 + 80) == sgdr_lr(s, 8)
    preset = SgdrSchedule.from_epochs(100, **PRESETS["nabirds"])
    assert (preset.lr_max, preset.lr_min) == (0.003, 1e-6)
    cfg = ExperimentConfig(lr_max=0.003, lr_min=1e-6, t0=80, steps=80)
    assert (cfg.hyperparams(0).schedule.lr_max, cfg.hyperparams(0).schedule.lr_min) == (0.003, 1e-6)


@pytest.mark.acceptance(12, "byte-identical experiment outputs")
def test_ac12_determinism(tmp_path):
    kw = dict(model="poisson", lam=1.0, inaccuracy=0.05, steps=300, t0=300,
              synthetic={"branching": [2, 2, 2], "per_leaf": 50, "val_per_leaf": 50})
    a = run_experiment(ExperimentConfig(out=str(tmp_path / "a"), **kw))
    b = run_experiment(ExperimentConfig(out=str(tmp_path / "b"), **kw))
    assert a.read_bytes() == b.read_bytes()
    cells = sorted(p.name for p in (tmp_path / "a" / "cells").iterdir())
    assert len(cells) == 9
    for name in cells:
        assert (tmp_path / "a" / "cells" / name).read_bytes() == (tmp_path / "b" / "cells" / name).read_bytes()
