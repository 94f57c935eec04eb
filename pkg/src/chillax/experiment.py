"""End-to-end runs: degrade, train, evaluate over several seeds."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import statistics
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import noise
from .data import LabeledExample, format_examples, read_examples
from .evaluation import EvalReport, evaluate, report_rows
from .errors import InvalidParameters
from .hierarchy import Hierarchy, read_hierarchy
from .synthetic import gaussian_clusters, tree_hierarchy
from .textdepth import TextRecord, depth_histogram, write_histogram
from .training import HyperParams, SgdrSchedule, train

log = logging.getLogger(__name__)

DEFAULT_SYNTHETIC = {
    "branching": [2, 2, 2],
    "per_leaf": 200,
    "val_per_leaf": 1000,
    "margin": 2.0,
    "sigma": 1.0,
    "noise_dims": 0,
    "data_seed": 0,
}


@dataclass
class ExperimentConfig:
    """Everything one experiment needs.

    Without ``hierarchy``/``train``/``val`` paths the built-in Gaussian
    cluster generator supplies the data, configured by ``synthetic``.
    """

    hierarchy: Optional[str] = None
    train: Optional[str] = None
    val: Optional[str] = None
    methods: list = field(default_factory=lambda: ["chillax", "leaves_only", "random_leaf"])
    model: str = "benchmark"
    q: float = 1.0
    lam: float = 1.0
    fraction: float = 0.0
    shift: int = 0
    inaccuracy: float = 0.0
    lr_max: float = 0.5
    lr_min: float = 5e-4
    t0: int = 2000
    warmup_steps: int = 0
    warmup_lr: float = 0.0
    steps: int = 2000
    batch_size: int = 32
    hidden_size: int = 0
    momentum: float = 0.0
    weight_decay: float = 0.0
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    ks: list = field(default_factory=lambda: [1, 5])
    synthetic: dict = field(default_factory=lambda: dict(DEFAULT_SYNTHETIC))
    out: str = "results"

    def __post_init__(self):
        if not self.seeds:
            raise InvalidParameters("at least one seed is required")
        self.methods = [m.replace("-", "_") for m in self.methods]
        self.synthetic = {**DEFAULT_SYNTHETIC, **(self.synthetic or {})}
        unknown = set(self.synthetic) - set(DEFAULT_SYNTHETIC)
        if unknown:
            raise InvalidParameters(f"unknown synthetic settings {sorted(unknown)}")
        self.depth_model()
        self.hyperparams(0)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidParameters(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        d = json.loads(Path(path).read_text(encoding="utf-8")) if path else {}
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    def depth_model(self) -> noise.DepthModel:
        if self.model == "geometric":
            return noise.DepthModel.geometric(self.q, self.shift)
        if self.model == "poisson":
            return noise.DepthModel.poisson(self.lam, self.shift)
        if self.model == "relabel":
            return noise.DepthModel.relabel(self.fraction)
        return noise.DepthModel(self.model)

    def hyperparams(self, seed: int) -> HyperParams:
        schedule = SgdrSchedule(lr_max=self.lr_max, lr_min=self.lr_min, t0=self.t0,
                                total_steps=self.steps, warmup_steps=self.warmup_steps,
                                warmup_lr=self.warmup_lr)
        return HyperParams(schedule=schedule, batch_size=self.batch_size,
                           hidden_size=self.hidden_size, momentum=self.momentum,
                           weight_decay=self.weight_decay, seed=seed)


def load_data(cfg: ExperimentConfig) -> tuple[Hierarchy, list[LabeledExample], list[LabeledExample]]:
    if cfg.hierarchy is None:
        s = cfg.synthetic
        h = tree_hierarchy(s["branching"])
        kw = dict(margin=s["margin"], sigma=s["sigma"], noise_dims=s["noise_dims"])
        tr = gaussian_clusters(h, s["per_leaf"], seed=s["data_seed"], prefix="train/", **kw)
        va = gaussian_clusters(h, s["val_per_leaf"], seed=s["data_seed"] + 1, prefix="val/", **kw)
        return h, tr, va
    if cfg.train is None or cfg.val is None:
        raise InvalidParameters("a hierarchy file needs both train and val datasets")
    return read_hierarchy(cfg.hierarchy), read_examples(cfg.train), read_examples(cfg.val)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def label_depth_counts(h: Hierarchy, dataset) -> np.ndarray:
    counts = np.zeros(h.max_depth + 1, dtype=np.int64)
    for ex in dataset:
        counts[h.depth(ex.label)] += 1
    return counts


def run_degrade(h: Hierarchy, dataset: Sequence[LabeledExample], model: noise.DepthModel,
                inaccuracy: float, seed: int, out) -> dict:
    """Write the degraded JSON-Lines file plus ``*_depths.csv`` and ``*_manifest.json`` beside it.

    Returns the manifest.
    """
    out = Path(out)
    confused = noise.inject_inaccuracy(h, dataset, inaccuracy, seed) if inaccuracy > 0 else list(dataset)
    n_confused = sum(a.label != b.label for a, b in zip(dataset, confused))
    degraded = noise.apply_imprecision(h, confused, model, seed)

    _atomic_write(out, format_examples(degraded))
    counts = label_depth_counts(h, degraded)
    stem = out.with_suffix("")
    _atomic_write(Path(f"{stem}_depths.csv"),
                  _csv_text([["depth", "count"], *([d, int(c)] for d, c in enumerate(counts))]))
    manifest = {
        "model": asdict(model),
        "seed": seed,
        "inaccuracy": inaccuracy,
        "n_examples": len(dataset),
        "n_confused": n_confused,
        "n_imprecise": sum(not h.is_leaf(ex.label) for ex in degraded),
        "n_changed": sum(a.label != b.label for a, b in zip(dataset, degraded)),
    }
    _atomic_write(Path(f"{stem}_manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.4f}"


def _metrics(report: EvalReport, ks: Sequence[int]) -> list[float]:
    return [report.topk[k] for k in ks] + [report.mean_mispred_lca_depth]


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Train and evaluate every (method, seed) cell; write ``results.csv`` under ``cfg.out``.

    Each seed drives both the degradation and the training of all methods,
    so methods are compared on identical degraded data. After the per-seed
    rows, one row per method holds ``mean±std`` (sample standard deviation).
    """
    h, train_set, val_set = load_data(cfg)
    n_leaves = len(h.leaf_idx)
    ks = sorted({k for k in set(cfg.ks) | {1} if k <= n_leaves})
    dropped = sorted(set(cfg.ks) - set(ks))
    if dropped:
        log.warning("dropping k=%s: hierarchy has only %d leaves", dropped, n_leaves)

    out_dir = Path(cfg.out)
    cells_dir = out_dir / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write(out_dir / "config.json", json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")

    model = cfg.depth_model()
    results: dict[str, list[list[float]]] = {m: [] for m in cfg.methods}
    for seed in cfg.seeds:
        degraded = noise.degrade_dataset(h, train_set, model, cfg.inaccuracy, seed)
        for method in cfg.methods:
            head = train(h, degraded, method, cfg.hyperparams(seed))
            report = evaluate(h, head, val_set, ks)
            _atomic_write(cells_dir / f"{method}_seed{seed}.csv",
                          _csv_text([["metric", "value"], *report_rows(report)]))
            results[method].append(_metrics(report, ks))
            log.info("%s seed %s: top1 %.4f", method, seed, report.top1)

    header = ["method", "seed", *(f"top{k}" for k in ks), "mean_mispred_lca_depth"]
    rows = [header]
    for method in cfg.methods:
        for seed, vals in zip(cfg.seeds, results[method]):
            rows.append([method, str(seed), *map(_fmt, vals)])
    for method in cfg.methods:
        agg = []
        for col in zip(*results[method]):
            mean = statistics.fmean(col)
            std = statistics.stdev(col) if len(col) > 1 else math.nan
            agg.append(f"{_fmt(mean)}±{_fmt(std)}")
        rows.append([method, "mean±std", *agg])
    path = out_dir / "results.csv"
    _atomic_write(path, _csv_text(rows))
    return path


def run_textdepth(h: Hierarchy, lexicon, records: Sequence[TextRecord], out_dir,
                  fields_: Sequence[str]) -> list[Path]:
    """One ``textdepth_<field>.csv`` per requested field."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    hist = depth_histogram(h, lexicon, records)
    paths = []
    for name in fields_:
        path = out_dir / f"textdepth_{name}.csv"
        write_histogram(path, name, hist.get(name))
        paths.append(path)
    return paths
