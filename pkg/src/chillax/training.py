"""Training of the hierarchical sigmoid head and the softmax baselines.

The trainer works on fixed feature vectors. ``chillax`` attaches one sigmoid
predictor to every hierarchy node and minimizes binary cross-entropy under a
loss mask. The baselines fit a softmax over the leaves after turning the
imprecise examples into precise ones: ``leaves_only`` drops them,
``random_leaf`` replaces each by a random leaf below its label.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np
from scipy.special import expit, log_softmax, softmax

from . import _random
from .data import LabeledExample, check_ids, check_labels, feature_matrix
from .encoding import MaskedTarget, MaskKind, target_tables
from .errors import (
    DimensionMismatch,
    EmptyDataset,
    FormatError,
    InvalidParameters,
    LengthMismatch,
    StepOutOfRange,
)
from .hierarchy import Hierarchy

log = logging.getLogger(__name__)

METHODS = ("chillax", "leaves_only", "random_leaf")
EPS = 1e-7

_RANDOM_LEAF = 7


@dataclass(frozen=True)
class SgdrSchedule:
    """Cosine annealing with warm restarts after a constant-rate warmup."""

    lr_max: float
    lr_min: float
    t0: int
    total_steps: int
    warmup_steps: int = 0
    warmup_lr: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.lr_min <= self.lr_max):
            raise InvalidParameters(f"need 0 <= lr_min <= lr_max, got {self.lr_min}, {self.lr_max}")
        if self.t0 < 1:
            raise InvalidParameters(f"t0 must be at least 1, got {self.t0}")
        if self.total_steps < 1 or self.warmup_steps < 0:
            raise InvalidParameters("total_steps must be positive and warmup_steps non-negative")
        if self.warmup_lr < 0.0:
            raise InvalidParameters("warmup_lr must be non-negative")

    @classmethod
    def from_epochs(cls, steps_per_epoch: int, *, lr_max: float, lr_min: float, t0_epochs: int,
                    warmup_epochs: int, warmup_lr: float, duration_epochs: int) -> "SgdrSchedule":
        """Schedule given in epochs; the training duration starts after warmup."""
        return cls(
            lr_max=lr_max,
            lr_min=lr_min,
            t0=t0_epochs * steps_per_epoch,
            warmup_steps=warmup_epochs * steps_per_epoch,
            warmup_lr=warmup_lr,
            total_steps=(warmup_epochs + duration_epochs) * steps_per_epoch,
        )


# Published settings for the two image benchmarks, in epochs.
PRESETS = {
    "nabirds": dict(lr_max=0.003, lr_min=1e-6, t0_epochs=80, warmup_epochs=1,
                    warmup_lr=0.01, duration_epochs=80),
    "ilsvrc2012": dict(lr_max=0.2, lr_min=1e-5, t0_epochs=10, warmup_epochs=5,
                       warmup_lr=0.05, duration_epochs=20),
}


def sgdr_lr(s: SgdrSchedule, step: int) -> float:
    if not 0 <= step < s.total_steps:
        raise StepOutOfRange(f"step {step} outside 0..{s.total_steps - 1}")
    if step < s.warmup_steps:
        return s.warmup_lr
    t = (step - s.warmup_steps) % s.t0
    return s.lr_min + 0.5 * (s.lr_max - s.lr_min) * (1.0 + math.cos(math.pi * t / s.t0))


def _check_lengths(probs, target: MaskedTarget) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != np.shape(target.targets) or probs.shape != np.shape(target.mask):
        raise LengthMismatch(
            f"probs {probs.shape}, targets {np.shape(target.targets)}, mask {np.shape(target.mask)}"
        )
    return probs


def masked_bce_loss(probs, target: MaskedTarget) -> float:
    p = np.clip(_check_lengths(probs, target), EPS, 1.0 - EPS)
    e = np.asarray(target.targets, dtype=np.float64)
    m = np.asarray(target.mask, dtype=np.float64)
    return float(-np.sum(m * (e * np.log(p) + (1.0 - e) * np.log1p(-p))))


def masked_bce_grad(probs, target: MaskedTarget) -> np.ndarray:
    """Gradient of the masked loss with respect to the logits behind ``probs``."""
    p = _check_lengths(probs, target)
    e = np.asarray(target.targets, dtype=np.float64)
    m = np.asarray(target.mask, dtype=np.float64)
    return m * (p - e)


@dataclass
class HeadModel:
    """Output layer over fixed features, with an optional tanh hidden layer.

    ``outputs`` names the node behind each output row: every hierarchy node
    for ``kind="chillax"``, the leaves for ``kind="softmax"``.
    """

    kind: Literal["chillax", "softmax"]
    outputs: tuple
    weights: np.ndarray
    bias: np.ndarray
    hidden_weights: Optional[np.ndarray] = None
    hidden_bias: Optional[np.ndarray] = None
    fingerprint: str = ""

    @property
    def feature_dim(self) -> int:
        w = self.hidden_weights if self.hidden_weights is not None else self.weights
        return w.shape[1]

    @property
    def hidden_size(self) -> int:
        return 0 if self.hidden_weights is None else self.hidden_weights.shape[0]

    def params(self) -> list[np.ndarray]:
        ps = [self.weights, self.bias]
        if self.hidden_weights is not None:
            ps += [self.hidden_weights, self.hidden_bias]
        return ps

    def _hidden(self, x: np.ndarray) -> np.ndarray:
        if self.hidden_weights is None:
            return x
        return np.tanh(x @ self.hidden_weights.T + self.hidden_bias)

    def logits(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if x.shape[-1] != self.feature_dim:
            raise DimensionMismatch(f"model expects {self.feature_dim} features, got {x.shape[-1]}")
        return self._hidden(x) @ self.weights.T + self.bias


def score(model: HeadModel, features) -> np.ndarray:
    """Conditional node scores (chillax) or a leaf distribution (softmax)."""
    z = model.logits(features)
    if model.kind == "chillax":
        return expit(z)
    return softmax(z, axis=-1)


def init_model(h: Hierarchy, kind: str, feature_dim: int, hidden_size: int,
               rng: np.random.Generator) -> HeadModel:
    outputs = h.nodes if kind == "chillax" else h.leaves
    fan_in = hidden_size or feature_dim
    hw = hb = None
    if hidden_size:
        bound = 1.0 / math.sqrt(feature_dim)
        hw = rng.uniform(-bound, bound, size=(hidden_size, feature_dim))
        hb = np.zeros(hidden_size)
    bound = 1.0 / math.sqrt(fan_in)
    w = rng.uniform(-bound, bound, size=(len(outputs), fan_in))
    return HeadModel(kind=kind, outputs=tuple(outputs), weights=w, bias=np.zeros(len(outputs)),
                     hidden_weights=hw, hidden_bias=hb, fingerprint=h.fingerprint)


def loss_and_grads(model: HeadModel, x: np.ndarray, targets: np.ndarray,
                   mask: Optional[np.ndarray] = None) -> tuple[float, list[np.ndarray]]:
    """Batch-mean loss and parameter gradients (same order as ``model.params()``).

    For chillax heads ``targets``/``mask`` are per-node 0/1 rows; for softmax
    heads ``targets`` holds one-hot leaf rows and ``mask`` is unused.
    """
    n = x.shape[0]
    hid = model._hidden(x)
    z = hid @ model.weights.T + model.bias
    if model.kind == "chillax":
        p = expit(z)
        pc = np.clip(p, EPS, 1.0 - EPS)
        loss = -np.sum(mask * (targets * np.log(pc) + (1.0 - targets) * np.log1p(-pc))) / n
        delta = mask * (p - targets) / n
    else:
        loss = -np.sum(targets * log_softmax(z, axis=1)) / n
        delta = (softmax(z, axis=1) - targets) / n
    grads = [delta.T @ hid, delta.sum(axis=0)]
    if model.hidden_weights is not None:
        dh = (delta @ model.weights) * (1.0 - hid * hid)
        grads += [dh.T @ x, dh.sum(axis=0)]
    return float(loss), grads


@dataclass(frozen=True)
class HyperParams:
    schedule: SgdrSchedule
    batch_size: int = 32
    hidden_size: int = 0
    momentum: float = 0.0
    weight_decay: float = 0.0
    seed: int = 0
    mask: MaskKind = "chillax"

    def __post_init__(self):
        if self.batch_size < 1 or self.hidden_size < 0:
            raise InvalidParameters("batch_size must be positive and hidden_size non-negative")


def preprocess(h: Hierarchy, dataset: Sequence[LabeledExample], method: str,
               seed: int) -> list[LabeledExample]:
    """Dataset as seen by ``method``; only the baselines change it."""
    if method not in METHODS:
        raise InvalidParameters(f"unknown method {method!r}; expected one of {METHODS}")
    check_labels(h, dataset)
    if method == "chillax":
        return list(dataset)
    if method == "leaves_only":
        return [ex for ex in dataset if h.is_leaf(ex.label)]
    check_ids(dataset)
    keys = _random.example_keys([ex.id for ex in dataset], seed)
    u = _random.uniforms(keys, _RANDOM_LEAF)
    out = []
    for j, ex in enumerate(dataset):
        if not h.is_leaf(ex.label):
            cands = sorted(h.leaf_descendants_idx(h.index(ex.label)))
            pick = cands[min(int(u[j] * len(cands)), len(cands) - 1)]
            ex = ex.relabel(h.nodes[pick])
        out.append(ex)
    return out


def train(h: Hierarchy, dataset: Sequence[LabeledExample], method: str,
          hp: HyperParams) -> HeadModel:
    """Mini-batch SGD for ``hp.schedule.total_steps`` steps; deterministic in ``hp.seed``."""
    data = preprocess(h, dataset, method, hp.seed)
    if not data:
        raise EmptyDataset(f"no training examples left for method {method!r}")
    x = feature_matrix(data)
    labels = np.array([h.index(ex.label) for ex in data])

    kind = "chillax" if method == "chillax" else "softmax"
    init_seq, batch_seq = np.random.SeedSequence(hp.seed).spawn(2)
    model = init_model(h, kind, x.shape[1], hp.hidden_size, np.random.default_rng(init_seq))
    batch_rng = np.random.default_rng(batch_seq)

    if kind == "chillax":
        enc_table, mask_table = target_tables(h, hp.mask)
        targets, mask = enc_table[labels], mask_table[labels]
    else:
        leaf_pos = {node: j for j, node in enumerate(h.leaf_idx)}
        targets = np.zeros((len(data), len(h.leaf_idx)))
        targets[np.arange(len(data)), [leaf_pos[i] for i in labels]] = 1.0
        mask = None

    params = model.params()
    velocity = [np.zeros_like(p) for p in params]
    bs = min(hp.batch_size, len(data))
    order = batch_rng.permutation(len(data))
    pos = 0
    for step in range(hp.schedule.total_steps):
        if pos + bs > len(data):
            order = batch_rng.permutation(len(data))
            pos = 0
        idx = order[pos:pos + bs]
        pos += bs
        loss, grads = loss_and_grads(model, x[idx], targets[idx],
                                     None if mask is None else mask[idx])
        lr = sgdr_lr(hp.schedule, step)
        for p, g, v in zip(params, grads, velocity):
            if hp.weight_decay:
                g = g + hp.weight_decay * p
            if hp.momentum:
                v *= hp.momentum
                v += g
                g = v
            p -= lr * g
        if not np.isfinite(loss):
            raise FloatingPointError(f"loss became {loss} at step {step}")
        if step % 500 == 0:
            log.debug("step %d lr %.3g loss %.4f", step, lr, loss)
    return model


# -- checkpoints -----------------------------------------------------------

FORMAT = "chillax-head"
VERSION = 1


def model_to_dict(model: HeadModel) -> dict:
    d = {
        "format": FORMAT,
        "version": VERSION,
        "kind": model.kind,
        "feature_dim": model.feature_dim,
        "hidden_size": model.hidden_size,
        "hierarchy_fingerprint": model.fingerprint,
        "outputs": list(model.outputs),
        "weights": model.weights.tolist(),
        "bias": model.bias.tolist(),
    }
    if model.hidden_weights is not None:
        d["hidden_weights"] = model.hidden_weights.tolist()
        d["hidden_bias"] = model.hidden_bias.tolist()
    return d


def model_from_dict(d: dict, h: Optional[Hierarchy] = None) -> HeadModel:
    if d.get("format") != FORMAT or d.get("version") != VERSION:
        raise FormatError(f"not a {FORMAT} v{VERSION} checkpoint")
    if h is not None and d["hierarchy_fingerprint"] != h.fingerprint:
        raise FormatError("checkpoint was trained on a different hierarchy")
    hidden = d.get("hidden_weights")
    model = HeadModel(
        kind=d["kind"],
        outputs=tuple(d["outputs"]),
        weights=np.array(d["weights"], dtype=np.float64).reshape(len(d["outputs"]), -1),
        bias=np.array(d["bias"], dtype=np.float64),
        hidden_weights=None if hidden is None else np.array(hidden, dtype=np.float64),
        hidden_bias=None if hidden is None else np.array(d["hidden_bias"], dtype=np.float64),
        fingerprint=d["hierarchy_fingerprint"],
    )
    if model.feature_dim != d["feature_dim"]:
        raise FormatError("feature_dim does not match the stored weights")
    return model


def save_model(model: HeadModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)) + "\n", encoding="utf-8")


def load_model(path, h: Optional[Hierarchy] = None) -> HeadModel:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except ValueError as err:
        raise FormatError(f"{path}: {err}") from None
    return model_from_dict(d, h)
