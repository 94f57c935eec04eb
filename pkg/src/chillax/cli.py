"""Command-line entry point: ``chillax <subcommand> ...``.

Failures print a single JSON line ``{"error": ..., "message": ...}`` to
stderr and exit with a nonzero status.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiment, noise
from .data import read_examples, write_examples
from .errors import ChillaxError
from .evaluation import emit_report, evaluate
from .hierarchy import load_hierarchy, read_hierarchy
from .synthetic import gaussian_clusters, tree_edges
from .textdepth import read_lexicon, read_records
from .training import PRESETS, HyperParams, SgdrSchedule, load_model, save_model, sgdr_lr, train


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("UsageError", message, status=2)


def _fail(kind: str, message: str, status: int = 1):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    sys.exit(status)


def _method(value: str) -> str:
    return value.replace("-", "_")


def _ints(value: str) -> list[int]:
    return [int(v) for v in value.split(",") if v.strip()]


def _add_noise_args(p):
    p.add_argument("--model", choices=noise.KINDS)
    p.add_argument("--q", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--fraction", type=float)
    p.add_argument("--shift", type=int)
    p.add_argument("--inaccuracy", type=float)


def _add_train_args(p):
    p.add_argument("--lr-max", type=float)
    p.add_argument("--lr-min", type=float)
    p.add_argument("--t0", type=int)
    p.add_argument("--warmup-steps", type=int)
    p.add_argument("--warmup-lr", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--hidden-size", type=int)
    p.add_argument("--momentum", type=float)
    p.add_argument("--weight-decay", type=float)


_TRAIN_KEYS = ("lr_max", "lr_min", "t0", "warmup_steps", "warmup_lr", "steps", "batch_size",
               "hidden_size", "momentum", "weight_decay")
_NOISE_KEYS = ("model", "q", "lam", "fraction", "shift", "inaccuracy")


def _config(args, keys, **extra) -> experiment.ExperimentConfig:
    overrides = {k: getattr(args, k) for k in keys}
    overrides.update(extra)
    return experiment.ExperimentConfig.load(getattr(args, "config", None), **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chillax", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic hierarchy and Gaussian-cluster datasets")
    p.add_argument("--branching", type=_ints, default=[2, 2, 2])
    p.add_argument("--per-leaf", type=int, default=200)
    p.add_argument("--val-per-leaf", type=int, default=1000)
    p.add_argument("--margin", type=float, default=2.0)
    p.add_argument("--noise-dims", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("degrade", help="apply inaccuracy and imprecision to a leaf-labeled dataset")
    p.add_argument("--config")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--train", required=True)
    _add_noise_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="degraded JSON-Lines file")

    p = sub.add_parser("train", help="train a head and save a checkpoint")
    p.add_argument("--config")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--method", type=_method, default="chillax",
                   choices=["chillax", "leaves_only", "random_leaf"])
    _add_train_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint path (JSON)")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a leaf-labeled set")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--ks", type=_ints, default=[1])
    p.add_argument("--out", required=True, help="report CSV")

    p = sub.add_parser("experiment", help="degrade, train and evaluate over methods and seeds")
    p.add_argument("--config")
    p.add_argument("--hierarchy")
    p.add_argument("--train")
    p.add_argument("--val")
    p.add_argument("--methods", type=lambda v: [_method(m) for m in v.split(",")])
    _add_noise_args(p)
    _add_train_args(p)
    p.add_argument("--seeds", type=_ints)
    p.add_argument("--ks", type=_ints)
    p.add_argument("--out")

    p = sub.add_parser("textdepth", help="depth histograms of text metadata")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--fields", type=lambda v: v.split(","), default=["title", "description", "tags"])
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("schedule-dump", help="print the learning rate for every step as CSV")
    p.add_argument("--config")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--steps-per-epoch", type=int, default=1)
    _add_train_args(p)
    p.add_argument("--out")
    return parser


def _cmd_synth(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    edges = tree_edges(args.branching)
    (out / "hierarchy.tsv").write_text(edges, encoding="utf-8")
    h = load_hierarchy(edges)
    kw = dict(margin=args.margin, noise_dims=args.noise_dims)
    write_examples(out / "train.jsonl", gaussian_clusters(h, args.per_leaf, seed=args.seed, prefix="train/", **kw))
    write_examples(out / "val.jsonl", gaussian_clusters(h, args.val_per_leaf, seed=args.seed + 1, prefix="val/", **kw))


def _cmd_degrade(args):
    cfg = _config(args, _NOISE_KEYS)
    h = read_hierarchy(args.hierarchy)
    manifest = experiment.run_degrade(h, read_examples(args.train), cfg.depth_model(),
                                      cfg.inaccuracy, args.seed, args.out)
    print(json.dumps(manifest, sort_keys=True))


def _cmd_train(args):
    cfg = _config(args, _TRAIN_KEYS)
    h = read_hierarchy(args.hierarchy)
    model = train(h, read_examples(args.train), args.method, cfg.hyperparams(args.seed))
    save_model(model, args.out)


def _cmd_eval(args):
    h = read_hierarchy(args.hierarchy)
    model = load_model(args.checkpoint, h)
    report = evaluate(h, model, read_examples(args.val), args.ks)
    emit_report(report, args.out)


def _cmd_experiment(args):
    cfg = _config(args, _NOISE_KEYS + _TRAIN_KEYS + ("hierarchy", "train", "val", "methods",
                                                     "seeds", "ks", "out"))
    print(experiment.run_experiment(cfg))


def _cmd_textdepth(args):
    h = read_hierarchy(args.hierarchy)
    paths = experiment.run_textdepth(h, read_lexicon(args.lexicon, h), read_records(args.records),
                                     args.out, args.fields)
    for p in paths:
        print(p)


def _cmd_schedule_dump(args):
    if args.preset:
        sched = SgdrSchedule.from_epochs(args.steps_per_epoch, **PRESETS[args.preset])
        overrides = {k: getattr(args, k) for k in _TRAIN_KEYS if getattr(args, k) is not None}
        if overrides:
            _fail("UsageError", "--preset cannot be combined with schedule flags", status=2)
    else:
        sched = _config(args, _TRAIN_KEYS).hyperparams(0).schedule
    lines = ["step,lr"] + [f"{t},{sgdr_lr(sched, t)!r}" for t in range(sched.total_steps)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


_COMMANDS = {
    "synth": _cmd_synth,
    "degrade": _cmd_degrade,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "experiment": _cmd_experiment,
    "textdepth": _cmd_textdepth,
    "schedule-dump": _cmd_schedule_dump,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _COMMANDS[args.command](args)
    except ChillaxError as err:
        _fail(type(err).__name__, str(err))
    except OSError as err:
        _fail("IoError", str(err))
    except json.JSONDecodeError as err:
        _fail("FormatError", str(err))
    return 0


if __name__ == "__main__":
    sys.exit(main())
