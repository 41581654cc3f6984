"""Trainer CLI: `tinyranker train` runs the three-stage curriculum over
masked shards; `tinyranker eval` scores a checkpoint against a labeled
corpus and prints the ordering report as JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .evaluate import eval_ordering, model_score_fn, read_corpus, read_truth
from .model import ModelConfig
from .text import Vocab
from .train import TrainConfig, load_checkpoint, save_checkpoint, train_curriculum


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tinyranker")
    subparsers = parser.add_subparsers(dest="command", required=True)

    sub = subparsers.add_parser("train", help="run the hp -> shp -> mrds curriculum")
    sub.add_argument("--shards", required=True, help="directory with masked <stage>.jsonl files")
    sub.add_argument("--vocab", required=True, help="vocabulary file")
    sub.add_argument("--out", required=True, help="output directory for checkpoint + report")
    sub.add_argument("--layers", type=int, default=2)
    sub.add_argument("--hidden", type=int, default=64)
    sub.add_argument("--heads", type=int, default=4)
    sub.add_argument("--max-len", type=int, default=128)
    sub.add_argument("--mlm-weight", type=float, default=1.0)
    sub.add_argument("--lr", type=float, default=1e-3)
    sub.add_argument("--weight-decay", type=float, default=0.01)
    sub.add_argument("--warmup-ratio", type=float, default=0.0)
    sub.add_argument("--grad-clip", type=float, default=0.0)
    sub.add_argument("--stage-repeats", type=int, default=6,
                     help="desk multiplier over the 1:1:2 stage schedule (1 = literal)")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--holdout-mod", type=int, default=5,
                     help="hold out query docs with id %% mod == 0 (0 disables)")
    sub.add_argument("--allow-missing-stages", action="store_true")

    sub = subparsers.add_parser("eval", help="ordering evaluation of a checkpoint")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--vocab", required=True)
    sub.add_argument("--corpus", required=True, help="canonical corpus JSONL")
    sub.add_argument("--truth", required=True, help="ground-truth relation TSV")
    sub.add_argument("--holdout-mod", type=int, default=0,
                     help="evaluate only query docs with id %% mod == 0")
    return parser


def _cmd_train(args) -> int:
    vocab = Vocab.load(args.vocab)
    model_cfg = ModelConfig(
        layers=args.layers,
        hidden=args.hidden,
        heads=args.heads,
        vocab_size=len(vocab),
        max_len=args.max_len,
        mlm_weight=args.mlm_weight,
    )
    train_cfg = TrainConfig(
        learning_rate=args.lr,
        weight_decay=args.weight_decay,
        warmup_ratio=args.warmup_ratio,
        grad_clip=args.grad_clip,
        stage_repeats=args.stage_repeats,
        seed=args.seed,
        holdout_mod=args.holdout_mod,
        allow_missing_stages=args.allow_missing_stages,
    )
    started = time.monotonic()
    state, report = train_curriculum(args.shards, vocab, model_cfg, train_cfg)
    path = save_checkpoint(state, report, args.out)
    print(
        f"trained {state.step} steps in {time.monotonic() - started:.1f}s; "
        f"checkpoint at {path}",
        file=sys.stderr,
    )
    return 0


def _cmd_eval(args) -> int:
    vocab = Vocab.load(args.vocab)
    state = load_checkpoint(args.checkpoint, vocab)
    corpus = read_corpus(args.corpus)
    truth = read_truth(args.truth)
    query_filter = None
    if args.holdout_mod:
        mod = args.holdout_mod
        query_filter = lambda doc_id: doc_id % mod == 0  # noqa: E731
    report = eval_ordering(model_score_fn(state, vocab), corpus, truth, query_filter)
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "train":
        return _cmd_train(args)
    return _cmd_eval(args)


if __name__ == "__main__":
    sys.exit(main())
