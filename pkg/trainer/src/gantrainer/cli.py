"""Trainer CLI: train a model on a dataset container, sample a test set."""

from __future__ import annotations

import argparse
import json
import sys

from .container import ContainerError
from .data import Scaling, TrainingData
from .models import ARCHS
from .training import (
    TrainConfig,
    load_checkpoint,
    sample_to_container,
    train,
)


def _cmd_train(args) -> int:
    config = TrainConfig(
        arch=args.arch,
        epochs=args.epochs,
        batch_size=args.batch_size,
        penalty_weight=args.penalty_weight,
        learning_rate=args.learning_rate,
        update_ratio=args.update_ratio,
        seed=args.seed,
        checkpoint_every=args.checkpoint_every,
        out_dir=args.out,
    )
    result = train(config, args.data)
    print(json.dumps({"checkpoint": result.checkpoint_path,
                      "steps": len(result.losses)}))
    return 0


def _cmd_sample(args) -> int:
    pair, state = load_checkpoint(args.checkpoint)
    data = TrainingData(
        tensors=None,
        scaling=Scaling.from_dict(state["scaling"]),
        header=state["header"],
        arch=state["arch"],
    )
    header = sample_to_container(pair, data, args.count, args.out, seed=args.seed)
    print(json.dumps({"written": args.out, "count": header["count"]}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gantrainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model on a dataset container")
    p.add_argument("--data", required=True, help="dataset container path")
    p.add_argument("--arch", choices=ARCHS, required=True)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--penalty-weight", type=float, default=10.0)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--update-ratio", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("sample", help="write a generated test set container")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--count", type=int, default=16384)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ContainerError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
