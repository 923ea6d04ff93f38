"""Desk-scale learning-signal check for the STFT model.

Pipeline: build a 128/small/4-QAM target dataset with the dataset CLI,
train STFT-GAN on its scaled STFT representation, and compare the median-PSD
geodesic distance (generated vs an independent target test set) before and
after training.  The check passes when training improves the distance by at
least 50% over the untrained generator.

All dataset interaction happens through the ``ofdmgen`` CLI and the
container files; run as ``python -m gantrainer.desk_scale --workdir DIR``.
Progress (per-evaluation distances) streams to ``progress.jsonl`` and the
final verdict to ``verdict.json`` in the working directory.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import time
from pathlib import Path

import torch

from .data import load_training_data
from .models import build
from .training import TrainConfig, sample_to_container, train

TRAIN_SPEC = {
    "symbol_len": 128,
    "alloc_class": "small",
    "mod_order": 4,
    "target_evm_db": -25.0,
}


def _run_cli(*args: str) -> str:
    proc = subprocess.run(
        [sys.executable, "-m", "ofdmgen.cli", *args], capture_output=True, text=True
    )
    if proc.returncode != 0:
        raise RuntimeError(f"dataset CLI failed: {proc.stderr.strip()}")
    return proc.stdout


def psd_distance_to_target(pair, data, target_path: Path, workdir: Path,
                           count: int, tag: str, seed: int = 900) -> float:
    """Sample ``count`` waveforms and score them against the target test set."""
    gen_path = workdir / f"gen_{tag}.ofdg"
    sample_to_container(pair, data, count, gen_path, seed=seed)
    report = workdir / f"report_{tag}.json"
    out = _run_cli("evaluate", "--gen", str(gen_path), "--target", str(target_path),
                   "--out", str(report))
    return float(json.loads(out)["psd_distance"])


def run(workdir: Path, epochs: int = 50, train_count: int = 4096,
        test_count: int = 2048, eval_count: int = 2048, eval_every: int = 2,
        seed: int = 0, batch_size: int = 128) -> dict:
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    progress_path = workdir / "progress.jsonl"

    def log(record: dict) -> None:
        record["elapsed_s"] = round(time.time() - t0, 1)
        with open(progress_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")

    t0 = time.time()
    spec = json.dumps(TRAIN_SPEC)
    train_raw = workdir / "train_raw.ofdg"
    train_stft = workdir / "train_stft.ofdg"
    target_test = workdir / "target_test.ofdg"
    if not train_stft.exists():
        _run_cli("generate", "--spec", spec, "--count", str(train_count),
                 "--seed", "501", "--out", str(train_raw))
        _run_cli("transform", "--in", str(train_raw), "--out", str(train_stft),
                 "--to", "stft", "--scaling", "featurewise")
    if not target_test.exists():
        _run_cli("generate", "--spec", spec, "--count", str(test_count),
                 "--seed", "777", "--out", str(target_test))
    log({"event": "datasets-ready"})

    # untrained baseline with the same initialization training will start from
    torch.manual_seed(seed)
    baseline_pair = build("stft_gan", 1)
    baseline_data = load_training_data(train_stft, "stft_gan")
    d_untrained = psd_distance_to_target(
        baseline_pair, baseline_data, target_test, workdir, eval_count, "untrained"
    )
    log({"event": "baseline", "psd_distance": d_untrained})

    def progress(epoch: int, pair, data) -> None:
        if eval_every and (epoch % eval_every == 0 or epoch == epochs):
            d = psd_distance_to_target(
                pair, data, target_test, workdir, min(512, eval_count),
                f"epoch{epoch:04d}",
            )
            log({"event": "epoch", "epoch": epoch, "psd_distance": d,
                 "improvement_pct": round(100 * (1 - d / d_untrained), 1)})

    config = TrainConfig(
        "stft_gan", epochs=epochs, batch_size=batch_size, seed=seed,
        checkpoint_every=max(1, epochs // 10), out_dir=str(workdir / "run"),
    )
    result = train(config, train_stft, progress=progress)
    d_trained = psd_distance_to_target(
        result.pair, result.data, target_test, workdir, eval_count, "trained"
    )
    verdict = {
        "epochs": epochs,
        "train_count": train_count,
        "batch_size": batch_size,
        "psd_distance_untrained": d_untrained,
        "psd_distance_trained": d_trained,
        "improvement_pct": 100 * (1 - d_trained / d_untrained),
        "passed": d_trained <= 0.5 * d_untrained,
        "elapsed_s": round(time.time() - t0, 1),
    }
    log({"event": "verdict", **verdict})
    (workdir / "verdict.json").write_text(json.dumps(verdict, indent=2))
    return verdict


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", required=True)
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--train-count", type=int, default=4096)
    parser.add_argument("--test-count", type=int, default=2048)
    parser.add_argument("--eval-count", type=int, default=2048)
    parser.add_argument("--eval-every", type=int, default=2)
    parser.add_argument("--batch-size", type=int, default=128)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    verdict = run(
        Path(args.workdir), epochs=args.epochs, train_count=args.train_count,
        test_count=args.test_count, eval_count=args.eval_count,
        eval_every=args.eval_every, seed=args.seed, batch_size=args.batch_size,
    )
    print(json.dumps(verdict))
    return 0 if verdict["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
