"""WGAN-GP training loop, checkpoints, and sampling back into containers.

Protocol: Adam at lr 1e-4 with betas (0, 0.9) and a 1:1
discriminator/generator update ratio for the 1-D progressive-kernel model
and the STFT model; the WaveGAN baseline uses betas (0.5, 0.9) and five
discriminator updates per generator update.  Batch size defaults to 128.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from . import data as datamod
from .container import write_container
from .data import TrainingData, load_training_data, samples_to_waveforms
from .losses import DEFAULT_PENALTY_WEIGHT, gradient_penalty
from .models import GanPair, build, latent_batch

ARCH_BETAS = {"psk_gan": (0.0, 0.9), "stft_gan": (0.0, 0.9), "wavegan": (0.5, 0.9)}
ARCH_UPDATE_RATIO = {"psk_gan": 1, "stft_gan": 1, "wavegan": 5}


@dataclass
class TrainConfig:
    arch: str
    epochs: int = 500
    batch_size: int = 128
    penalty_weight: float = DEFAULT_PENALTY_WEIGHT
    learning_rate: float = 1e-4
    update_ratio: int | None = None  # discriminator updates per generator update
    betas: tuple[float, float] | None = None
    seed: int = 0
    checkpoint_every: int = 0  # epochs; 0 = final only
    out_dir: str = "runs"

    def resolved_update_ratio(self) -> int:
        return self.update_ratio if self.update_ratio else ARCH_UPDATE_RATIO[self.arch]

    def resolved_betas(self) -> tuple[float, float]:
        return self.betas if self.betas else ARCH_BETAS[self.arch]

    def to_dict(self) -> dict:
        return {
            "arch": self.arch,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "penalty_weight": self.penalty_weight,
            "learning_rate": self.learning_rate,
            "update_ratio": self.resolved_update_ratio(),
            "betas": list(self.resolved_betas()),
            "seed": self.seed,
        }


@dataclass
class TrainResult:
    pair: GanPair
    config: TrainConfig
    data: TrainingData
    checkpoint_path: str
    losses: list = field(default_factory=list)


def save_checkpoint(path, pair: GanPair, config: TrainConfig, data: TrainingData,
                    epoch: int) -> None:
    torch.save(
        {
            "arch": pair.arch,
            "f": pair.f,
            "epoch": epoch,
            "generator": pair.generator.state_dict(),
            "discriminator": pair.discriminator.state_dict(),
            "config": config.to_dict(),
            "scaling": data.scaling.to_dict(),
            "header": data.header,
        },
        path,
    )


def load_checkpoint(path) -> tuple[GanPair, dict]:
    state = torch.load(path, map_location="cpu", weights_only=False)
    pair = build(state["arch"], state["f"])
    pair.generator.load_state_dict(state["generator"])
    pair.discriminator.load_state_dict(state["discriminator"])
    return pair, state


def train(config: TrainConfig, container_path, progress=None) -> TrainResult:
    """Train one model against a dataset container.

    Emits ``losses.csv`` (one row per discriminator step) and checkpoints
    under ``config.out_dir``; returns the trained pair.  Deterministic for a
    fixed seed up to framework nondeterminism.
    """
    data = load_training_data(container_path, config.arch)
    tensors = torch.from_numpy(np.ascontiguousarray(data.tensors))
    if tensors.shape[0] < config.batch_size:
        raise ValueError("dataset smaller than one batch")

    torch.manual_seed(config.seed)
    rng = torch.Generator().manual_seed(config.seed)
    pair = build(config.arch, data.width_factor)
    expected = tuple(tensors.shape[1:])
    if pair.output_shape != expected:
        raise ValueError(
            f"{config.arch} produces {pair.output_shape}, dataset items are {expected}"
        )

    betas = config.resolved_betas()
    opt_d = torch.optim.Adam(pair.discriminator.parameters(),
                             lr=config.learning_rate, betas=betas)
    opt_g = torch.optim.Adam(pair.generator.parameters(),
                             lr=config.learning_rate, betas=betas)
    n_critic = config.resolved_update_ratio()

    os.makedirs(config.out_dir, exist_ok=True)
    loss_path = os.path.join(config.out_dir, "losses.csv")
    ckpt_path = os.path.join(config.out_dir, "model.pt")
    losses = []
    with open(loss_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "step", "disc_loss", "gen_loss", "penalty"])
        step = 0
        for epoch in range(config.epochs):
            order = torch.randperm(tensors.shape[0], generator=rng)
            n_batches = tensors.shape[0] // config.batch_size
            for b in range(n_batches):
                idx = order[b * config.batch_size: (b + 1) * config.batch_size]
                x_real = tensors[idx]

                with torch.no_grad():
                    x_fake = pair.generator(latent_batch(config.batch_size, rng))
                penalty = gradient_penalty(pair.discriminator, x_real, x_fake, rng)
                disc_loss = (
                    pair.discriminator(x_fake).mean()
                    - pair.discriminator(x_real).mean()
                    + config.penalty_weight * penalty
                )
                opt_d.zero_grad(set_to_none=True)
                disc_loss.backward()
                opt_d.step()

                gen_loss = torch.zeros(())
                if (step + 1) % n_critic == 0:
                    gen_loss = -pair.discriminator(
                        pair.generator(latent_batch(config.batch_size, rng))
                    ).mean()
                    opt_g.zero_grad(set_to_none=True)
                    gen_loss.backward()
                    opt_g.step()

                row = (epoch, step, disc_loss.item(), gen_loss.item(), penalty.item())
                writer.writerow(row)
                losses.append(row)
                step += 1
            fh.flush()
            if config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
                save_checkpoint(
                    os.path.join(config.out_dir, f"model_epoch{epoch + 1:04d}.pt"),
                    pair, config, data, epoch + 1,
                )
            if progress is not None:
                progress(epoch + 1, pair, data)
    save_checkpoint(ckpt_path, pair, config, data, config.epochs)
    return TrainResult(pair, config, data, ckpt_path, losses)


def sample_waveforms(pair: GanPair, data: TrainingData, count: int, seed: int = 1,
                     batch_size: int = 128) -> np.ndarray:
    """Draw ``count`` waveforms from the generator as a complex array."""
    rng = torch.Generator().manual_seed(seed)
    chunks = []
    with torch.no_grad():
        remaining = count
        while remaining > 0:
            n = min(batch_size, remaining)
            out = pair.generator(latent_batch(n, rng)).numpy()
            chunks.append(samples_to_waveforms(out, data))
            remaining -= n
    return np.concatenate(chunks)


def sample_to_container(pair: GanPair, data: TrainingData, count: int, out_path,
                        seed: int = 1) -> dict:
    """Generate a test set and write it as a raw container.

    The header carries the training dataset's spec, so the evaluation
    tooling treats the file like any other waveform set.
    """
    waveforms = sample_waveforms(pair, data, count, seed)
    header = {
        "format_version": 1,
        "representation": "raw",
        "count": count,
        "item_shape": [waveforms.shape[1], 2],
        "seed": seed,
        "spec": data.header["spec"],
        "scaling": None,
        "generator": {"arch": pair.arch, "f": pair.f},
    }
    write_container(out_path, header, datamod.waveforms_to_raw_payload(waveforms))
    return header
