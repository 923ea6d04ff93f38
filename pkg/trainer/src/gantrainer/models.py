"""The three adversarial waveform-model architectures.

All generators map a 100-dimensional latent drawn uniformly from [-1, 1] to a
tanh-bounded output; discriminators mirror the generator layout with
LeakyReLU(0.2) and end in a scalar dense layer.  A width factor ``f`` of
1, 2, or 4 tracks OFDM symbol lengths 128, 256, 512.  No normalization
layers anywhere (gradient-penalty training penalizes per-sample gradients).

* ``psk_gan``:  1-D time-series model, stride-4 layers whose kernel lengths
  scale with depth (4f..128f, integer multiples of the stride to avoid
  checkerboard spectra; the largest kernel equals the OFDM symbol length).
* ``stft_gan``: 2-D model on (2, 128f, 33) time-frequency grids, 4x4 kernels
  with stride 2.
* ``wavegan``:  1-D baseline with length-25 kernels and stride 4.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

LATENT_DIM = 100

VALID_F = (1, 2, 4)

ARCHS = ("psk_gan", "stft_gan", "wavegan")


@dataclass
class GanPair:
    generator: nn.Module
    discriminator: nn.Module
    arch: str
    f: int

    @property
    def output_shape(self) -> tuple:
        return tuple(self.generator.output_shape)


def latent_batch(n: int, generator: torch.Generator | None = None) -> torch.Tensor:
    """n latent vectors, each uniform on [-1, 1]^100."""
    return torch.rand((n, LATENT_DIM), generator=generator) * 2.0 - 1.0


def _check_f(f: int) -> None:
    if f not in VALID_F:
        raise ValueError(f"f must be one of {VALID_F}, got {f}")


class _Conv1dGenerator(nn.Module):
    """Dense -> (n, 1024, f) -> five stride-4 transposed conv layers -> tanh."""

    def __init__(self, f: int, kernels: list[int], output_paddings: list[int]):
        super().__init__()
        self.f = f
        self.dense = nn.Linear(LATENT_DIM, 1024 * f)
        channels = [1024, 512, 256, 128, 64, 2]
        layers = []
        for i, k in enumerate(kernels):
            # length exactly quadruples: (L-1)*4 - 2p + k + op = 4L
            layers.append(
                nn.ConvTranspose1d(
                    channels[i], channels[i + 1], k, stride=4,
                    padding=(k - 4 + output_paddings[i]) // 2,
                    output_padding=output_paddings[i],
                )
            )
        self.convs = nn.ModuleList(layers)
        self.output_shape = (2, 1024 * f)

    def forward(self, z):
        x = torch.relu(self.dense(z).reshape(-1, 1024, self.f))
        for conv in self.convs[:-1]:
            x = torch.relu(conv(x))
        return torch.tanh(self.convs[-1](x))


class _Conv1dDiscriminator(nn.Module):
    """Five stride-4 conv layers mirroring the generator, then dense -> 1."""

    def __init__(self, f: int, kernels: list[int]):
        super().__init__()
        channels = [2, 64, 128, 256, 512, 1024]
        # length exactly quarters: floor((L + 2p - k)/4) + 1 = L/4
        self.convs = nn.ModuleList(
            nn.Conv1d(channels[i], channels[i + 1], k, stride=4, padding=(k - 3) // 2)
            for i, k in enumerate(kernels)
        )
        self.dense = nn.Linear(1024 * f, 1)

    def forward(self, x):
        for conv in self.convs:
            x = torch.nn.functional.leaky_relu(conv(x), 0.2)
        return self.dense(x.flatten(1))


def build_psk_gan(f: int) -> GanPair:
    """Progressively scaled kernels: (4f, 4f, 8f, 32f, 128f) at stride 4."""
    _check_f(f)
    kernels = [4 * f, 4 * f, 8 * f, 32 * f, 128 * f]
    gen = _Conv1dGenerator(f, kernels, output_paddings=[0] * 5)
    disc = _Conv1dDiscriminator(f, kernels[::-1])
    return GanPair(gen, disc, "psk_gan", f)


def build_wavegan(f: int) -> GanPair:
    """Fixed length-25 kernels at stride 4; no phase shuffle."""
    _check_f(f)
    # kernel 25 needs padding 12 with output_padding 1 to exactly quadruple
    gen = _Conv1dGenerator(f, [25] * 5, output_paddings=[1] * 5)
    disc = _Conv1dDiscriminator(f, [25] * 5)
    return GanPair(gen, disc, "wavegan", f)


class _StftGenerator(nn.Module):
    def __init__(self, f: int):
        super().__init__()
        self.f = f
        self.dense = nn.Linear(LATENT_DIM, 16384 * f)
        self.convs = nn.ModuleList([
            nn.ConvTranspose2d(1024, 512, 4, stride=2, padding=1),
            nn.ConvTranspose2d(512, 256, 4, stride=2, padding=1),
            nn.ConvTranspose2d(256, 128, 4, stride=2, padding=1),
            # width 16 -> 33 needs an extra output column
            nn.ConvTranspose2d(128, 2, 4, stride=2, padding=1, output_padding=(0, 1)),
        ])
        self.output_shape = (2, 128 * f, 33)

    def forward(self, z):
        x = torch.relu(self.dense(z).reshape(-1, 1024, 8 * self.f, 2))
        for conv in self.convs[:-1]:
            x = torch.relu(conv(x))
        return torch.tanh(self.convs[-1](x))


class _StftDiscriminator(nn.Module):
    def __init__(self, f: int):
        super().__init__()
        self.convs = nn.ModuleList([
            nn.Conv2d(2, 128, 4, stride=2, padding=1),
            nn.Conv2d(128, 256, 4, stride=2, padding=1),
            nn.Conv2d(256, 512, 4, stride=2, padding=1),
            nn.Conv2d(512, 1024, 4, stride=2, padding=1),
        ])
        self.dense = nn.Linear(16384 * f, 1)

    def forward(self, x):
        for conv in self.convs:
            x = torch.nn.functional.leaky_relu(conv(x), 0.2)
        return self.dense(x.flatten(1))


def build_stft_gan(f: int) -> GanPair:
    """Four 4x4 stride-2 layers on (2, 128f, 33) time-frequency grids."""
    _check_f(f)
    return GanPair(_StftGenerator(f), _StftDiscriminator(f), "stft_gan", f)


_BUILDERS = {
    "psk_gan": build_psk_gan,
    "stft_gan": build_stft_gan,
    "wavegan": build_wavegan,
}


def build(arch: str, f: int) -> GanPair:
    try:
        builder = _BUILDERS[arch]
    except KeyError:
        raise ValueError(f"unknown architecture {arch!r}") from None
    return builder(f)
