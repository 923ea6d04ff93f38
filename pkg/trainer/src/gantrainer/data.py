"""Dataset loading, min-max scaling, and waveform reconstruction.

Raw containers hold (length, 2) I/Q items; models work on (2, length)
channel tensors zero-padded to the next power of two.  STFT containers hold
(2, freq, frames) grids, possibly already scaled (the scaling parameters
then live in the container header).  Scaling follows the container schema:
``mode`` is "global" or "featurewise" (per trailing time step, channels and
frequency bins pooled), outputs span [-1, 1], and degenerate features map
to 0 and invert to their constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from .container import ContainerError, read_container

ARCH_REPRESENTATION = {"psk_gan": "raw", "stft_gan": "stft", "wavegan": "raw"}
ARCH_SCALING = {"psk_gan": "global", "stft_gan": "featurewise", "wavegan": "featurewise"}


@dataclass
class Scaling:
    mode: str
    mins: np.ndarray
    maxs: np.ndarray
    degenerate: np.ndarray

    @classmethod
    def fit(cls, data: np.ndarray, mode: str) -> "Scaling":
        if mode == "global":
            mins, maxs = np.asarray(data.min()), np.asarray(data.max())
        elif mode == "featurewise":
            axes = tuple(range(data.ndim - 1))
            mins, maxs = data.min(axis=axes), data.max(axis=axes)
        else:
            raise ValueError(f"unknown scaling mode {mode!r}")
        return cls(mode, mins, maxs, np.asarray(maxs == mins))

    def apply(self, data: np.ndarray) -> np.ndarray:
        span = np.where(self.degenerate, 1.0, self.maxs - self.mins)
        out = 2.0 * (data - self.mins) / span - 1.0
        return np.where(self.degenerate, 0.0, out)

    def invert(self, data: np.ndarray) -> np.ndarray:
        span = np.where(self.degenerate, 0.0, self.maxs - self.mins)
        return (data + 1.0) / 2.0 * span + self.mins

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "mins": np.asarray(self.mins).tolist(),
            "maxs": np.asarray(self.maxs).tolist(),
            "degenerate": np.asarray(self.degenerate).astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scaling":
        return cls(
            d["mode"],
            np.asarray(d["mins"], dtype=float),
            np.asarray(d["maxs"], dtype=float),
            np.asarray(d["degenerate"], dtype=bool),
        )


def next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


@dataclass
class TrainingData:
    """Scaled model-ready tensors plus everything needed to invert samples."""

    tensors: np.ndarray  # (count, 2, ...) float32, in [-1, 1]
    scaling: Scaling
    header: dict  # original container header (spec, stft metadata, ...)
    arch: str

    @property
    def waveform_len(self) -> int:
        if self.header["representation"] == "raw":
            return int(self.header["item_shape"][0])
        return int(self.header["stft"]["n_original"])

    @property
    def width_factor(self) -> int:
        return int(self.header["spec"]["symbol_len"]) // 128


def load_training_data(path, arch: str) -> TrainingData:
    """Load a container for the given architecture, scaling if necessary."""
    if arch not in ARCH_REPRESENTATION:
        raise ValueError(f"unknown architecture {arch!r}")
    header, payload = read_container(path)
    want = ARCH_REPRESENTATION[arch]
    if header["representation"] != want:
        raise ContainerError(
            f"{arch} trains on {want!r} containers, got {header['representation']!r}"
        )
    mode = ARCH_SCALING[arch]
    if want == "raw":
        # (count, length, 2) -> (count, 2, padded_length)
        channels = payload.transpose(0, 2, 1).astype(np.float32)
        padded = next_pow2(channels.shape[2])
        data = np.zeros((channels.shape[0], 2, padded), dtype=np.float32)
        data[:, :, : channels.shape[2]] = channels
        scaling = Scaling.fit(data, mode)
        data = scaling.apply(data).astype(np.float32)
        return TrainingData(data, scaling, header, arch)
    # stft payload is used as stored; honor header scaling when present
    data = payload.astype(np.float32)
    if header.get("scaling") is not None:
        scaling = Scaling.from_dict(header["scaling"])
        if scaling.mode != mode:
            raise ContainerError(
                f"container scaled {scaling.mode!r}, {arch} expects {mode!r}"
            )
    else:
        scaling = Scaling.fit(data, mode)
        data = scaling.apply(data).astype(np.float32)
    return TrainingData(data, scaling, header, arch)


def _istft_grid(values: np.ndarray, window_len: int, hop: int, n_original: int) -> np.ndarray:
    """Invert one centered full-spectrum STFT grid back to a waveform."""
    _, x = scipy.signal.istft(
        np.fft.ifftshift(values, axes=0),
        window="hann",
        nperseg=window_len,
        noverlap=window_len - hop,
        input_onesided=False,
        boundary=True,
    )
    return x[:n_original]


def samples_to_waveforms(samples: np.ndarray, data: TrainingData) -> np.ndarray:
    """Undo scaling and the model representation; returns (count, length) complex."""
    arr = data.scaling.invert(samples.astype(np.float64))
    if ARCH_REPRESENTATION[data.arch] == "raw":
        length = data.waveform_len
        return arr[:, 0, :length] + 1j * arr[:, 1, :length]
    meta = data.header["stft"]
    out = np.empty((arr.shape[0], meta["n_original"]), dtype=complex)
    for i in range(arr.shape[0]):
        grid = arr[i, 0] + 1j * arr[i, 1]
        out[i] = _istft_grid(grid, meta["window_len"], meta["hop"], meta["n_original"])
    return out


def waveforms_to_raw_payload(waveforms: np.ndarray) -> np.ndarray:
    return np.stack([waveforms.real, waveforms.imag], axis=-1).astype(np.float32)
