"""Invertible STFT representation and min-max scaling for model training.

Complex waveforms are zero-padded to the next power of two, framed with a
Hann window at 75% overlap (hop = window/4, which satisfies the COLA
constraint, so the transform is exactly invertible), and transformed with a
full complex DFT per frame with the zero-frequency bin rotated to the center.
Scaling maps data into [-1, 1] either globally or per time step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

__all__ = [
    "ScalingParams",
    "StftGrid",
    "grid_to_channels",
    "channels_to_grid",
    "istft",
    "next_pow2",
    "scale",
    "stft",
    "unscale",
]


def next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


@dataclass
class StftGrid:
    """Complex time-frequency grid plus the metadata needed to invert it.

    ``values`` has shape (window_len, n_frames) with frequencies in
    ascending order (zero frequency at the center bin).
    """

    values: np.ndarray
    window_len: int
    hop: int
    n_original: int
    n_padded: int

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


def stft(waveform: np.ndarray, window_len: int) -> StftGrid:
    """Forward transform of one complex waveform.

    The waveform is zero-padded to the next power of two; frames are
    centered (half a window of zero padding at each end), Hann windowed,
    with hop = window_len / 4.
    """
    waveform = np.asarray(waveform)
    if waveform.ndim != 1:
        raise ValueError("expected a 1-D waveform")
    if window_len < 4 or window_len % 4:
        raise ValueError("window_len must be a positive multiple of 4")
    n_original = waveform.size
    n_padded = next_pow2(n_original)
    padded = np.zeros(n_padded, dtype=complex)
    padded[:n_original] = waveform
    hop = window_len // 4
    _, _, z = scipy.signal.stft(
        padded,
        window="hann",
        nperseg=window_len,
        noverlap=window_len - hop,
        return_onesided=False,
        boundary="zeros",
        padded=True,
    )
    return StftGrid(np.fft.fftshift(z, axes=0), window_len, hop, n_original, n_padded)


def istft(grid: StftGrid) -> np.ndarray:
    """Inverse transform via COLA overlap-add; trims the zero padding."""
    z = np.fft.ifftshift(grid.values, axes=0)
    _, x = scipy.signal.istft(
        z,
        window="hann",
        nperseg=grid.window_len,
        noverlap=grid.window_len - grid.hop,
        input_onesided=False,
        boundary=True,
    )
    if x.size < grid.n_original:
        raise ValueError("grid too short for recorded original length")
    return x[: grid.n_original]


def grid_to_channels(grid: StftGrid) -> np.ndarray:
    """Real/imaginary parts as a (2, freq, frames) real array."""
    return np.stack([grid.values.real, grid.values.imag])


def channels_to_grid(channels: np.ndarray, n_original: int, n_padded: int) -> StftGrid:
    """Rebuild an invertible grid from a 2-channel real array."""
    channels = np.asarray(channels)
    if channels.ndim != 3 or channels.shape[0] != 2:
        raise ValueError("expected shape (2, freq, frames)")
    window_len = channels.shape[1]
    values = channels[0] + 1j * channels[1]
    return StftGrid(values, window_len, window_len // 4, n_original, n_padded)


@dataclass
class ScalingParams:
    """Affine min-max map into [-1, 1] and what is needed to undo it.

    In ``featurewise`` mode, ``mins``/``maxs`` hold one value per trailing
    time step (frame); in ``global`` mode they are scalars.  Degenerate
    features (max == min) are mapped to 0 and flagged.
    """

    mode: str
    mins: np.ndarray
    maxs: np.ndarray
    degenerate: np.ndarray

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "mins": np.asarray(self.mins).tolist(),
            "maxs": np.asarray(self.maxs).tolist(),
            "degenerate": np.asarray(self.degenerate).astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingParams":
        return cls(
            mode=d["mode"],
            mins=np.asarray(d["mins"], dtype=float),
            maxs=np.asarray(d["maxs"], dtype=float),
            degenerate=np.asarray(d["degenerate"], dtype=bool),
        )


def scale(data: np.ndarray, mode: str, params: ScalingParams | None = None
          ) -> tuple[np.ndarray, ScalingParams]:
    """Min-max scale ``data`` into [-1, 1].

    ``global`` uses a single (min, max) over all values; ``featurewise``
    uses per-time-step extrema, reducing over every axis except the last
    (all channels and frequency bins of a frame share one feature range).
    Pass ``params`` to reuse statistics from another dataset.
    """
    data = np.asarray(data, dtype=float)
    if not np.all(np.isfinite(data)):
        raise ValueError("data must be finite")
    if mode not in ("global", "featurewise"):
        raise ValueError(f"unknown scaling mode {mode!r}")
    if params is None:
        if mode == "global":
            mins = np.asarray(data.min())
            maxs = np.asarray(data.max())
        else:
            axes = tuple(range(data.ndim - 1))
            mins = data.min(axis=axes)
            maxs = data.max(axis=axes)
        degenerate = maxs == mins
        params = ScalingParams(mode, mins, maxs, degenerate)
    elif params.mode != mode:
        raise ValueError(f"params are for mode {params.mode!r}, not {mode!r}")
    span = np.where(params.degenerate, 1.0, params.maxs - params.mins)
    scaled = 2.0 * (data - params.mins) / span - 1.0
    scaled = np.where(params.degenerate, 0.0, scaled)
    return scaled, params


def unscale(data: np.ndarray, params: ScalingParams) -> np.ndarray:
    """Exact inverse of :func:`scale`; degenerate features restore their constant."""
    data = np.asarray(data, dtype=float)
    span = np.where(params.degenerate, 0.0, params.maxs - params.mins)
    return (data + 1.0) / 2.0 * span + params.mins
