"""Deterministic dataset generation, experiment presets, and raw/STFT conversion.

Every waveform index gets its own counter-based RNG stream derived from
(seed, index), so datasets are bit-reproducible regardless of chunking or
worker count, and generation streams to disk with bounded memory.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import tfgrid
from .channel import ChannelSpec
from .container import (
    ContainerError,
    ContainerWriter,
    complex_to_payload,
    payload_to_complex,
    read_container,
)
from .modem import WaveformSpec, generate_waveform, waveform_rng

__all__ = [
    "convert_dataset",
    "generate_dataset",
    "generate_waveform_array",
    "load_waveforms",
    "preset_names",
    "preset_spec",
]

WORKERS_ENV = "OFDMGEN_WORKERS"

_CHANNEL_PRESETS = {
    "channel-epa5": ("EPA", 5.0, -30.0),
    "channel-eva70": ("EVA", 70.0, -40.0),
    "channel-etu300": ("ETU", 300.0, -50.0),
}


def preset_spec(name: str) -> WaveformSpec:
    """Resolve a named experiment preset to a waveform spec.

    ``complexity-<len>-<alloc>``: 16-QAM at -25 dB EVM over the nine
    symbol-length / allocation-size combinations.
    ``modorder-m<M>``: symbol length 128, medium allocation, -25 dB EVM.
    ``channel-{epa5,eva70,etu300}``: 512/medium/16-QAM with pilot and the
    matching fading profile at -30/-40/-50 dB EVM.
    """
    parts = name.split("-")
    if parts[0] == "complexity" and len(parts) == 3:
        return WaveformSpec(
            symbol_len=int(parts[1]), alloc_class=parts[2], mod_order=16,
            target_evm_db=-25.0,
        )
    if parts[0] == "modorder" and len(parts) == 2 and parts[1].startswith("m"):
        return WaveformSpec(
            symbol_len=128, alloc_class="medium", mod_order=int(parts[1][1:]),
            target_evm_db=-25.0,
        )
    if name in _CHANNEL_PRESETS:
        profile, doppler, evm = _CHANNEL_PRESETS[name]
        return WaveformSpec(
            symbol_len=512, alloc_class="medium", mod_order=16, target_evm_db=evm,
            pilot_enabled=True,
            channel=ChannelSpec(profile, doppler, 7.68e6),
        )
    raise ValueError(f"unknown preset {name!r}")


def preset_names() -> list[str]:
    names = [
        f"complexity-{n}-{a}"
        for n in (128, 256, 512)
        for a in ("small", "medium", "large")
    ]
    names += [f"modorder-m{m}" for m in (4, 16, 32, 64)]
    names += sorted(_CHANNEL_PRESETS)
    return names


def _chunk_payload(spec_dict: dict, seed: int, lo: int, hi: int) -> np.ndarray:
    spec = WaveformSpec.from_dict(spec_dict)
    out = np.empty((hi - lo, spec.waveform_len, 2), dtype=np.float32)
    for i in range(lo, hi):
        waveform, _, _ = generate_waveform(spec, waveform_rng(seed, i))
        out[i - lo] = complex_to_payload(waveform)
    return out


def generate_waveform_array(spec: WaveformSpec, count: int, seed: int) -> np.ndarray:
    """Generate ``count`` waveforms in memory as a (count, length) complex array."""
    out = np.empty((count, spec.waveform_len), dtype=complex)
    for i in range(count):
        out[i], _, _ = generate_waveform(spec, waveform_rng(seed, i))
    return out


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, workers)


def generate_dataset(spec: WaveformSpec, count: int, seed: int | None, out_path,
                     workers: int | None = None, chunk: int = 256) -> dict:
    """Generate a raw dataset container on disk; returns the written header.

    Waveform ``i`` depends only on (seed, i), so output bytes are identical
    for any ``workers``/``chunk`` setting.  Peak memory is one chunk.
    """
    if count <= 0:
        raise ValueError("count must be positive")
    if seed is None:
        seed = spec.seed
    if seed is None:
        raise ValueError("a seed is required (argument or spec.seed)")
    header = {
        "format_version": 1,
        "representation": "raw",
        "count": int(count),
        "item_shape": [spec.waveform_len, 2],
        "seed": int(seed),
        "spec": spec.to_dict(),
        "scaling": None,
    }
    workers = _resolve_workers(workers)
    spec_dict = spec.to_dict()
    bounds = [(lo, min(lo + chunk, count)) for lo in range(0, count, chunk)]
    with ContainerWriter(out_path, header) as writer:
        if workers == 1:
            for lo, hi in bounds:
                writer.append(_chunk_payload(spec_dict, seed, lo, hi))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_chunk_payload, spec_dict, seed, lo, hi)
                    for lo, hi in bounds
                ]
                for fut in futures:  # submission order == index order
                    writer.append(fut.result())
    return header


def load_waveforms(path) -> tuple[WaveformSpec, np.ndarray]:
    """Load any container as complex waveforms (STFT payloads are inverted)."""
    header, payload = read_container(path)
    spec = WaveformSpec.from_dict(header["spec"])
    if header["representation"] == "raw":
        return spec, payload_to_complex(payload)
    if header["representation"] != "stft":
        raise ContainerError(f"unknown representation {header['representation']!r}")
    meta = header["stft"]
    params = None
    if header.get("scaling") is not None:
        params = tfgrid.ScalingParams.from_dict(header["scaling"])
    out = np.empty((payload.shape[0], meta["n_original"]), dtype=complex)
    for i in range(payload.shape[0]):
        channels = payload[i].astype(np.float64)
        if params is not None:
            channels = tfgrid.unscale(channels, params)
        grid = tfgrid.channels_to_grid(channels, meta["n_original"], meta["n_padded"])
        out[i] = tfgrid.istft(grid)
    return spec, out


def convert_dataset(in_path, out_path, to: str, scaling: str | None = None,
                    chunk: int = 256) -> dict:
    """Convert a container between raw and STFT representations.

    raw -> stft applies the forward transform (window = OFDM symbol length)
    and optionally min-max scaling whose statistics are computed over the
    whole dataset and stored in the header.  stft -> raw undoes scaling,
    inverts the transform, and trims the zero padding.
    """
    header, payload = read_container(in_path)
    spec = WaveformSpec.from_dict(header["spec"])
    if to == "stft":
        if header["representation"] != "raw":
            raise ContainerError("stft conversion expects a raw container")
        count = payload.shape[0]
        window = spec.symbol_len
        probe = tfgrid.stft(payload_to_complex(payload[0]), window)
        item_shape = [2, window, probe.n_frames]

        def stft_channels(i):
            grid = tfgrid.stft(payload_to_complex(payload[i]), window)
            return tfgrid.grid_to_channels(grid).astype(np.float32)

        params = None
        if scaling is not None:
            # First pass: accumulate extrema without holding the dataset.
            mins = maxs = None
            for i in range(count):
                ch = stft_channels(i)
                if scaling == "global":
                    lo, hi = ch.min(), ch.max()
                elif scaling == "featurewise":
                    lo, hi = ch.min(axis=(0, 1)), ch.max(axis=(0, 1))
                else:
                    raise ValueError(f"unknown scaling mode {scaling!r}")
                mins = lo if mins is None else np.minimum(mins, lo)
                maxs = hi if maxs is None else np.maximum(maxs, hi)
            params = tfgrid.ScalingParams(
                scaling, np.asarray(mins), np.asarray(maxs),
                np.asarray(maxs == mins),
            )
        out_header = dict(header)
        out_header.update(
            representation="stft",
            item_shape=item_shape,
            scaling=None if params is None else params.to_dict(),
            stft={
                "window_len": window,
                "hop": window // 4,
                "n_original": probe.n_original,
                "n_padded": probe.n_padded,
                "n_frames": probe.n_frames,
            },
        )
        with ContainerWriter(out_path, out_header) as writer:
            pending = []
            for i in range(count):
                ch = stft_channels(i)
                if params is not None:
                    ch, _ = tfgrid.scale(ch, scaling, params)
                pending.append(ch.astype(np.float32))
                if len(pending) == chunk:
                    writer.append(np.stack(pending))
                    pending = []
            if pending:
                writer.append(np.stack(pending))
        return out_header

    if to == "raw":
        if header["representation"] != "stft":
            raise ContainerError("raw conversion expects an stft container")
        _, waveforms = load_waveforms(in_path)
        out_header = dict(header)
        out_header.update(
            representation="raw",
            item_shape=[spec.waveform_len, 2],
            scaling=None,
        )
        out_header.pop("stft", None)
        with ContainerWriter(out_path, out_header) as writer:
            for lo in range(0, waveforms.shape[0], chunk):
                writer.append(complex_to_payload(waveforms[lo: lo + chunk]))
        return out_header

    raise ValueError(f"unknown target representation {to!r}")
