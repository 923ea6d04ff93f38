"""Synthetic OFDM waveform datasets with fidelity evaluation.

Submodules: :mod:`modem` (waveform synthesis/demodulation), :mod:`channel`
(Rayleigh fading, equalization), :mod:`tfgrid` (invertible STFT, scaling),
:mod:`metrics` (evaluation suite), :mod:`container`/:mod:`datasets`
(binary container, presets, generation), :mod:`cli`.
"""

from .channel import ChannelSpec
from .container import read_container, write_container
from .datasets import generate_dataset, load_waveforms, preset_names, preset_spec
from .metrics import EvalReport, evaluate
from .modem import WaveformSpec, generate_waveform, waveform_rng
from .tfgrid import ScalingParams, StftGrid, istft, scale, stft, unscale

__all__ = [
    "ChannelSpec",
    "EvalReport",
    "ScalingParams",
    "StftGrid",
    "WaveformSpec",
    "evaluate",
    "generate_dataset",
    "generate_waveform",
    "istft",
    "load_waveforms",
    "preset_names",
    "preset_spec",
    "read_container",
    "scale",
    "stft",
    "unscale",
    "waveform_rng",
    "write_container",
]

__version__ = "0.1.0"
