"""Tapped-delay-line Rayleigh fading channels (EPA/EVA/ETU profiles).

Each tap fades as an independent complex Gaussian process with the classical
Jakes Doppler spectrum, synthesized as a sum of sinusoids with random arrival
angles.  Tap delays are quantized to the nearest sample and total average tap
power is normalized to one, so channel application preserves expected power.
Also provides pilot-based frequency-response estimation, one-tap zero-forcing
equalization, and coherence-bandwidth estimation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChannelRealization",
    "ChannelSpec",
    "TapProfile",
    "apply_channel",
    "coherence_bandwidth",
    "equalize",
    "estimate_freq_response",
    "realize_channel",
    "static_realization",
    "tap_profile",
]

# Delay/power tables for the standard 3GPP tapped-delay-line profiles
# (TS 36.101 Annex B.2).
_TAP_TABLES = {
    "EPA": (
        [0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0],
        [0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8],
    ),
    "EVA": (
        [0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0],
        [0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9],
    ),
    "ETU": (
        [0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0],
        [-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0],
    ),
}

# Default maximum Doppler frequency paired with each profile.
DEFAULT_DOPPLER_HZ = {"EPA": 5.0, "EVA": 70.0, "ETU": 300.0}

# Sinusoids per tap in the sum-of-sinusoids Doppler synthesis.
N_SINUSOIDS = 64


@dataclass(frozen=True)
class ChannelSpec:
    """Fading-channel configuration: profile, max Doppler, sample rate."""

    profile: str
    max_doppler_hz: float | None = None
    sample_rate_hz: float = 7.68e6

    def __post_init__(self):
        if self.profile not in _TAP_TABLES:
            raise ValueError(f"unknown channel profile {self.profile!r}")
        if self.max_doppler_hz is None:
            object.__setattr__(self, "max_doppler_hz", DEFAULT_DOPPLER_HZ[self.profile])
        if self.max_doppler_hz < 0:
            raise ValueError("max_doppler_hz must be nonnegative")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")

    def to_dict(self) -> dict:
        return {
            "profile": self.profile,
            "max_doppler_hz": self.max_doppler_hz,
            "sample_rate_hz": self.sample_rate_hz,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSpec":
        return cls(**d)


@dataclass(frozen=True)
class TapProfile:
    """Tap delays (ns) and powers (dB); linear powers normalize to sum 1."""

    delays_ns: np.ndarray = field(repr=False)
    powers_db: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.delays_ns) != len(self.powers_db):
            raise ValueError("delay/power tables must have equal length")
        if np.any(np.diff(self.delays_ns) <= 0) or self.delays_ns[0] < 0:
            raise ValueError("delays must be nonnegative and increasing")

    @property
    def powers_linear(self) -> np.ndarray:
        p = 10.0 ** (np.asarray(self.powers_db) / 10.0)
        return p / p.sum()

    @property
    def n_taps(self) -> int:
        return len(self.delays_ns)


def tap_profile(profile: str) -> TapProfile:
    """Look up the delay/power table for EPA, EVA, or ETU."""
    try:
        delays, powers = _TAP_TABLES[profile]
    except KeyError:
        raise ValueError(f"unknown channel profile {profile!r}") from None
    return TapProfile(np.asarray(delays), np.asarray(powers))


@dataclass
class ChannelRealization:
    """One stochastic channel draw: per-sample complex gain of every tap."""

    tap_gains: np.ndarray  # (n_samples, n_taps) complex
    tap_sample_offsets: np.ndarray  # (n_taps,) int

    @property
    def n_samples(self) -> int:
        return self.tap_gains.shape[0]


def _jakes_process(n_samples: int, doppler_norm: float, rng: np.random.Generator,
                   n_sinusoids: int = N_SINUSOIDS) -> np.ndarray:
    """Unit-power complex fading process with the classical Doppler spectrum.

    Sum of ``n_sinusoids`` equal-amplitude phasors with i.i.d. uniform
    arrival angles and phases; the ensemble autocorrelation is
    J0(2 pi f_D tau) and the marginal tends to circular Gaussian.
    """
    angles = rng.uniform(0.0, 2.0 * np.pi, n_sinusoids)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_sinusoids)
    freqs = doppler_norm * np.cos(angles)  # cycles per sample
    n = np.arange(n_samples)
    phase_matrix = 2.0 * np.pi * np.outer(n, freqs) + phases
    return np.exp(1j * phase_matrix).sum(axis=1) / np.sqrt(n_sinusoids)


def realize_channel(spec: ChannelSpec, n_samples: int, rng: np.random.Generator,
                    n_sinusoids: int = N_SINUSOIDS) -> ChannelRealization:
    """Draw a time-varying realization of the configured channel.

    Taps fade independently; each is scaled by its normalized profile power
    and delayed by its table delay rounded to the nearest sample.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    profile = tap_profile(spec.profile)
    doppler_norm = spec.max_doppler_hz / spec.sample_rate_hz
    offsets = np.round(np.asarray(profile.delays_ns) * 1e-9 * spec.sample_rate_hz).astype(int)
    amps = np.sqrt(profile.powers_linear)
    gains = np.empty((n_samples, profile.n_taps), dtype=complex)
    for k in range(profile.n_taps):
        gains[:, k] = amps[k] * _jakes_process(n_samples, doppler_norm, rng, n_sinusoids)
    return ChannelRealization(gains, offsets)


def static_realization(gains: np.ndarray, offsets: np.ndarray, n_samples: int) -> ChannelRealization:
    """Time-invariant realization with the given complex tap gains."""
    gains = np.asarray(gains, dtype=complex)
    tap_gains = np.tile(gains, (n_samples, 1))
    return ChannelRealization(tap_gains, np.asarray(offsets, dtype=int))


def apply_channel(waveform: np.ndarray, realization: ChannelRealization) -> np.ndarray:
    """Time-varying tapped-delay convolution, output truncated to input length.

    y[n] = sum_k g_k[n] * x[n - d_k], with x[m] = 0 for m < 0.
    """
    waveform = np.asarray(waveform)
    n = waveform.size
    if realization.n_samples < n:
        raise ValueError("realization shorter than waveform")
    out = np.zeros(n, dtype=complex)
    for k, d in enumerate(realization.tap_sample_offsets):
        if d >= n:
            continue
        shifted = np.concatenate([np.zeros(d, dtype=complex), waveform[: n - d]])
        out += realization.tap_gains[:n, k] * shifted
    return out


def estimate_freq_response(demod_pilot: np.ndarray, known_pilot: np.ndarray) -> np.ndarray:
    """Per-subcarrier channel estimate: demodulated pilot over known pilot."""
    demod_pilot = np.asarray(demod_pilot)
    known_pilot = np.asarray(known_pilot)
    if demod_pilot.shape != known_pilot.shape:
        raise ValueError("pilot length mismatch")
    if np.any(known_pilot == 0):
        raise ValueError("known pilot contains zero entries")
    return demod_pilot / known_pilot


def equalize(grid: np.ndarray, freq_response: np.ndarray,
             floor: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """One-tap zero-forcing equalization of every OFDM symbol in the grid.

    Subcarriers whose estimated response magnitude falls below ``floor``
    are zeroed and flagged rather than divided.  Returns
    ``(equalized_grid, dead_mask)``.
    """
    grid = np.asarray(grid)
    h = np.asarray(freq_response)
    if grid.shape[-1] != h.shape[0]:
        raise ValueError("grid/frequency-response width mismatch")
    dead = np.abs(h) < floor
    safe = np.where(dead, 1.0, h)
    out = grid / safe
    if dead.any():
        out = np.where(dead, 0.0, out)
    return out, dead


def coherence_bandwidth(freq_response: np.ndarray, subcarrier_spacing_hz: float) -> float:
    """Half-width at half-max of the frequency-response autocorrelation.

    The normalized complex autocorrelation over subcarrier lag is scanned
    for the first crossing of 0.5, linearly interpolated between lags and
    converted to Hz.  Without a crossing the full measured span is returned.
    """
    h = np.asarray(freq_response)
    n = h.size
    if n < 8:
        raise ValueError("need at least 8 subcarriers")
    r = np.empty(n)
    for lag in range(n):
        r[lag] = np.abs(np.mean(h[lag:] * np.conj(h[: n - lag])))
    if r[0] == 0:
        return (n - 1) * subcarrier_spacing_hz
    r /= r[0]
    below = np.nonzero(r <= 0.5)[0]
    if below.size == 0:
        return (n - 1) * subcarrier_spacing_hz
    d = below[0]
    if d == 0:
        return 0.0
    frac = (r[d - 1] - 0.5) / (r[d - 1] - r[d])
    return (d - 1 + frac) * subcarrier_spacing_hz
