"""Baseband OFDM waveform synthesis and demodulation.

Waveforms follow the downlink-LTE-like layout used throughout this package:
a block of ``n_symbols`` OFDM symbols, each carrying Gray-coded QAM symbols
on a centered block of occupied subcarriers (DC unused), modulated with a
unitary inverse DFT and prepended with a cyclic prefix.  AWGN is calibrated
so the demodulated error vector magnitude hits a requested dB level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import ChannelSpec, apply_channel, realize_channel

__all__ = [
    "ALLOC_FRACTIONS",
    "MAX_OCCUPIED",
    "Allocation",
    "QamConstellation",
    "WaveformSpec",
    "add_awgn",
    "build_allocation",
    "build_constellation",
    "calibrate_noise_sigma",
    "demodulate",
    "generate_waveform",
    "hard_decide",
    "map_bits",
    "modulate",
    "waveform_rng",
    "zadoff_chu_pilot",
]

# Maximum occupied subcarriers (DC excluded) per DFT size, after the LTE
# downlink bandwidth table.
MAX_OCCUPIED = {128: 75, 256: 150, 512: 300}

ALLOC_FRACTIONS = {"small": 0.25, "medium": 0.5, "large": 0.75}

SUPPORTED_MOD_ORDERS = (4, 16, 32, 64)

# Minimum occupied count for the Zadoff-Chu pilot branch (3 resource blocks).
MIN_PILOT_SUBCARRIERS = 36


@dataclass(frozen=True)
class WaveformSpec:
    """Full parameterization of one synthetic OFDM dataset.

    Attributes
    ----------
    symbol_len : DFT size / subcarrier count, one of 128, 256, 512.
    n_symbols : OFDM symbols per waveform.
    cp_fraction : cyclic-prefix length as a fraction of ``symbol_len``.
    alloc_class : "small" | "medium" | "large", or an explicit occupied count.
    mod_order : QAM order M in {4, 16, 32, 64}.
    target_evm_db : EVM target in dB (< 0), or None for noiseless.
    pilot_enabled : insert a Zadoff-Chu pilot on ``pilot_position``.
    pilot_position : zero-based OFDM-symbol index of the pilot.
    channel : optional fading-channel configuration.
    seed : default entropy for dataset generation.
    """

    symbol_len: int
    n_symbols: int = 6
    cp_fraction: float = 0.25
    alloc_class: str | int = "medium"
    mod_order: int = 16
    target_evm_db: float | None = -25.0
    pilot_enabled: bool = False
    pilot_position: int = 3
    channel: ChannelSpec | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.symbol_len not in MAX_OCCUPIED:
            raise ValueError(f"symbol_len must be one of {sorted(MAX_OCCUPIED)}, got {self.symbol_len}")
        if self.n_symbols < 1:
            raise ValueError("n_symbols must be positive")
        cp = self.cp_fraction * self.symbol_len
        if abs(cp - round(cp)) > 1e-9:
            raise ValueError("cp_fraction * symbol_len must be an integer")
        if self.mod_order not in SUPPORTED_MOD_ORDERS:
            raise ValueError(f"mod_order must be one of {SUPPORTED_MOD_ORDERS}")
        if self.target_evm_db is not None and math.isfinite(self.target_evm_db) and self.target_evm_db >= 0:
            raise ValueError("target_evm_db must be negative (or None for noiseless)")
        if not 0 <= self.pilot_position < self.n_symbols:
            raise ValueError("pilot_position must index an OFDM symbol")
        n_occ = self.allocation.n_occupied
        if n_occ > MAX_OCCUPIED[self.symbol_len]:
            raise ValueError("occupied count exceeds the maximum for this symbol_len")
        if self.pilot_enabled and n_occ < MIN_PILOT_SUBCARRIERS:
            raise ValueError(
                f"pilot requires at least {MIN_PILOT_SUBCARRIERS} occupied subcarriers, got {n_occ}"
            )

    @property
    def cp_len(self) -> int:
        return round(self.cp_fraction * self.symbol_len)

    @property
    def symbol_span(self) -> int:
        """Samples per OFDM symbol including its cyclic prefix."""
        return self.symbol_len + self.cp_len

    @property
    def waveform_len(self) -> int:
        return self.n_symbols * self.symbol_span

    @property
    def allocation(self) -> "Allocation":
        return build_allocation(self.symbol_len, self.alloc_class)

    @property
    def constellation(self) -> "QamConstellation":
        return build_constellation(self.mod_order)

    @property
    def bits_per_waveform(self) -> int:
        return self.n_symbols * self.allocation.n_occupied * self.constellation.bits_per_symbol

    def to_dict(self) -> dict:
        evm = self.target_evm_db
        if evm is not None and not math.isfinite(evm):
            evm = None
        return {
            "symbol_len": self.symbol_len,
            "n_symbols": self.n_symbols,
            "cp_fraction": self.cp_fraction,
            "alloc_class": self.alloc_class,
            "mod_order": self.mod_order,
            "target_evm_db": evm,
            "pilot_enabled": self.pilot_enabled,
            "pilot_position": self.pilot_position,
            "channel": None if self.channel is None else self.channel.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WaveformSpec":
        d = dict(d)
        if d.get("channel") is not None:
            d["channel"] = ChannelSpec.from_dict(d["channel"])
        return cls(**d)


@dataclass(frozen=True)
class QamConstellation:
    """Unit-average-power QAM constellation with Gray bit labels.

    ``points[i]`` carries the bit pattern ``bit_labels[i]``; ``code_to_index``
    maps the integer value of a bit pattern (MSB first) to the point index.
    """

    order: int
    points: np.ndarray = field(repr=False)
    bit_labels: np.ndarray = field(repr=False)
    code_to_index: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    def __eq__(self, other):
        return isinstance(other, QamConstellation) and self.order == other.order

    def __hash__(self):
        return hash(self.order)


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def _square_qam(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Square grid with per-axis Gray labels; I bits precede Q bits."""
    m = int(round(math.sqrt(order)))
    bits_axis = int(np.log2(m))
    levels = 2 * np.arange(m) - (m - 1)
    points = np.empty(order, dtype=complex)
    labels = np.empty((order, 2 * bits_axis), dtype=np.uint8)
    idx = 0
    for qi in range(m):
        for ii in range(m):
            points[idx] = levels[ii] + 1j * levels[qi]
            code = (_gray(ii) << bits_axis) | _gray(qi)
            labels[idx] = [(code >> (2 * bits_axis - 1 - b)) & 1 for b in range(2 * bits_axis)]
            idx += 1
    return points, labels


# Quasi-Gray labeling for the 32-point cross constellation (6x6 grid minus the
# four corners, enumerated Q-major from the lowest level).  A perfect Gray
# labeling does not exist for cross constellations.
_CROSS32_CODES = {
    (1, 0, 0, 0, 0): 0, (1, 0, 0, 1, 0): 1, (1, 1, 0, 1, 0): 2, (1, 1, 0, 0, 0): 3,
    (1, 0, 0, 1, 1): 4, (0, 0, 0, 1, 1): 5, (0, 0, 0, 1, 0): 6, (0, 1, 0, 1, 0): 7,
    (0, 1, 0, 1, 1): 8, (1, 1, 0, 1, 1): 9, (1, 0, 0, 0, 1): 10, (0, 0, 0, 0, 1): 11,
    (0, 0, 0, 0, 0): 12, (0, 1, 0, 0, 0): 13, (0, 1, 0, 0, 1): 14, (1, 1, 0, 0, 1): 15,
    (1, 0, 1, 0, 1): 16, (0, 0, 1, 0, 1): 17, (0, 0, 1, 0, 0): 18, (0, 1, 1, 0, 0): 19,
    (0, 1, 1, 0, 1): 20, (1, 1, 1, 0, 1): 21, (1, 0, 1, 1, 1): 22, (0, 0, 1, 1, 1): 23,
    (0, 0, 1, 1, 0): 24, (0, 1, 1, 1, 0): 25, (0, 1, 1, 1, 1): 26, (1, 1, 1, 1, 1): 27,
    (1, 0, 1, 0, 0): 28, (1, 0, 1, 1, 0): 29, (1, 1, 1, 1, 0): 30, (1, 1, 1, 0, 0): 31,
}


def _cross_qam32() -> tuple[np.ndarray, np.ndarray]:
    levels = 2 * np.arange(6) - 5
    pts = [complex(i, q) for q in levels for i in levels]
    max_amp = max(abs(p) for p in pts)
    pts = [p for p in pts if abs(p) < max_amp]
    points = np.array(pts)
    labels = np.zeros((32, 5), dtype=np.uint8)
    for bits, idx in _CROSS32_CODES.items():
        labels[idx] = bits
    return points, labels


@lru_cache(maxsize=None)
def build_constellation(order: int) -> QamConstellation:
    """Build the unit-power Gray-labeled constellation for order M.

    Square grids for M in {4, 16, 64}; the cross layout for M=32.
    """
    if order not in SUPPORTED_MOD_ORDERS:
        raise ValueError(f"unsupported modulation order {order}")
    if order == 32:
        points, labels = _cross_qam32()
    else:
        points, labels = _square_qam(order)
    points = points / np.sqrt(np.mean(np.abs(points) ** 2))
    k = labels.shape[1]
    codes = labels @ (1 << np.arange(k - 1, -1, -1))
    code_to_index = np.empty(order, dtype=np.int64)
    code_to_index[codes] = np.arange(order)
    points.setflags(write=False)
    labels.setflags(write=False)
    code_to_index.setflags(write=False)
    return QamConstellation(order, points, labels, code_to_index)


@dataclass(frozen=True)
class Allocation:
    """Occupied-subcarrier set: a contiguous block centered on (and excluding)
    DC, stored as DFT-bin indices in ascending-frequency order (negative
    frequencies first)."""

    occupied: np.ndarray = field(repr=False)
    n_max: int = 0
    symbol_len: int = 0

    @property
    def n_occupied(self) -> int:
        return len(self.occupied)

    def __eq__(self, other):
        return (
            isinstance(other, Allocation)
            and self.symbol_len == other.symbol_len
            and np.array_equal(self.occupied, other.occupied)
        )

    def __hash__(self):
        return hash((self.symbol_len, self.occupied.tobytes()))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@lru_cache(maxsize=None)
def build_allocation(symbol_len: int, alloc_class: str | int) -> Allocation:
    """Resolve an allocation class (or explicit count) to occupied DFT bins.

    The occupied block is centered in frequency, DC excluded, with
    ceil(n/2) bins below DC and floor(n/2) above.
    """
    if symbol_len not in MAX_OCCUPIED:
        raise ValueError(f"symbol_len must be one of {sorted(MAX_OCCUPIED)}, got {symbol_len}")
    n_max = MAX_OCCUPIED[symbol_len]
    if isinstance(alloc_class, str):
        try:
            frac = ALLOC_FRACTIONS[alloc_class]
        except KeyError:
            raise ValueError(f"unknown allocation class {alloc_class!r}") from None
        n = _round_half_up(frac * n_max)
    else:
        n = int(alloc_class)
    if not 0 < n <= n_max:
        raise ValueError(f"occupied count {n} out of range (max {n_max})")
    n_neg = -(-n // 2)  # ceil
    n_pos = n // 2
    occupied = np.concatenate(
        [np.arange(symbol_len - n_neg, symbol_len), np.arange(1, n_pos + 1)]
    )
    occupied.setflags(write=False)
    return Allocation(occupied, n_max, symbol_len)


def map_bits(bits: np.ndarray, constellation: QamConstellation, allocation: Allocation,
             n_symbols: int) -> np.ndarray:
    """Map a bit sequence onto a resource grid of QAM symbols.

    Returns an (n_symbols, n_occupied) complex array; bits fill the grid
    row by row, MSB first within each symbol.
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    k = constellation.bits_per_symbol
    n_occ = allocation.n_occupied
    expected = n_symbols * n_occ * k
    if bits.size != expected:
        raise ValueError(f"expected {expected} bits, got {bits.size}")
    codes = bits.reshape(-1, k) @ (1 << np.arange(k - 1, -1, -1))
    symbols = constellation.points[constellation.code_to_index[codes]]
    return symbols.reshape(n_symbols, n_occ)


def hard_decide(symbols: np.ndarray, constellation: QamConstellation) -> np.ndarray:
    """Nearest-point indices for each measured symbol (hard decision)."""
    flat = np.asarray(symbols).ravel()
    d = np.abs(flat[:, None] - constellation.points[None, :])
    return np.argmin(d, axis=1).reshape(np.shape(symbols))


def demap_symbols(symbols: np.ndarray, constellation: QamConstellation) -> np.ndarray:
    """Hard-decision bit recovery, inverse of :func:`map_bits`."""
    idx = hard_decide(symbols, constellation).ravel()
    return constellation.bit_labels[idx].ravel()


def modulate(grid: np.ndarray, spec: WaveformSpec) -> np.ndarray:
    """Modulate a resource grid into the baseband I/Q time series.

    Each OFDM symbol row is placed on the occupied bins (zeros elsewhere,
    including DC), transformed with a unitary inverse DFT, and prepended
    with a cyclic prefix copied from the symbol tail.
    """
    grid = np.asarray(grid, dtype=complex)
    alloc = spec.allocation
    if grid.shape != (spec.n_symbols, alloc.n_occupied):
        raise ValueError(
            f"grid shape {grid.shape} does not match spec "
            f"({spec.n_symbols}, {alloc.n_occupied})"
        )
    freq = np.zeros((spec.n_symbols, spec.symbol_len), dtype=complex)
    freq[:, alloc.occupied] = grid
    body = np.fft.ifft(freq, axis=1, norm="ortho")
    with_cp = np.hstack([body[:, spec.symbol_len - spec.cp_len:], body])
    return with_cp.ravel()


def demodulate(waveform: np.ndarray, spec: WaveformSpec) -> np.ndarray:
    """Recover the resource grid: strip prefixes, unitary DFT, occupied bins."""
    waveform = np.asarray(waveform)
    if waveform.shape != (spec.waveform_len,):
        raise ValueError(f"waveform length {waveform.shape} does not match spec ({spec.waveform_len},)")
    blocks = waveform.reshape(spec.n_symbols, spec.symbol_span)
    freq = np.fft.fft(blocks[:, spec.cp_len:], axis=1, norm="ortho")
    return freq[:, spec.allocation.occupied]


def calibrate_noise_sigma(target_evm_db: float | None, spec: WaveformSpec | None = None) -> float:
    """Per-complex-sample noise standard deviation hitting the EVM target.

    With the unit-power constellation and unitary DFTs, time-domain noise
    of variance sigma^2 lands on each subcarrier unchanged, so
    sigma = 10**(EVM_dB / 20) exactly.  None (or -inf) means noiseless.
    """
    if target_evm_db is None or not math.isfinite(target_evm_db):
        return 0.0
    if target_evm_db >= 0:
        raise ValueError("target_evm_db must be negative")
    return 10.0 ** (target_evm_db / 20.0)


def add_awgn(waveform: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise with variance sigma^2 per sample."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return np.array(waveform, copy=True)
    noise = rng.standard_normal((waveform.size, 2)) @ np.array([1.0, 1.0j])
    return waveform + (sigma / np.sqrt(2.0)) * noise


def _largest_prime_below(n: int) -> int:
    for cand in range(n - 1, 1, -1):
        if all(cand % p for p in range(2, int(math.isqrt(cand)) + 1)):
            return cand
    raise ValueError(f"no prime below {n}")


@lru_cache(maxsize=None)
def zadoff_chu_pilot(n_occupied: int) -> np.ndarray:
    """Constant-magnitude pilot: group-0 base-0 uplink DMRS base sequence.

    A Zadoff-Chu sequence of prime length N_zc (largest prime below
    ``n_occupied``), root q = floor(N_zc * 1/31 + 1/2), cyclically extended
    to the allocation width.
    """
    if n_occupied < MIN_PILOT_SUBCARRIERS:
        raise ValueError(
            f"Zadoff-Chu pilot needs >= {MIN_PILOT_SUBCARRIERS} subcarriers, got {n_occupied}"
        )
    n_zc = _largest_prime_below(n_occupied)
    q = math.floor(n_zc * 1.0 / 31.0 + 0.5)
    m = np.arange(n_zc)
    base = np.exp(-1j * np.pi * q * m * (m + 1) / n_zc)
    seq = np.concatenate([base, base[: n_occupied - n_zc]])
    seq.setflags(write=False)
    return seq


def waveform_rng(seed: int, index: int) -> np.random.Generator:
    """Independent, reproducible stream for waveform ``index`` of a dataset."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))


def generate_waveform(spec: WaveformSpec, rng: np.random.Generator
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw one synthetic waveform.

    Returns ``(waveform, grid, bits)`` where ``grid`` is the transmitted
    resource grid (pilot row substituted when enabled) and ``bits`` the
    uniform random source bits.  When a channel is configured, AWGN is
    added before the channel is applied; otherwise noise comes last.
    """
    bits = rng.integers(0, 2, size=spec.bits_per_waveform, dtype=np.uint8)
    grid = map_bits(bits, spec.constellation, spec.allocation, spec.n_symbols)
    if spec.pilot_enabled:
        grid[spec.pilot_position] = zadoff_chu_pilot(spec.allocation.n_occupied)
    waveform = modulate(grid, spec)
    sigma = calibrate_noise_sigma(spec.target_evm_db)
    if spec.channel is not None:
        waveform = add_awgn(waveform, sigma, rng)
        realization = realize_channel(spec.channel, waveform.size, rng)
        waveform = apply_channel(waveform, realization)
    else:
        waveform = add_awgn(waveform, sigma, rng)
    return waveform, grid, bits
