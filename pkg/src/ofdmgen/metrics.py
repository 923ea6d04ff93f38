"""Signal-fidelity evaluation of generated versus target waveform sets.

The suite compares two test sets of equal-spec waveforms on:

* median multitaper PSD and the scale-invariant log-spectral (geodesic)
  distance between the two medians,
* error vector magnitude of demodulated (and, for channel datasets,
  equalized) QAM symbols,
* 2-D constellation histograms,
* cyclic-prefix cross-correlation strength (relative error of the medians
  of per-waveform maxima),
* coherence-bandwidth distributions, when a pilot is present.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.signal

from . import channel as chanmod
from . import modem
from .modem import QamConstellation, WaveformSpec
from .tfgrid import next_pow2

__all__ = [
    "EvalReport",
    "Psd",
    "constellation_histogram",
    "cp_crosscorr",
    "cp_max_correlation",
    "cp_relerr",
    "demodulate_set",
    "evaluate",
    "evm_db",
    "median_evm",
    "median_psd",
    "multitaper_psd",
    "psd_geodesic_distance",
]

# Thomson multitaper defaults: time-bandwidth product and taper count.
MT_NW = 4.0
MT_TAPERS = 7

# Power floor applied to PSD bins before any logarithm.
PSD_FLOOR = 1e-20

# Constellation histogram layout.
HIST_BINS = 150
HIST_LIMIT = 1.5


@dataclass
class Psd:
    """Power spectral density on a normalized digital-frequency grid.

    ``freqs`` spans [-0.5, 0.5) in cycles per sample with uniform step;
    values are floored to a tiny positive constant.
    """

    values: np.ndarray
    freqs: np.ndarray
    nw: float = MT_NW
    k_tapers: int = MT_TAPERS

    @property
    def df(self) -> float:
        return 1.0 / self.values.size


@lru_cache(maxsize=8)
def _dpss_tapers(n: int, nw: float, k: int) -> np.ndarray:
    return scipy.signal.windows.dpss(n, nw, k)  # unit-energy tapers


def _freq_grid(nfft: int) -> np.ndarray:
    return (np.arange(nfft) - nfft // 2) / nfft


def _multitaper_stack(waveforms: np.ndarray, nw: float, k: int) -> np.ndarray:
    """Per-waveform multitaper PSDs for a (count, length) complex array."""
    n = waveforms.shape[1]
    nfft = next_pow2(n)
    tapers = _dpss_tapers(n, nw, k)
    out = np.empty((waveforms.shape[0], nfft), dtype=np.float64)
    spec = np.fft.fft(waveforms[:, None, :] * tapers[None, :, :], n=nfft, axis=2)
    np.mean(np.abs(spec) ** 2, axis=1, out=out)
    return np.fft.fftshift(out, axes=1)


def multitaper_psd(waveform: np.ndarray, nw: float = MT_NW, k_tapers: int = MT_TAPERS) -> Psd:
    """Thomson multitaper PSD estimate of one waveform.

    Uses ``k_tapers`` unit-energy Slepian tapers at time-bandwidth ``nw``;
    the FFT length is the next power of two at or above the waveform
    length, and the full complex spectrum is returned with zero frequency
    centered.  White noise of variance v integrates to v.
    """
    waveform = np.asarray(waveform)
    if waveform.size == 0:
        raise ValueError("empty waveform")
    values = _multitaper_stack(waveform[None, :], nw, k_tapers)[0]
    np.maximum(values, PSD_FLOOR, out=values)
    return Psd(values, _freq_grid(values.size), nw, k_tapers)


def median_psd(waveforms: np.ndarray, nw: float = MT_NW, k_tapers: int = MT_TAPERS,
               chunk: int = 128) -> Psd:
    """Per-bin median of the individual multitaper PSDs of a test set."""
    waveforms = np.asarray(waveforms)
    if waveforms.ndim != 2 or waveforms.shape[0] < 1:
        raise ValueError("expected a nonempty (count, length) array")
    nfft = next_pow2(waveforms.shape[1])
    stack = np.empty((waveforms.shape[0], nfft), dtype=np.float32)
    for lo in range(0, waveforms.shape[0], chunk):
        hi = min(lo + chunk, waveforms.shape[0])
        stack[lo:hi] = _multitaper_stack(waveforms[lo:hi], nw, k_tapers)
    values = np.median(stack, axis=0).astype(np.float64)
    np.maximum(values, PSD_FLOOR, out=values)
    return Psd(values, _freq_grid(nfft), nw, k_tapers)


def psd_geodesic_distance(psd_gen: Psd, psd_target: Psd) -> float:
    """Scale-invariant log-spectral distance between two PSDs.

    With r[k] = ln(Pg[k] / Pt[k]) on a common grid of step df,
    d = sqrt( sum(r^2) df - (sum(r) df)^2 ).  Any common scale factor
    between the spectra cancels exactly.
    """
    if psd_gen.values.shape != psd_target.values.shape or not np.allclose(
        psd_gen.freqs, psd_target.freqs
    ):
        raise ValueError("PSDs live on different frequency grids")
    if np.any(psd_gen.values <= 0) or np.any(psd_target.values <= 0):
        raise ValueError("PSD values must be positive")
    r = np.log(psd_gen.values) - np.log(psd_target.values)
    # the grid spans exactly one cycle (sum of df is 1), so the mean-removed
    # form below equals sum(r^2) df - (sum(r) df)^2 without the cancellation
    # error that would break exact scale invariance
    centered = r - r.mean()
    return float(np.sqrt(np.mean(centered * centered)))


def evm_db(measured: np.ndarray, constellation: QamConstellation,
           valid: np.ndarray | None = None) -> float:
    """Error vector magnitude of a symbol block, in dB.

    Each measured symbol is paired with its nearest constellation point
    (hard decision); the RMS error is normalized by the constellation's
    mean point power and returned as 20*log10, floored at -150 dB.
    """
    measured = np.asarray(measured).ravel()
    if valid is not None:
        measured = measured[np.asarray(valid).ravel()]
    if measured.size == 0:
        raise ValueError("empty symbol block")
    idx = modem.hard_decide(measured, constellation)
    err = measured - constellation.points[idx]
    ref = np.mean(np.abs(constellation.points) ** 2)
    evm = np.sqrt(np.mean(np.abs(err) ** 2) / ref)
    if evm <= 0:
        return -150.0
    return max(20.0 * np.log10(evm), -150.0)


def median_evm(grids: np.ndarray, constellation: QamConstellation,
               valid: np.ndarray | None = None) -> float:
    """Median over waveforms of per-waveform EVM estimates (dB)."""
    grids = np.asarray(grids)
    if grids.ndim < 2 or grids.shape[0] < 1:
        raise ValueError("expected a nonempty set of symbol grids")
    vals = [
        evm_db(grids[i], constellation, None if valid is None else valid[i])
        for i in range(grids.shape[0])
    ]
    return float(np.median(vals))


def constellation_histogram(symbols: np.ndarray, valid: np.ndarray | None = None
                            ) -> tuple[np.ndarray, int]:
    """2-D histogram of symbols over [-1.5, 1.5]^2 with 150x150 bins.

    Returns ``(counts, n_dropped)``; symbols outside the region are not
    clipped into edge bins but dropped and counted.  Axis 0 bins the real
    (I) part, axis 1 the imaginary (Q) part.
    """
    symbols = np.asarray(symbols).ravel()
    if valid is not None:
        symbols = symbols[np.asarray(valid).ravel()]
    hist, _, _ = np.histogram2d(
        symbols.real,
        symbols.imag,
        bins=HIST_BINS,
        range=[[-HIST_LIMIT, HIST_LIMIT], [-HIST_LIMIT, HIST_LIMIT]],
    )
    hist = hist.astype(np.int64)
    return hist, int(symbols.size - hist.sum())


def _strip_prefixes(waveform: np.ndarray, spec: WaveformSpec) -> np.ndarray:
    blocks = waveform.reshape(spec.n_symbols, spec.symbol_span)
    return blocks[:, spec.cp_len:].ravel()


def cp_expected_peaks(spec: WaveformSpec) -> np.ndarray:
    """Correlation index at which each prefix aligns with its source copy."""
    n, cp = spec.symbol_len, spec.cp_len
    return (np.arange(spec.n_symbols) + 1) * n - cp


def cp_crosscorr(waveform: np.ndarray, spec: WaveformSpec) -> tuple[np.ndarray, float]:
    """Cross-correlate every cyclic prefix with the prefix-stripped waveform.

    Returns ``(profiles, peak)``: ``profiles[i, k]`` is the energy-normalized
    correlation magnitude of prefix i placed at position k of the stripped
    waveform, and ``peak`` the maximum over all prefixes and positions.
    Correlation is 1.0 where a prefix exactly matches the window it covers.
    Lag convention: position k corresponds to lag ``k - cp_expected_peaks(spec)[i]``,
    so lag 0 is the prefix sitting on its own symbol's tail.
    """
    waveform = np.asarray(waveform)
    if waveform.shape != (spec.waveform_len,):
        raise ValueError("waveform length does not match spec")
    stripped = _strip_prefixes(waveform, spec)
    cp_len = spec.cp_len
    window_energy = np.convolve(np.abs(stripped) ** 2, np.ones(cp_len), mode="valid")
    window_norm = np.sqrt(np.maximum(window_energy, 0.0))
    profiles = np.empty((spec.n_symbols, stripped.size - cp_len + 1))
    for i in range(spec.n_symbols):
        prefix = waveform[i * spec.symbol_span: i * spec.symbol_span + cp_len]
        num = np.abs(scipy.signal.correlate(stripped, prefix, mode="valid"))
        denom = window_norm * np.linalg.norm(prefix)
        with np.errstate(invalid="ignore", divide="ignore"):
            prof = np.where(denom > 0, num / np.maximum(denom, 1e-300), 0.0)
        profiles[i] = prof
    return profiles, float(profiles.max())


def cp_max_correlation(waveforms: np.ndarray, spec: WaveformSpec) -> np.ndarray:
    """Per-waveform maximum prefix cross-correlation over a set."""
    waveforms = np.asarray(waveforms)
    return np.array([cp_crosscorr(waveforms[i], spec)[1] for i in range(waveforms.shape[0])])


def cp_relerr(gen_waveforms: np.ndarray, target_waveforms: np.ndarray,
              spec: WaveformSpec) -> float:
    """Relative error (%) between median per-waveform correlation maxima."""
    r_gen = float(np.median(cp_max_correlation(gen_waveforms, spec)))
    r_target = float(np.median(cp_max_correlation(target_waveforms, spec)))
    if r_target == 0:
        raise ValueError("target correlation median is zero")
    return abs(r_gen - r_target) / abs(r_target) * 100.0


def demodulate_set(waveforms: np.ndarray, spec: WaveformSpec) -> np.ndarray:
    """Batched demodulation: (count, length) -> (count, n_symbols, n_occupied)."""
    waveforms = np.asarray(waveforms, dtype=complex)
    if waveforms.ndim != 2 or waveforms.shape[1] != spec.waveform_len:
        raise ValueError("waveform set does not match spec length")
    blocks = waveforms.reshape(waveforms.shape[0], spec.n_symbols, spec.symbol_span)
    freq = np.fft.fft(blocks[:, :, spec.cp_len:], axis=2, norm="ortho")
    return freq[:, :, spec.allocation.occupied]


def _equalized_data_symbols(grids: np.ndarray, spec: WaveformSpec
                            ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pilot-estimate, equalize, and drop the pilot row for a grid set.

    Returns ``(data_grids, valid_mask, coherence_bw_hz)``.
    """
    pilot = modem.zadoff_chu_pilot(spec.allocation.n_occupied)
    h_all = grids[:, spec.pilot_position, :] / pilot[None, :]
    dead = np.abs(h_all) < 1e-12
    safe = np.where(dead, 1.0, h_all)
    eq = grids / safe[:, None, :]
    data = np.delete(eq, spec.pilot_position, axis=1)
    valid = ~np.broadcast_to(dead[:, None, :], data.shape)
    spacing = spec.channel.sample_rate_hz / spec.symbol_len if spec.channel else 1.0 / spec.symbol_len
    bw = np.array([chanmod.coherence_bandwidth(h_all[i], spacing) for i in range(h_all.shape[0])])
    return data, valid, bw


@dataclass
class EvalReport:
    """All evaluation-suite results for one generated-vs-target pair."""

    psd_distance: float
    evm_db_gen: float
    evm_db_target: float
    cp_relerr_pct: float
    cp_max_median_gen: float
    cp_max_median_target: float
    constellation_hist_gen: np.ndarray = field(repr=False)
    constellation_dropped_gen: int = 0
    constellation_hist_target: np.ndarray = field(default=None, repr=False)
    constellation_dropped_target: int = 0
    coherence_bw_gen: np.ndarray | None = field(default=None, repr=False)
    coherence_bw_target: np.ndarray | None = field(default=None, repr=False)
    psd_freqs: np.ndarray = field(default=None, repr=False)
    psd_gen: np.ndarray = field(default=None, repr=False)
    psd_target: np.ndarray = field(default=None, repr=False)
    cp_profile_gen: np.ndarray = field(default=None, repr=False)
    cp_profile_target: np.ndarray = field(default=None, repr=False)
    cp_peak_positions: np.ndarray = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "psd_distance": self.psd_distance,
            "evm_db_gen": self.evm_db_gen,
            "evm_db_target": self.evm_db_target,
            "cp_relerr_pct": self.cp_relerr_pct,
        }

    def to_json_dict(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "psd_distance": self.psd_distance,
            "evm_db_gen": self.evm_db_gen,
            "evm_db_target": self.evm_db_target,
            "cp_relerr_pct": self.cp_relerr_pct,
            "cp_max_median_gen": self.cp_max_median_gen,
            "cp_max_median_target": self.cp_max_median_target,
            "constellation_hist_gen": arr(self.constellation_hist_gen),
            "constellation_dropped_gen": self.constellation_dropped_gen,
            "constellation_hist_target": arr(self.constellation_hist_target),
            "constellation_dropped_target": self.constellation_dropped_target,
            "coherence_bw_gen": arr(self.coherence_bw_gen),
            "coherence_bw_target": arr(self.coherence_bw_target),
            "psd_freqs": arr(self.psd_freqs),
            "psd_gen": arr(self.psd_gen),
            "psd_target": arr(self.psd_target),
            "cp_profile_gen": arr(self.cp_profile_gen),
            "cp_profile_target": arr(self.cp_profile_target),
            "cp_peak_positions": arr(self.cp_peak_positions),
            "meta": self.meta,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def load(cls, path) -> "EvalReport":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)

        def arr(key, dtype=float):
            return None if d.get(key) is None else np.asarray(d[key], dtype=dtype)

        return cls(
            psd_distance=d["psd_distance"],
            evm_db_gen=d["evm_db_gen"],
            evm_db_target=d["evm_db_target"],
            cp_relerr_pct=d["cp_relerr_pct"],
            cp_max_median_gen=d["cp_max_median_gen"],
            cp_max_median_target=d["cp_max_median_target"],
            constellation_hist_gen=arr("constellation_hist_gen", np.int64),
            constellation_dropped_gen=d["constellation_dropped_gen"],
            constellation_hist_target=arr("constellation_hist_target", np.int64),
            constellation_dropped_target=d["constellation_dropped_target"],
            coherence_bw_gen=arr("coherence_bw_gen"),
            coherence_bw_target=arr("coherence_bw_target"),
            psd_freqs=arr("psd_freqs"),
            psd_gen=arr("psd_gen"),
            psd_target=arr("psd_target"),
            cp_profile_gen=arr("cp_profile_gen"),
            cp_profile_target=arr("cp_profile_target"),
            cp_peak_positions=arr("cp_peak_positions", np.int64),
            meta=d.get("meta", {}),
        )


def _median_cp_profiles(waveforms: np.ndarray, spec: WaveformSpec, sample: int
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Median correlation profile per symbol plus per-waveform maxima.

    Profiles are medianed over at most ``sample`` waveforms to bound
    memory; maxima cover the whole set.
    """
    count = waveforms.shape[0]
    n_prof = min(count, sample)
    maxima = np.empty(count)
    prof_stack = None
    for i in range(count):
        profiles, peak = cp_crosscorr(waveforms[i], spec)
        maxima[i] = peak
        if i < n_prof:
            if prof_stack is None:
                prof_stack = np.empty((n_prof,) + profiles.shape, dtype=np.float32)
            prof_stack[i] = profiles
    return np.median(prof_stack, axis=0).astype(np.float64), maxima


def evaluate(gen_waveforms: np.ndarray, target_waveforms: np.ndarray, spec: WaveformSpec,
             profile_sample: int = 1024) -> EvalReport:
    """Run the full evaluation suite on a generated-vs-target pair.

    Both inputs are (count, waveform_len) complex arrays built under the
    same spec.  When the spec carries a pilot, symbols are equalized with
    the pilot-estimated frequency response before EVM and constellation
    statistics, and coherence-bandwidth distributions are included.
    """
    gen_waveforms = np.asarray(gen_waveforms, dtype=complex)
    target_waveforms = np.asarray(target_waveforms, dtype=complex)
    if gen_waveforms.shape[0] < 1 or target_waveforms.shape[0] < 1:
        raise ValueError("both test sets must be nonempty")

    psd_g = median_psd(gen_waveforms)
    psd_t = median_psd(target_waveforms)
    distance = psd_geodesic_distance(psd_g, psd_t)

    grids_g = demodulate_set(gen_waveforms, spec)
    grids_t = demodulate_set(target_waveforms, spec)
    bw_g = bw_t = None
    valid_g = valid_t = None
    if spec.pilot_enabled:
        grids_g, valid_g, bw_g = _equalized_data_symbols(grids_g, spec)
        grids_t, valid_t, bw_t = _equalized_data_symbols(grids_t, spec)

    constellation = spec.constellation
    evm_gen = median_evm(grids_g, constellation, valid_g)
    evm_target = median_evm(grids_t, constellation, valid_t)
    hist_g, dropped_g = constellation_histogram(grids_g, valid_g)
    hist_t, dropped_t = constellation_histogram(grids_t, valid_t)

    prof_g, max_g = _median_cp_profiles(gen_waveforms, spec, profile_sample)
    prof_t, max_t = _median_cp_profiles(target_waveforms, spec, profile_sample)
    r_gen = float(np.median(max_g))
    r_target = float(np.median(max_t))
    if r_target == 0:
        raise ValueError("target correlation median is zero")
    relerr = abs(r_gen - r_target) / abs(r_target) * 100.0

    return EvalReport(
        psd_distance=distance,
        evm_db_gen=evm_gen,
        evm_db_target=evm_target,
        cp_relerr_pct=relerr,
        cp_max_median_gen=r_gen,
        cp_max_median_target=r_target,
        constellation_hist_gen=hist_g,
        constellation_dropped_gen=dropped_g,
        constellation_hist_target=hist_t,
        constellation_dropped_target=dropped_t,
        coherence_bw_gen=bw_g,
        coherence_bw_target=bw_t,
        psd_freqs=psd_t.freqs,
        psd_gen=psd_g.values,
        psd_target=psd_t.values,
        cp_profile_gen=prof_g,
        cp_profile_target=prof_t,
        cp_peak_positions=cp_expected_peaks(spec),
        meta={
            "spec": spec.to_dict(),
            "count_gen": int(gen_waveforms.shape[0]),
            "count_target": int(target_waveforms.shape[0]),
            "multitaper_nw": MT_NW,
            "multitaper_tapers": MT_TAPERS,
            "cp_correlation": "energy-normalized; lag 0 = prefix on its own symbol tail",
        },
    )
