"""Evaluation-suite tests: PSD, distance, EVM, histograms, prefix correlation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ofdmgen import metrics, modem
from ofdmgen.datasets import generate_waveform_array, preset_spec
from ofdmgen.metrics import (
    Psd,
    constellation_histogram,
    cp_crosscorr,
    cp_expected_peaks,
    cp_max_correlation,
    cp_relerr,
    demodulate_set,
    evaluate,
    evm_db,
    median_evm,
    median_psd,
    multitaper_psd,
    psd_geodesic_distance,
)
from ofdmgen.modem import WaveformSpec, build_constellation, generate_waveform, waveform_rng


def white_noise(count, length, seed):
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((count, length)) + 1j * rng.standard_normal((count, length))) / np.sqrt(2)


class TestMultitaperPsd:
    def test_bin_count_next_pow2(self):
        p = multitaper_psd(white_noise(1, 960, 0)[0])
        assert p.values.size == 1024
        assert p.freqs[0] == -0.5 and p.freqs[-1] < 0.5

    def test_white_noise_flat_and_integral(self):
        wfs = white_noise(200, 960, 8)
        p = median_psd(wfs)
        level = p.values.mean()
        assert np.max(np.abs(10 * np.log10(p.values / level))) < 3.0
        integral = np.mean(
            [multitaper_psd(wfs[i]).values.sum() / 1024 for i in range(100)]
        )
        assert integral == pytest.approx(1.0, rel=0.02)

    def test_pure_tone_peak(self):
        n = np.arange(960)
        p = multitaper_psd(np.exp(2j * np.pi * 0.25 * n))
        assert p.freqs[np.argmax(p.values)] == pytest.approx(0.25)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            multitaper_psd(np.array([]))


class TestMedianPsd:
    def test_single_waveform_identity(self):
        w = white_noise(1, 960, 1)
        assert np.allclose(median_psd(w).values, multitaper_psd(w[0]).values, rtol=1e-6)

    def test_identical_set(self):
        w = np.tile(white_noise(1, 960, 2), (5, 1))
        assert np.allclose(median_psd(w).values, multitaper_psd(w[0]).values, rtol=1e-6)

    def test_target_set_shape(self):
        # occupied band flat, notch at DC, steep edges down to the noise floor
        spec = preset_spec("complexity-256-medium")
        wfs = generate_waveform_array(spec, 256, 31)
        p = median_psd(wfs)
        half_width = spec.allocation.n_occupied / 2 / spec.symbol_len
        occ = (np.abs(p.freqs) < half_width - 0.01) & (np.abs(p.freqs) > 0.01)
        out = np.abs(p.freqs) > half_width + 0.02
        band = np.median(p.values[occ])
        assert np.median(p.values[out]) < band / 100  # >20 dB edge contrast
        dc = p.values[np.argmin(np.abs(p.freqs))]
        assert dc < 0.5 * band  # DC notch
        assert np.max(np.abs(10 * np.log10(p.values[occ] / band))) < 1.5

    def test_mixed_lengths_rejected(self):
        with pytest.raises(ValueError):
            median_psd(np.zeros(960, dtype=complex))


def flat_psd(values):
    values = np.asarray(values, dtype=float)
    return Psd(values, (np.arange(values.size) - values.size // 2) / values.size)


class TestGeodesicDistance:
    def test_identical_zero(self):
        p = flat_psd(np.random.default_rng(0).uniform(0.5, 2.0, 1024))
        assert psd_geodesic_distance(p, p) == 0.0

    @given(st.floats(min_value=1e-6, max_value=1e6))
    @settings(max_examples=30, deadline=None)
    def test_scale_invariance(self, c):
        vals = np.random.default_rng(1).uniform(0.1, 10.0, 512)
        p, q = flat_psd(vals), flat_psd(c * vals)
        assert psd_geodesic_distance(q, p) < 1e-12

    def test_scale_factor_cancels_between_spectra(self):
        rng = np.random.default_rng(2)
        p = flat_psd(rng.uniform(0.1, 10.0, 512))
        q = flat_psd(rng.uniform(0.1, 10.0, 512))
        d1 = psd_geodesic_distance(q, p)
        d2 = psd_geodesic_distance(flat_psd(7.3 * q.values), p)
        assert d1 == pytest.approx(d2, abs=1e-12)

    def test_half_bins_analytic(self):
        k = 1024
        pt = flat_psd(np.ones(k))
        pg = flat_psd(np.concatenate([np.full(k // 2, np.e), np.full(k // 2, 1 / np.e)]))
        assert psd_geodesic_distance(pg, pt) == pytest.approx(1.0, abs=1e-9)

    def test_symmetry_and_nonnegativity(self):
        rng = np.random.default_rng(3)
        p, q = flat_psd(rng.uniform(0.1, 10, 256)), flat_psd(rng.uniform(0.1, 10, 256))
        assert psd_geodesic_distance(p, q) == pytest.approx(psd_geodesic_distance(q, p))
        assert psd_geodesic_distance(p, q) > 0

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            psd_geodesic_distance(flat_psd(np.ones(64)), flat_psd(np.ones(128)))

    def test_nonpositive_rejected(self):
        p = flat_psd(np.ones(64))
        bad = Psd(np.zeros(64) - 1.0, p.freqs)
        with pytest.raises(ValueError):
            psd_geodesic_distance(bad, p)


class TestEvm:
    def test_exact_match_floor(self):
        c = build_constellation(16)
        assert evm_db(c.points.copy(), c) == -150.0

    def test_uniform_offset(self):
        c = build_constellation(16)
        assert evm_db(c.points + 0.1, c) == pytest.approx(-20.0, abs=1e-9)

    def test_calibrated_awgn(self):
        spec = WaveformSpec(128, alloc_class="medium", target_evm_db=-25.0)
        wfs = generate_waveform_array(spec, 500, 17)
        grids = demodulate_set(wfs, spec)
        med = median_evm(grids, spec.constellation)
        assert -25.5 < med < -24.5

    def test_monotone_in_sigma(self):
        spec = WaveformSpec(128, alloc_class="medium", target_evm_db=None)
        rng = np.random.default_rng(0)
        base, _, _ = generate_waveform(spec, waveform_rng(1, 0))
        meds = []
        for sigma in (0.02, 0.05, 0.1):
            vals = [
                evm_db(modem.demodulate(modem.add_awgn(base, sigma, rng), spec),
                       spec.constellation)
                for _ in range(50)
            ]
            meds.append(np.median(vals))
        assert meds[0] < meds[1] < meds[2]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            evm_db(np.array([]), build_constellation(4))


class TestConstellationHistogram:
    def test_all_at_origin(self):
        hist, dropped = constellation_histogram(np.zeros(1000, dtype=complex))
        assert hist.sum() == 1000 and dropped == 0
        assert (hist > 0).sum() == 1

    def test_noiseless_16qam_16_bins(self):
        spec = WaveformSpec(128, alloc_class="medium", target_evm_db=None)
        grids = demodulate_set(generate_waveform_array(spec, 50, 23), spec)
        hist, dropped = constellation_histogram(grids)
        assert dropped == 0
        assert (hist > 0).sum() == 16

    def test_out_of_region_dropped(self):
        sym = np.array([0.0 + 0.0j, 2.0 + 0.0j, -1.6j])
        hist, dropped = constellation_histogram(sym)
        assert hist.sum() == 1 and dropped == 2

    def test_totals_invariant(self):
        sym = np.random.default_rng(0).standard_normal(5000) * (1 + 1j)
        hist, dropped = constellation_histogram(sym)
        assert hist.sum() + dropped == 5000


class TestCyclicPrefix:
    def test_noiseless_peak_location_and_value(self):
        spec = WaveformSpec(128, alloc_class="small", target_evm_db=None)
        w, _, _ = generate_waveform(spec, waveform_rng(2, 0))
        profiles, peak = cp_crosscorr(w, spec)
        assert peak == pytest.approx(1.0, abs=1e-9)
        expected = cp_expected_peaks(spec)
        for i in range(spec.n_symbols):
            assert np.argmax(profiles[i]) == expected[i]

    def test_white_noise_small_max(self):
        # Monte-Carlo bound: with 32-sample prefixes the noise maxima sit
        # near 0.5 and never approach the exact-copy value of 1
        spec = WaveformSpec(128, alloc_class="small")
        maxima = cp_max_correlation(white_noise(100, 960, 5), spec)
        assert maxima.max() < 0.75
        assert np.median(maxima) < 0.6

    def test_relerr_identity(self):
        spec = WaveformSpec(128, alloc_class="small")
        wfs = generate_waveform_array(spec, 32, 6)
        assert cp_relerr(wfs, wfs, spec) == 0.0

    def test_relerr_arithmetic(self):
        # medians 0.9 vs 1.0 -> 10%
        r_gen, r_target = 0.9, 1.0
        assert abs(r_gen - r_target) / abs(r_target) * 100 == pytest.approx(10.0)

    def test_relerr_independent_sets(self):
        spec = preset_spec("complexity-128-small")
        a = generate_waveform_array(spec, 256, 71)
        b = generate_waveform_array(spec, 256, 72)
        assert cp_relerr(a, b, spec) < 1.0

    def test_length_mismatch(self):
        spec = WaveformSpec(128)
        with pytest.raises(ValueError):
            cp_crosscorr(np.zeros(100, dtype=complex), spec)


class TestEvaluate:
    def test_identical_sets(self):
        spec = preset_spec("complexity-128-small")
        wfs = generate_waveform_array(spec, 64, 3)
        rep = evaluate(wfs, wfs, spec)
        assert rep.psd_distance == 0.0
        assert rep.cp_relerr_pct == 0.0
        assert rep.evm_db_gen == rep.evm_db_target
        assert np.array_equal(rep.constellation_hist_gen, rep.constellation_hist_target)

    def test_fields_finite(self):
        spec = preset_spec("complexity-128-small")
        rep = evaluate(
            generate_waveform_array(spec, 48, 4),
            generate_waveform_array(spec, 48, 5),
            spec,
        )
        for v in rep.summary().values():
            assert np.isfinite(v)
        assert rep.cp_relerr_pct >= 0
        assert rep.constellation_hist_gen.shape == (150, 150)

    def test_channel_dataset_reports_coherence(self):
        spec = preset_spec("channel-etu300")
        rep = evaluate(
            generate_waveform_array(spec, 24, 6),
            generate_waveform_array(spec, 24, 7),
            spec,
        )
        assert rep.coherence_bw_gen.shape == (24,)
        assert np.all(np.isfinite(rep.coherence_bw_gen))
        assert np.isfinite(rep.evm_db_gen)

    def test_report_json_round_trip(self, tmp_path):
        spec = preset_spec("complexity-128-small")
        wfs = generate_waveform_array(spec, 32, 8)
        rep = evaluate(wfs, generate_waveform_array(spec, 32, 9), spec)
        path = tmp_path / "report.json"
        rep.save(path)
        back = metrics.EvalReport.load(path)
        assert back.psd_distance == pytest.approx(rep.psd_distance)
        assert np.array_equal(back.constellation_hist_gen, rep.constellation_hist_gen)
        assert back.meta["multitaper_tapers"] == 7

    def test_empty_rejected(self):
        spec = preset_spec("complexity-128-small")
        with pytest.raises(ValueError):
            evaluate(np.zeros((0, 960)), np.zeros((1, 960)), spec)
