"""Waveform synthesis and demodulation unit tests."""

import numpy as np
import pytest

from ofdmgen import modem
from ofdmgen.modem import (
    WaveformSpec,
    add_awgn,
    build_allocation,
    build_constellation,
    calibrate_noise_sigma,
    demodulate,
    generate_waveform,
    map_bits,
    modulate,
    waveform_rng,
    zadoff_chu_pilot,
)


def measured_evm_db(waveform, spec):
    """Independent EVM oracle: demodulate and compare to nearest points."""
    meas = demodulate(waveform, spec)
    ideal = spec.constellation.points[modem.hard_decide(meas, spec.constellation)]
    ref = np.mean(np.abs(spec.constellation.points) ** 2)
    ev = np.sqrt(np.mean(np.abs(meas - ideal) ** 2) / ref)
    return 20 * np.log10(max(ev, 1e-300))


class TestConstellation:
    def test_qpsk_points(self):
        c = build_constellation(4)
        expected = {(s1 + 1j * s2) / np.sqrt(2) for s1 in (-1, 1) for s2 in (-1, 1)}
        assert {complex(np.round(p, 12)) for p in c.points} == {
            complex(np.round(p, 12)) for p in expected
        }

    def test_16qam_levels(self):
        c = build_constellation(16)
        levels = sorted(set(np.round(c.points.real, 10)))
        assert np.allclose(levels, np.array([-3, -1, 1, 3]) / np.sqrt(10))

    @pytest.mark.parametrize("order", [4, 16, 32, 64])
    def test_unit_average_power(self, order):
        c = build_constellation(order)
        assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0, abs=1e-12)
        assert len(c.points) == order

    @pytest.mark.parametrize("order", [4, 16, 64])
    def test_gray_adjacency_square(self, order):
        # exhaustive over all grid-adjacent pairs
        c = build_constellation(order)
        scale = np.sqrt(2 * (order - 1) / 3)
        coord = {
            (round(p.real * scale), round(p.imag * scale)): i
            for i, p in enumerate(c.points)
        }
        for (x, y), i in coord.items():
            for dx, dy in ((2, 0), (0, 2)):
                j = coord.get((x + dx, y + dy))
                if j is not None:
                    assert np.sum(c.bit_labels[i] != c.bit_labels[j]) == 1

    def test_cross_32_layout(self):
        c = build_constellation(32)
        # mean power of the 6x6-minus-corners integer grid is 20
        grid = c.points * np.sqrt(20)
        coords = {(round(p.real), round(p.imag)) for p in grid}
        assert len(coords) == 32
        assert (5, 5) not in coords and (-5, -5) not in coords
        codes = {tuple(row) for row in c.bit_labels}
        assert len(codes) == 32  # labels form a bijection

    def test_unsupported_order(self):
        with pytest.raises(ValueError):
            build_constellation(8)


class TestAllocation:
    def test_512_medium(self):
        a = build_allocation(512, "medium")
        assert a.n_occupied == 150
        assert (a.occupied > 256).sum() == 75 and (a.occupied <= 256).sum() == 75

    def test_256_medium(self):
        assert build_allocation(256, "medium").n_occupied == 75

    def test_128_small_rounding(self):
        a = build_allocation(128, "small")
        assert a.n_occupied == 19
        below = a.occupied[a.occupied > 64]
        above = a.occupied[a.occupied <= 64]
        assert len(below) == 10 and len(above) == 9

    def test_dc_excluded_and_contiguous(self):
        for n in (128, 256, 512):
            for cls in ("small", "medium", "large"):
                a = build_allocation(n, cls)
                assert 0 not in a.occupied
                centered = np.sort(((a.occupied + n // 2) % n) - n // 2)
                assert np.array_equal(np.diff(centered), np.ones(len(centered) - 1)) or (
                    np.diff(centered) == 1
                ).sum() == len(centered) - 2  # single gap at DC
                assert a.n_max == modem.MAX_OCCUPIED[n]

    def test_invalid_symbol_len(self):
        with pytest.raises(ValueError):
            build_allocation(100, "small")


class TestMapBits:
    def test_all_zero_bits(self):
        c = build_constellation(4)
        a = build_allocation(128, "small")
        bits = np.zeros(6 * a.n_occupied * 2, dtype=np.uint8)
        grid = map_bits(bits, c, a, 6)
        zero_point = c.points[c.code_to_index[0]]
        assert np.all(grid == zero_point)

    def test_round_trip(self):
        c = build_constellation(16)
        a = build_allocation(128, "small")
        rng = np.random.default_rng(0)
        bits = rng.integers(0, 2, 6 * a.n_occupied * 4, dtype=np.uint8)
        grid = map_bits(bits, c, a, 6)
        assert grid.shape == (6, 19)
        assert np.array_equal(modem.demap_symbols(grid, c), bits)

    def test_bit_count_mismatch(self):
        c = build_constellation(16)
        a = build_allocation(128, "small")
        with pytest.raises(ValueError):
            map_bits(np.zeros(10, dtype=np.uint8), c, a, 6)


class TestModulateDemodulate:
    def test_lengths(self):
        for n, expected in ((128, 960), (256, 1920), (512, 3840)):
            spec = WaveformSpec(n)
            assert spec.waveform_len == expected

    def test_cyclic_prefix_structure(self):
        spec = WaveformSpec(128, alloc_class="small", target_evm_db=None)
        w, _, _ = generate_waveform(spec, waveform_rng(3, 0))
        for i in range(6):
            block = w[i * 160: (i + 1) * 160]
            assert np.array_equal(block[:32], block[-32:])

    def test_single_subcarrier_is_exponential(self):
        spec = WaveformSpec(128, alloc_class=1, mod_order=4, target_evm_db=None)
        k = spec.allocation.occupied[0]
        grid = np.ones((6, 1), dtype=complex)
        w = modulate(grid, spec)
        body = w[32:160]
        n = np.arange(128)
        expected = np.exp(2j * np.pi * k * n / 128) / np.sqrt(128)
        assert np.abs(body - expected).max() < 1e-12

    def test_round_trip_exact(self):
        spec = WaveformSpec(256, alloc_class="large", mod_order=64)
        rng = np.random.default_rng(1)
        grid = rng.standard_normal((6, 113)) + 1j * rng.standard_normal((6, 113))
        back = demodulate(modulate(grid, spec), spec)
        assert np.abs(back - grid).max() < 1e-10

    def test_zeros(self):
        spec = WaveformSpec(128, alloc_class="small")
        grid = demodulate(np.zeros(960, dtype=complex), spec)
        assert np.all(grid == 0)

    def test_dimension_mismatch(self):
        spec = WaveformSpec(128, alloc_class="small")
        with pytest.raises(ValueError):
            modulate(np.zeros((6, 5), dtype=complex), spec)
        with pytest.raises(ValueError):
            demodulate(np.zeros(100, dtype=complex), spec)

    def test_noise_variance_preserved(self):
        # unitary DFT: per-bin error variance equals time-domain sigma^2
        spec = WaveformSpec(128, alloc_class="medium", target_evm_db=None)
        sigma = 0.1
        rng = np.random.default_rng(7)
        errs = []
        for i in range(100):  # 100 * 6 * 38 = 22800 symbols
            grid = map_bits(
                rng.integers(0, 2, spec.bits_per_waveform, dtype=np.uint8),
                spec.constellation, spec.allocation, spec.n_symbols,
            )
            w = modulate(grid, spec)
            noisy = add_awgn(w, sigma, rng)
            errs.append(demodulate(noisy, spec) - grid)
        var = np.mean(np.abs(np.concatenate(errs)) ** 2)
        assert var == pytest.approx(sigma**2, rel=0.05)


class TestNoise:
    def test_sigma_from_evm(self):
        assert calibrate_noise_sigma(-25.0) == pytest.approx(0.05623413, abs=1e-6)
        assert calibrate_noise_sigma(None) == 0.0
        assert calibrate_noise_sigma(float("-inf")) == 0.0
        assert calibrate_noise_sigma(-20.0) ** 2 == pytest.approx(0.01, abs=1e-15)
        with pytest.raises(ValueError):
            calibrate_noise_sigma(3.0)

    def test_sigma_zero_identity(self):
        w = np.ones(16, dtype=complex)
        out = add_awgn(w, 0.0, np.random.default_rng(0))
        assert np.array_equal(out, w)

    def test_noise_variance(self):
        rng = np.random.default_rng(11)
        w = np.zeros(1_000_000, dtype=complex)
        out = add_awgn(w, 0.3, rng)
        assert np.mean(np.abs(out) ** 2) == pytest.approx(0.09, rel=0.01)

    def test_deterministic_under_seed(self):
        w = np.ones(64, dtype=complex)
        a = add_awgn(w, 0.5, np.random.default_rng(42))
        b = add_awgn(w, 0.5, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_calibration_monte_carlo(self):
        # measured median EVM within +/-0.1 dB of the -25 dB target
        spec = WaveformSpec(128, alloc_class="medium", mod_order=16, target_evm_db=-25.0)
        med = np.median(
            [measured_evm_db(generate_waveform(spec, waveform_rng(13, i))[0], spec)
             for i in range(600)]
        )
        assert abs(med - (-25.0)) < 0.1


class TestPilot:
    def test_sequence_length_and_magnitude(self):
        zc = zadoff_chu_pilot(150)
        assert zc.size == 150
        assert np.allclose(np.abs(zc), 1.0, atol=1e-12)
        # prime root length: cyclic extension repeats the first element
        assert zc[149] == zc[0]

    def test_largest_prime(self):
        assert modem._largest_prime_below(150) == 149
        assert modem._largest_prime_below(38) == 37

    def test_minimum_width(self):
        with pytest.raises(ValueError):
            zadoff_chu_pilot(20)

    def test_pilot_row_substituted(self):
        spec = WaveformSpec(512, alloc_class="medium", target_evm_db=None, pilot_enabled=True)
        _, grid, _ = generate_waveform(spec, waveform_rng(5, 0))
        assert np.allclose(grid[3], zadoff_chu_pilot(150))
        assert not np.allclose(np.abs(grid[0]), 1.0)


class TestGenerateWaveform:
    def test_noiseless_evm_floor(self):
        spec = WaveformSpec(256, alloc_class="medium", target_evm_db=None)
        w, _, _ = generate_waveform(spec, waveform_rng(1, 0))
        assert measured_evm_db(w, spec) < -100

    def test_reproducible(self):
        spec = WaveformSpec(128, alloc_class="small")
        w1, g1, b1 = generate_waveform(spec, waveform_rng(9, 4))
        w2, g2, b2 = generate_waveform(spec, waveform_rng(9, 4))
        assert np.array_equal(w1, w2) and np.array_equal(g1, g2) and np.array_equal(b1, b2)

    def test_length(self):
        spec = WaveformSpec(256, alloc_class="medium")
        w, _, _ = generate_waveform(spec, waveform_rng(2, 0))
        assert w.size == 1920

    def test_average_power_parseval(self):
        # occupied/symbol_len plus the calibrated noise power, within 1%
        spec = WaveformSpec(128, alloc_class="medium", target_evm_db=-25.0)
        p = np.mean(
            [np.mean(np.abs(generate_waveform(spec, waveform_rng(21, i))[0]) ** 2)
             for i in range(400)]
        )
        expected = 38 / 128 + calibrate_noise_sigma(-25.0) ** 2
        assert p == pytest.approx(expected, rel=0.01)

    def test_bit_balance(self):
        spec = WaveformSpec(128, alloc_class="large")
        bits = np.concatenate(
            [generate_waveform(spec, waveform_rng(3, i))[2] for i in range(50)]
        )
        assert abs(bits.mean() - 0.5) < 0.01


class TestSpecValidation:
    def test_invalid_symbol_len(self):
        with pytest.raises(ValueError):
            WaveformSpec(100)

    def test_invalid_cp(self):
        with pytest.raises(ValueError):
            WaveformSpec(128, cp_fraction=0.3)

    def test_invalid_mod_order(self):
        with pytest.raises(ValueError):
            WaveformSpec(128, mod_order=8)

    def test_pilot_needs_width(self):
        with pytest.raises(ValueError):
            WaveformSpec(128, alloc_class="small", pilot_enabled=True)

    def test_pilot_position_bounds(self):
        with pytest.raises(ValueError):
            WaveformSpec(128, pilot_position=6)

    def test_dict_round_trip(self):
        from ofdmgen.channel import ChannelSpec

        spec = WaveformSpec(
            512, alloc_class="medium", mod_order=16, target_evm_db=-50.0,
            pilot_enabled=True, channel=ChannelSpec("ETU", 300.0, 7.68e6), seed=44,
        )
        assert WaveformSpec.from_dict(spec.to_dict()) == spec
        noiseless = WaveformSpec(128, target_evm_db=None)
        assert WaveformSpec.from_dict(noiseless.to_dict()) == noiseless
