from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modemlab.signals import (
    SampledSignal,
    Spectrum,
    SubcarrierSpec,
    TsnmtSymbolSpec,
    Waveform,
    base_waveforms,
    gen_base_subcarrier,
    interleave_overlap,
    magnitude_spectrum,
    mean_power,
    occupied_bandwidth,
    papr,
    papr_db,
    read_signal,
    sample_count,
    synthesize_symbol,
    write_signal,
)
from modemlab.tsnmt import fig5_config, tsnmt_s_config

from oracles import sample_subcarrier, sample_symbol

OMEGA_1K = 2 * math.pi * 1000.0
FS_64K = 64_000.0

# brute-force max/mean of the H=8 all-+1 single-frequency symbol, default layout
PAPR_H8_ALL_ONES = 2.8534280346055336

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


def _signal(values, fs=1.0) -> SampledSignal:
    return SampledSignal(np.asarray(values, dtype=float), fs)


class TestSampledSignal:
    def test_duration_matches_count(self):
        s = _signal(np.zeros(64), FS_64K)
        assert s.n == 64
        assert s.duration == pytest.approx(1e-3)

    def test_samples_are_read_only(self):
        s = _signal([1.0, 2.0])
        with pytest.raises(ValueError):
            s.samples[0] = 5.0

    @pytest.mark.parametrize("fs", [0.0, -1.0, math.nan])
    def test_rejects_bad_rate(self, fs):
        with pytest.raises(ValueError):
            _signal([1.0], fs)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            _signal([])

    def test_sample_count_requires_whole_samples(self):
        assert sample_count(1e-3, FS_64K) == 64
        with pytest.raises(ValueError):
            sample_count(1e-3, 64_500.0 + 0.3)


class TestSpecs:
    def test_subcarrier_validation(self):
        with pytest.raises(ValueError):
            SubcarrierSpec(1.0, OMEGA_1K, 0.0, 0.0)
        with pytest.raises(ValueError):
            SubcarrierSpec(1.0, OMEGA_1K, -1e-3, 1e-3)

    def test_first_delay_must_be_zero(self):
        sc = SubcarrierSpec(1.0, OMEGA_1K, 1e-4, 1e-3)
        with pytest.raises(ValueError):
            TsnmtSymbolSpec((sc,), 2e-3)

    def test_starts_inside_first_lifetime(self):
        a = SubcarrierSpec(1.0, OMEGA_1K, 0.0, 1e-3)
        b = SubcarrierSpec(1.0, OMEGA_1K, 1e-3, 1e-3)
        with pytest.raises(ValueError):
            TsnmtSymbolSpec((a, b), 2e-3)

    def test_period_covers_every_lifetime(self):
        a = SubcarrierSpec(1.0, OMEGA_1K, 0.0, 1e-3)
        b = SubcarrierSpec(1.0, OMEGA_1K, 5e-4, 1e-3)
        with pytest.raises(ValueError):
            TsnmtSymbolSpec((a, b), 1.2e-3)
        assert TsnmtSymbolSpec((a, b), 1.5e-3, Fraction(1)).n_subcarriers == 2

    @pytest.mark.parametrize("waveform", list(Waveform))
    def test_waveforms_have_no_dc(self, waveform):
        t = np.arange(1000) / 1000.0
        assert abs(float(np.mean(waveform(2 * math.pi * t)))) < 1e-9

    def test_spectrum_validation(self):
        with pytest.raises(ValueError):
            Spectrum(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            Spectrum(np.array([0.0, 1.0]), np.array([1.0, -1.0]))


class TestGenBaseSubcarrier:
    def test_full_window_is_plain_sine(self):
        s = gen_base_subcarrier(SubcarrierSpec(1.0, OMEGA_1K, 0.0, 1e-3), FS_64K, 1e-3)
        t = np.arange(64) / FS_64K
        assert s.n == 64
        np.testing.assert_allclose(s.samples, np.sin(OMEGA_1K * t), atol=1e-15)

    def test_zero_amplitude_is_all_zero(self):
        s = gen_base_subcarrier(SubcarrierSpec(0.0, OMEGA_1K, 0.0, 1e-3), FS_64K, 1e-3)
        assert not np.any(s.samples)

    def test_windowed_subcarrier_matches_per_sample_oracle(self):
        spec = SubcarrierSpec(1.0, OMEGA_1K, 0.25e-3, 0.5e-3)
        s = gen_base_subcarrier(spec, FS_64K, 1e-3)
        expected = sample_subcarrier(1.0, OMEGA_1K, 0.25e-3, 0.5e-3, FS_64K, 64)
        np.testing.assert_allclose(s.samples, expected, rtol=0, atol=1e-15)
        assert not np.any(s.samples[:16]) and not np.any(s.samples[48:])
        assert np.all(s.samples[17:32] != 0)

    def test_cosine_waveform(self):
        s = gen_base_subcarrier(SubcarrierSpec(2.0, OMEGA_1K, 0.0, 1e-3, Waveform.COSINE), FS_64K, 1e-3)
        assert s.samples[0] == 2.0

    def test_rejects_sub_nyquist_rate(self):
        with pytest.raises(ValueError):
            gen_base_subcarrier(SubcarrierSpec(1.0, OMEGA_1K, 0.0, 1e-3), 1000.0, 1e-3)

    def test_rejects_lifetime_past_period(self):
        with pytest.raises(ValueError):
            gen_base_subcarrier(SubcarrierSpec(1.0, OMEGA_1K, 0.5e-3, 1e-3), FS_64K, 1e-3)

    @given(
        delay_q=st.integers(0, 32),
        life_q=st.integers(1, 32),
        amplitude=st.floats(-10, 10, allow_nan=False),
    )
    def test_zero_outside_lifetime(self, delay_q, life_q, amplitude):
        delay, lifetime = delay_q / FS_64K, life_q / FS_64K
        s = gen_base_subcarrier(SubcarrierSpec(amplitude, OMEGA_1K, delay, lifetime), FS_64K, 1e-3)
        outside = np.ones(64, dtype=bool)
        outside[delay_q:delay_q + life_q] = False
        assert np.all(s.samples[outside] == 0.0)


class TestSynthesizeSymbol:
    def test_single_subcarrier_equals_base(self):
        sc = SubcarrierSpec(-1.0, OMEGA_1K, 0.0, 1e-3)
        spec = TsnmtSymbolSpec((sc,), 1e-3)
        np.testing.assert_array_equal(
            synthesize_symbol(spec, FS_64K).samples, gen_base_subcarrier(sc, FS_64K, 1e-3).samples
        )

    def test_half_period_pair_cancels_on_overlap(self):
        a = SubcarrierSpec(1.0, OMEGA_1K, 0.0, 2e-3)
        b = SubcarrierSpec(1.0, OMEGA_1K, 0.5e-3, 2e-3)
        s = synthesize_symbol(TsnmtSymbolSpec((a, b), 2.5e-3), FS_64K)
        overlap = s.samples[32:128]
        assert np.max(np.abs(overlap)) < 1e-12

    def test_fig5_layout_matches_pointwise_oracle(self):
        cfg = fig5_config()
        amps = [1.0, -1.0, -1.0, 1.0]
        spec = cfg.symbol.with_amplitudes(amps)
        s = synthesize_symbol(spec, cfg.fs)
        expected = sample_symbol(cfg.symbol.subcarriers, amps, cfg.fs, cfg.n_samples)
        np.testing.assert_allclose(s.samples, expected, rtol=0, atol=1e-12)

    @given(st.lists(st.sampled_from([-3.0, -1.0, 1.0, 3.0]), min_size=4, max_size=4))
    def test_linearity(self, amps):
        cfg = fig5_config()
        spec = cfg.symbol.with_amplitudes(amps)
        parts = [gen_base_subcarrier(sc, cfg.fs, cfg.symbol_period).samples for sc in spec.subcarriers]
        np.testing.assert_allclose(synthesize_symbol(spec, cfg.fs).samples, np.sum(parts, axis=0), rtol=0, atol=1e-12)

    def test_base_waveform_matrix_shape(self):
        cfg = tsnmt_s_config(3)
        W = base_waveforms(cfg.symbol.subcarriers, cfg.fs, cfg.symbol_period)
        assert W.shape == (3, cfg.n_samples)


class TestInterleave:
    def test_two_layers(self):
        out = interleave_overlap([_signal([1.0, 2.0]), _signal([3.0, 4.0])])
        np.testing.assert_array_equal(out.samples, [1.0, 3.0, 2.0, 4.0])
        assert out.sample_rate == 2.0

    def test_single_layer_is_identity(self):
        out = interleave_overlap([_signal([1.0, 2.0, 3.0])])
        np.testing.assert_array_equal(out.samples, [1.0, 2.0, 3.0])

    def test_three_layers_round_robin(self):
        layers = [_signal([1.0, 2.0]), _signal([3.0, 4.0]), _signal([5.0, 6.0])]
        out = interleave_overlap(layers)
        np.testing.assert_array_equal(out.samples, [1, 3, 5, 2, 4, 6])
        assert mean_power(out) == (1 + 4 + 9 + 16 + 25 + 36) / 6
        assert mean_power(out) == pytest.approx(np.mean([mean_power(s) for s in layers]), rel=1e-15)

    def test_mismatched_layers_rejected(self):
        with pytest.raises(ValueError):
            interleave_overlap([_signal([1.0, 2.0]), _signal([1.0])])
        with pytest.raises(ValueError):
            interleave_overlap([_signal([1.0], 1.0), _signal([1.0], 2.0)])
        with pytest.raises(ValueError):
            interleave_overlap([])

    @given(st.integers(1, 5).flatmap(lambda L: st.tuples(
        st.just(L), st.integers(1, 20).flatmap(lambda n: st.lists(st.lists(finite, min_size=n, max_size=n), min_size=L, max_size=L))
    )))
    def test_power_law_is_exact(self, case):
        L, rows = case
        layers = [_signal(r) for r in rows]
        out = interleave_overlap(layers)
        exact = sum(Fraction(float(v) * float(v)) for r in rows for v in r) / (L * len(rows[0]))
        # the interleaved power is the correctly rounded mean of all squared samples
        squares = [float(v) * float(v) for r in rows for v in r]
        assert mean_power(out) == math.fsum(squares) / len(squares)
        assert mean_power(out) == pytest.approx(float(exact), rel=1e-15, abs=1e-300)
        assert mean_power(out) == pytest.approx(float(np.mean([mean_power(s) for s in layers])), rel=1e-14, abs=1e-300)


class TestPower:
    def test_zero_signal(self):
        assert mean_power(_signal(np.zeros(10))) == 0.0

    @pytest.mark.parametrize("n", [1, 7, 100])
    def test_constant(self, n):
        assert mean_power(_signal(np.full(n, 2.0))) == 4.0

    def test_full_period_sine(self):
        t = np.arange(64) / 64.0
        assert mean_power(_signal(np.sin(2 * math.pi * t), 64.0)) == pytest.approx(0.5, abs=1e-9)


class TestPapr:
    def test_constant_is_one(self):
        assert papr(_signal(np.full(5, -3.0))) == 1.0

    def test_full_period_sine_is_two(self):
        t = np.arange(64) / 64.0
        assert papr(_signal(np.sin(2 * math.pi * t), 64.0)) == pytest.approx(2.0, abs=1e-6)
        assert papr_db(_signal(np.sin(2 * math.pi * t), 64.0)) == pytest.approx(10 * math.log10(2), abs=1e-6)

    def test_zero_power_rejected(self):
        with pytest.raises(ValueError):
            papr(_signal(np.zeros(4)))

    def test_h8_all_ones_symbol(self):
        cfg = tsnmt_s_config(8)
        s = synthesize_symbol(cfg.symbol.with_amplitudes([1.0] * 8), cfg.fs)
        brute = max(v * v for v in s.samples.tolist()) / (math.fsum(v * v for v in s.samples.tolist()) / s.n)
        assert papr(s) == pytest.approx(brute, rel=1e-12)
        assert papr(s) == pytest.approx(PAPR_H8_ALL_ONES, rel=1e-9)
        assert papr(s) < 8 * 2.0

    @given(st.lists(finite, min_size=1, max_size=50).filter(lambda v: any(x != 0 for x in v)))
    def test_bounds(self, values):
        s = _signal(values)
        if mean_power(s) == 0:
            return
        assert 1.0 - 1e-12 <= papr(s) <= s.n * (1 + 1e-12)


class TestSpectrum:
    def test_constant_signal_is_dc(self):
        spec = magnitude_spectrum(_signal(np.full(32, 1.5), 32.0))
        assert spec.magnitudes[0] == pytest.approx(1.5)
        assert np.all(spec.magnitudes[1:] < 1e-12)

    def test_bin_aligned_sine(self):
        t = np.arange(64) / FS_64K
        spec = magnitude_spectrum(_signal(np.sin(2 * math.pi * 5000.0 * t), FS_64K))
        peak = int(np.argmax(spec.magnitudes))
        assert spec.frequencies[peak] == 5000.0
        others = np.delete(spec.magnitudes, peak)
        assert np.all(others < 1e-9 * spec.magnitudes[peak])
        assert spec.resolution == 1000.0

    def test_parseval(self):
        x = np.random.default_rng(3).standard_normal(101)
        spec = magnitude_spectrum(_signal(x))
        assert float(np.sum(spec.magnitudes**2)) == pytest.approx(mean_power(_signal(x)), rel=1e-12)

    @given(st.integers(0, 127))
    @settings(max_examples=40)
    def test_circular_shift_invariance(self, shift):
        cfg = fig5_config()
        s = synthesize_symbol(cfg.symbol.with_amplitudes([1.0, -1.0, 1.0, 1.0]), cfg.fs)
        a = magnitude_spectrum(s).magnitudes
        b = magnitude_spectrum(SampledSignal(np.roll(s.samples, shift), s.sample_rate)).magnitudes
        np.testing.assert_allclose(b, a, rtol=1e-9, atol=1e-9 * a.max())


class TestOccupiedBandwidth:
    def test_single_bin(self):
        spec = Spectrum(np.array([0.0, 100.0, 200.0]), np.array([0.0, 1.0, 0.0]))
        assert occupied_bandwidth(spec, 0.99) == 100.0

    def test_two_equal_bins(self):
        spec = Spectrum(np.array([0.0, 100.0, 200.0]), np.array([0.0, 1.0, 1.0]))
        assert occupied_bandwidth(spec, 0.4) == 100.0
        assert occupied_bandwidth(spec, 0.5) == 100.0
        assert occupied_bandwidth(spec, 0.51) == 200.0

    def test_zero_energy_rejected(self):
        with pytest.raises(ValueError):
            occupied_bandwidth(Spectrum(np.array([0.0, 1.0]), np.zeros(2)))

    @pytest.mark.parametrize("fraction", [0.0, 1.5])
    def test_fraction_range(self, fraction):
        with pytest.raises(ValueError):
            occupied_bandwidth(Spectrum(np.array([0.0, 1.0]), np.ones(2)), fraction)

    @given(st.lists(st.floats(0, 10), min_size=2, max_size=30).filter(lambda m: sum(v * v for v in m) > 0),
           st.floats(0.01, 1.0), st.floats(0.01, 1.0))
    def test_monotone_in_fraction(self, mags, f1, f2):
        spec = Spectrum(np.arange(len(mags), dtype=float), np.array(mags))
        lo, hi = sorted((f1, f2))
        assert occupied_bandwidth(spec, lo) <= occupied_bandwidth(spec, hi)

    def test_shifted_layouts_share_bandwidth(self):
        # power spectrum averaged over every +-1 amplitude pattern, fixed period, varying stagger
        Td, T, fs = 2e-3, 4e-3, 64_000.0
        widths = []
        for step in (0.0, Td / 16, Td / 8, Td / 4):
            subs = tuple(SubcarrierSpec(1.0, OMEGA_1K, h * step, Td) for h in range(4))
            spec = TsnmtSymbolSpec(subs, T)
            power = 0.0
            for signs in itertools.product((1.0, -1.0), repeat=4):
                power = power + magnitude_spectrum(synthesize_symbol(spec.with_amplitudes(signs), fs)).magnitudes ** 2
            avg = Spectrum(np.fft.rfftfreq(int(T * fs), 1 / fs), np.sqrt(power / 16))
            widths.append(occupied_bandwidth(avg, 0.95))
        resolution = 1 / T
        assert max(widths) - min(widths) <= resolution


class TestSignalIO:
    def test_round_trip_bit_exact(self, tmp_path):
        x = np.random.default_rng(11).standard_normal(257) * 1e-7
        s = SampledSignal(x, 48_000.0)
        path = tmp_path / "sig.txt"
        write_signal(path, s)
        back = read_signal(path)
        assert back.sample_rate == s.sample_rate
        np.testing.assert_array_equal(back.samples, s.samples)
        lines = path.read_text().splitlines()
        assert lines[0] == "# sample_rate_hz=48000.0" and lines[1] == "# n=257"

    def test_header_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# sample_rate_hz=10.0\n# n=3\n1.0\n2.0\n")
        with pytest.raises(ValueError):
            read_signal(path)
