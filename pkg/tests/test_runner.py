from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modemlab.channel import db_to_linear
from modemlab.experiments.config import EXPERIMENTS, config_from_mapping, default_config
from modemlab.experiments.runner import (
    BerCount,
    Scheme,
    _audit_task,
    alpha_wave_values,
    audit_row,
    build_scheme,
    cond_rows,
    inband_capacity,
    interleave_alpha,
    largest_passing,
    measure_alpha,
    measure_ber,
    parallel_map,
    power_curve_flags,
    profile_scheme,
    run_ber_sweep,
    run_capacity_audit,
    run_cond_study,
    run_experiment,
    run_fig1,
    run_fig3,
    run_fig6a,
    superposition_alpha,
    verdict,
    wilson_interval,
)
from modemlab.infotheory import spectral_efficiency
from modemlab.ofdm import OfdmConfig, as_modem_config
from modemlab.signals import SampledSignal, SubcarrierSpec, TsnmtSymbolSpec
from modemlab.tsnmt import ModemConfig, Variant, tsnmt_s_config

from oracles import binomial_sigma, bpsk_ber

SEED = 20240601

# pilot run: TS-NMT/S H=8, 10**4 random BPSK symbols, seed 20240601
ALPHA_WAVE_H8 = 7.971909279792027


class TestPlumbing:
    def test_parallel_map_keeps_order(self):
        assert parallel_map(abs, [-3, 1, -2, 5], jobs=3) == [3, 1, 2, 5]

    @given(st.integers(0, 2000), st.integers(1, 2000))
    def test_wilson_contains_estimate(self, errors, extra):
        n = errors + extra
        lo, hi = wilson_interval(errors, n)
        assert 0.0 <= lo <= errors / n <= hi <= 1.0

    def test_wilson_empty(self):
        assert all(math.isnan(v) for v in wilson_interval(0, 0))

    @given(st.integers(0, 12), st.integers(1, 12))
    def test_largest_passing_matches_scan(self, threshold, top):
        calls = []

        def pred(b):
            calls.append(b)
            return b <= threshold

        assert largest_passing(pred, top) == min(threshold, top)
        assert len(calls) <= 2 + math.ceil(math.log2(top + 1))

    def test_build_scheme(self):
        modem = default_config("fig6a").modem
        assert build_scheme("ofdm", modem, subcarriers=4).layers == 1
        assert build_scheme("tsnmt_s", modem, subcarriers=4).layers == 4
        assert build_scheme("tsnmt_f", modem, subcarriers=6).modem.variant is Variant.F
        with pytest.raises(ValueError):
            build_scheme("qam", modem)


class TestBer:
    def test_noiseless(self):
        scheme = build_scheme("tsnmt_s", default_config("fig6d_ber").modem)
        count = measure_ber(scheme, math.inf, 500, SEED, "t")
        assert count.errors == 0 and count.ber == 0.0

    def test_ofdm_at_4db(self):
        scheme = build_scheme("ofdm", default_config("fig6d_ber").modem, subcarriers=8)
        count = measure_ber(scheme, 4.0, 100_000 // 8, SEED, "q4")
        p = bpsk_ber(4.0)
        assert abs(count.ber - p) <= 3 * binomial_sigma(p, count.bits)

    def test_conditioning_failure_is_erasure(self):
        sub = SubcarrierSpec(1.0, 2 * math.pi * 1000, 0.0, 2e-3)
        bad = ModemConfig(TsnmtSymbolSpec((sub, sub), 2e-3), (1.0, -1.0), 8, Variant.S, (), 16000.0)
        count = measure_ber(Scheme("bad", bad), 10.0, 100, SEED, "x")
        assert count.erasures == count.bits == 200 and math.isnan(count.ber)

    def test_ber_count(self):
        assert BerCount(100, 5, 50).ber == 0.1

    def test_golden_h4(self, golden):
        golden(run_ber_sweep(default_config("fig6d_ber")), "ber_h4.csv")

    def test_monotone_in_snr(self):
        rows = run_ber_sweep(default_config("fig6d_ber"))
        for scheme in ("ofdm", "tsnmt_s"):
            bers = [r["ber"] for r in rows if r["scheme"] == scheme]
            assert bers == sorted(bers, reverse=True)

    def test_min_bits_respected(self):
        cfg = config_from_mapping({"snr_grid_db": [5], "trials": 10, "ber": {"min_bits": 1001}}, "fig6d_ber")
        for row in run_ber_sweep(cfg):
            assert row["bits"] >= 1001


class TestFig1:
    def test_single_point(self):
        rows = run_fig1(config_from_mapping({"snr_grid_db": [0]}, "fig1"))
        assert len(rows) == 1
        assert rows[0]["spectral_efficiency"] <= 1.0 and rows[0]["shannon_se"] == 1.0

    def test_golden_full_grid(self, golden):
        golden(run_fig1(default_config("fig1")), "fig1_n16.csv")


class TestFig3:
    def test_single_layer_is_shannon(self):
        for row in run_fig3(default_config("fig3")):
            if row["layers"] == 1:
                assert row["spectral_efficiency"] == spectral_efficiency(db_to_linear(row["snr_db"]))

    def test_two_layers_snr_three(self):
        cfg = config_from_mapping({"snr_grid_db": [10 * math.log10(3)], "fig3": {"layers": [2], "beta": [1.0]}}, "fig3")
        assert run_fig3(cfg)[0]["spectral_efficiency"] == pytest.approx(4.0, rel=1e-12)

    def test_five_layers_at_unit_log(self):
        rows = [r for r in run_fig3(default_config("fig3")) if r["layers"] == 5 and r["snr_db"] == 0.0]
        assert rows[0]["spectral_efficiency"] == 5.0

    def test_three_series(self):
        assert {r["scheme"] for r in run_fig3(default_config("fig3"))} == {"L1", "L2", "L5"}


@pytest.fixture(scope="module")
def fig6a_rows():
    return run_fig6a(default_config("fig6a"))


@pytest.fixture(scope="module")
def audit_rows():
    return run_capacity_audit(default_config("capacity_audit"))


class TestFig6a:
    def test_golden(self, fig6a_rows, golden):
        golden(fig6a_rows, "power.csv")

    def test_ofdm_slope(self, fig6a_rows):
        pts = [(r["n_subcarriers"], r["mean_power_w"]) for r in fig6a_rows if r["scheme"] == "ofdm"]
        slope = np.polyfit(*zip(*pts), 1)[0]
        assert slope == pytest.approx(0.5, rel=0.01)

    def test_single_subcarrier_equal(self, fig6a_rows):
        powers = [r["mean_power_w"] for r in fig6a_rows if r["n_subcarriers"] == 1]
        assert max(powers) <= 1.01 * min(powers)

    def test_tsnmt_s_below_ofdm(self, fig6a_rows):
        assert power_curve_flags(fig6a_rows) == []

    def test_flags_report_violations(self):
        rows = [
            {"n_subcarriers": 2, "scheme": "ofdm", "mean_power_w": 1.0},
            {"n_subcarriers": 2, "scheme": "tsnmt_s", "mean_power_w": 1.5},
        ]
        assert power_curve_flags(rows) == [2]


class TestAlpha:
    def test_cancellation(self):
        s = SampledSignal(np.sin(np.linspace(0, 6, 100)), 100.0)
        assert superposition_alpha([s, SampledSignal(-s.samples, 100.0)]) == 0.0

    def test_interleave_equal_layers(self):
        a = SampledSignal(np.array([1.0, -1.0, 1.0]), 1.0)
        b = SampledSignal(np.array([-1.0, -1.0, 1.0]), 1.0)
        assert interleave_alpha([a, b]) == 1.0

    def test_zero_single_layer_power(self):
        z = SampledSignal(np.zeros(4), 1.0)
        with pytest.raises(ValueError):
            interleave_alpha([z, z])
        with pytest.raises(ValueError):
            superposition_alpha([z, z])

    def test_golden(self, golden):
        golden(measure_alpha(default_config("alpha_measure")), "alpha.csv")

    def test_wave_h8_frozen(self):
        values = alpha_wave_values(tsnmt_s_config(8), 10_000, SEED)
        alpha = float(np.mean(values))
        assert alpha == pytest.approx(ALPHA_WAVE_H8, rel=1e-12)
        assert alpha >= 0.0

    def test_range_flags(self):
        rows = measure_alpha(config_from_mapping({"trials": 200}, "alpha_measure"))
        sample, wave = rows
        assert sample["convention"] == "sample" and sample["in_alpha_range"]
        assert wave["convention"] == "wave" and wave["in_alpha_range"] == (0 <= wave["alpha"] <= 2)


class TestCond:
    def test_k_zero_row(self):
        rows = cond_rows(tsnmt_s_config(2, delay_step=1e-4), [0], 10.0, 500, SEED, 0.1)
        assert rows[0]["kappa_after"] == rows[0]["kappa_before"]
        assert rows[0]["ber_after"] == rows[0]["ber_before"]

    def test_orthogonal(self):
        rows = cond_rows(as_modem_config(OfdmConfig(2)), [0, 1], 10.0, 500, SEED, 0.0)
        for row in rows:
            assert row["kappa_before"] == pytest.approx(1.0, abs=1e-6)
            assert row["kappa_after"] == pytest.approx(1.0, abs=1e-6)

    def test_near_coincident_reduced(self):
        rows = cond_rows(tsnmt_s_config(2, delay_step=1e-5), [2], 10.0, 200, SEED, 0.01)
        assert rows[0]["kappa_after"] < rows[0]["kappa_before"]

    @pytest.mark.slow
    def test_golden(self, golden):
        rows = run_cond_study(default_config("cond_study"))
        golden(rows, "cond.csv")
        for row in rows:
            assert row["kappa_after"] <= row["kappa_before"]


class TestAudit:
    def test_golden(self, audit_rows, golden):
        golden(audit_rows, "capacity_audit.csv")

    def test_ofdm_below_shannon(self, audit_rows):
        assert [r["verdict"] for r in audit_rows if r["scheme"] == "ofdm"] == ["below_shannon"] * 5

    def test_capacity_recomputed_from_measurements(self, audit_rows):
        modem = default_config("capacity_audit").modem
        for r in audit_rows:
            fs = build_scheme(r["scheme"], modem, native_ofdm=False).fs
            noise = r["power_w"] / db_to_linear(r["snr_db"])
            assert r["shannon_c"] == pytest.approx(inband_capacity(r["power_w"], noise, r["bandwidth_hz"], fs), rel=1e-12)
            assert r["verdict"] in ("below_shannon", "above_shannon", "inconclusive")

    def test_zero_noise_row(self):
        cfg = default_config("capacity_audit")
        cfg.audit.max_alphabet_bits = 4
        row = _audit_task(("ofdm", cfg.modem, math.inf, cfg.audit, cfg.trials, cfg.seed))
        scheme = build_scheme("ofdm", cfg.modem, alphabet_bits=4, native_ofdm=False)
        assert row["measured_rate"] == pytest.approx(scheme.modem.raw_bit_rate, rel=1e-12)
        assert math.isinf(row["shannon_c"]) and row["verdict"] == "below_shannon"

    def test_corrupted_power_changes_verdict(self):
        cfg = default_config("capacity_audit")
        scheme = build_scheme("tsnmt_s", cfg.modem, alphabet_bits=1, native_ofdm=False)
        profile = profile_scheme(scheme, 64, 0.99, SEED)
        noise = profile.power_w / 100.0
        rate = 6400.0
        honest = audit_row(20.0, "tsnmt_s", profile, noise, rate, rate, rate)
        corrupt = audit_row(20.0, "tsnmt_s", dataclasses.replace(profile, power_w=profile.power_w * 1e-4),
                            noise, rate, rate, rate)
        assert corrupt["shannon_c"] < honest["shannon_c"]
        assert honest["verdict"] == "below_shannon" and corrupt["verdict"] == "above_shannon"

    @pytest.mark.parametrize("c,low,high,converged,expected", [
        (math.inf, 5.0, 9.0, True, "below_shannon"),
        (10.0, 5.0, 9.0, True, "below_shannon"),
        (10.0, 11.0, 12.0, True, "above_shannon"),
        (10.0, 9.0, 11.0, True, "inconclusive"),
        (10.0, 1.0, 2.0, False, "inconclusive"),
    ])
    def test_verdict_rules(self, c, low, high, converged, expected):
        assert verdict(c, low, high, converged) == expected

    def test_inband_capacity(self):
        # noise spread over fs/2; a band of fs/4 keeps half of it
        assert inband_capacity(1.5, 1.0, 250.0, 1000.0) == pytest.approx(500.0, rel=1e-12)
        assert inband_capacity(1.0, 0.0, 10.0, 100.0) == math.inf


_SMALL = {
    "fig1": {"snr_grid_db": [0, 3], "trials": 200, "codebook": {"block_lengths": [8, 16], "max_bits": 8}},
    "fig3": {},
    "fig6a": {"trials": 200},
    "fig6b_capacity": {"snr_grid_db": [0, 10], "audit": {"min_bits": 2000, "max_alphabet_bits": 4, "spectrum_symbols": 32}},
    "capacity_audit": {"snr_grid_db": [0, 10], "audit": {"min_bits": 2000, "max_alphabet_bits": 4, "spectrum_symbols": 32}},
    "fig6c_stabilized": {"trials": 100, "cond": {"delay_fractions": [0.25, 0.1], "k_values": [0, 1]}, "ber": {"min_bits": 2000}},
    "cond_study": {"trials": 100, "cond": {"delay_fractions": [0.25, 0.1], "k_values": [0, 1]}, "ber": {"min_bits": 2000}},
    "fig6d_ber": {"snr_grid_db": [0, 4, 8], "trials": 100, "ber": {"min_bits": 4000}},
    "alpha_measure": {"trials": 500},
}


class TestDeterminism:
    def test_every_experiment_covered(self):
        assert set(_SMALL) == set(EXPERIMENTS)

    @pytest.mark.parametrize("name", EXPERIMENTS)
    def test_parallelism_invariant(self, name, tmp_path):
        outputs = []
        for jobs in (1, 8):
            cfg = config_from_mapping(dict(_SMALL[name], jobs=jobs, output_dir=str(tmp_path / f"j{jobs}")), name)
            outputs.append(run_experiment(cfg).read_bytes())
        assert outputs[0] == outputs[1]
