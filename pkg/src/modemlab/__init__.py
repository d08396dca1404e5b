"""Time-shifted non-orthogonal multicarrier modem and capacity toolkit."""
from __future__ import annotations

from .channel import NoiseSpec, awgn_apply, calibrate_noise_power, derive_stream, ebn0_noise_power, gaussian_noise
from .codebook import Codebook, RatePoint, build_codebook, measure_rate_point, min_rms_decode
from .infotheory import (
    ChannelParams,
    MiEstimate,
    OverlapCapacityParams,
    discrete_entropy,
    empirical_mutual_information,
    gaussian_diff_entropy,
    shannon_capacity,
    tds_capacity,
)
from .ofdm import OfdmConfig, ofdm_demodulate, ofdm_modulate
from .signals import (
    SampledSignal,
    Spectrum,
    SubcarrierSpec,
    TsnmtSymbolSpec,
    Waveform,
    gen_base_subcarrier,
    interleave_overlap,
    magnitude_spectrum,
    mean_power,
    papr,
    synthesize_symbol,
)
from .tsnmt import (
    ConditioningError,
    ModemConfig,
    condition_number,
    demodulate,
    gram_matrix,
    modulate,
    solve_amplitudes,
    stabilize,
    tsnmt_f_config,
    tsnmt_s_config,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "Codebook",
    "ConditioningError",
    "MiEstimate",
    "ModemConfig",
    "NoiseSpec",
    "OfdmConfig",
    "OverlapCapacityParams",
    "RatePoint",
    "SampledSignal",
    "Spectrum",
    "SubcarrierSpec",
    "TsnmtSymbolSpec",
    "Waveform",
    "awgn_apply",
    "build_codebook",
    "calibrate_noise_power",
    "condition_number",
    "demodulate",
    "derive_stream",
    "discrete_entropy",
    "ebn0_noise_power",
    "empirical_mutual_information",
    "gaussian_diff_entropy",
    "gaussian_noise",
    "gen_base_subcarrier",
    "gram_matrix",
    "interleave_overlap",
    "magnitude_spectrum",
    "mean_power",
    "measure_rate_point",
    "min_rms_decode",
    "modulate",
    "ofdm_demodulate",
    "ofdm_modulate",
    "papr",
    "shannon_capacity",
    "solve_amplitudes",
    "stabilize",
    "synthesize_symbol",
    "tds_capacity",
    "tsnmt_f_config",
    "tsnmt_s_config",
]
