"""Real-valued orthogonal multicarrier baseline.

Subcarrier ``h`` (1-based) is ``a_h * sin(2 pi h f0 t)`` over one period
``T = 1 / f0``, with ``a_h = +1`` for bit 0 and ``-1`` for bit 1. There is
no cyclic prefix and no IFFT framing; the baseline exists to compare power
and orthogonality against the time-shifted layouts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import DEFAULT_OVERSAMPLING, SampledSignal, SubcarrierSpec, TsnmtSymbolSpec, sample_count
from .tsnmt import ModemConfig, Variant


@dataclass(frozen=True)
class OfdmConfig:
    n_subcarriers: int
    base_frequency: float = 1000.0
    oversampling: int = DEFAULT_OVERSAMPLING

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be >= 1")
        if not self.base_frequency > 0:
            raise ValueError("base_frequency must be positive")
        if self.oversampling < 1:
            raise ValueError("oversampling must be >= 1")

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.base_frequency

    @property
    def fs(self) -> float:
        # an integer number of samples per period keeps the harmonics orthogonal on the grid
        return 2.0 * self.oversampling * self.n_subcarriers * self.base_frequency

    @property
    def n_samples(self) -> int:
        return sample_count(self.symbol_period, self.fs)

    @property
    def frequencies(self) -> np.ndarray:
        return self.base_frequency * np.arange(1, self.n_subcarriers + 1)

    @property
    def bits_per_symbol(self) -> int:
        return self.n_subcarriers

    @property
    def raw_bit_rate(self) -> float:
        return self.n_subcarriers * self.base_frequency


def basis(config: OfdmConfig) -> np.ndarray:
    """Unit sines at the harmonics of ``f0`` as rows of an ``n_sub x n`` matrix."""
    t = np.arange(config.n_samples) / config.fs
    return np.sin(2.0 * math.pi * np.outer(config.frequencies, t))


def as_modem_config(config: OfdmConfig) -> ModemConfig:
    """The same subcarrier set as a (zero-delay, multi-frequency) TS-NMT layout."""
    T = config.symbol_period
    subs = tuple(SubcarrierSpec(1.0, 2.0 * math.pi * f, 0.0, T) for f in config.frequencies)
    variant = Variant.S if config.n_subcarriers == 1 else Variant.F
    return ModemConfig(TsnmtSymbolSpec(subs, T), variant=variant, sample_rate=config.fs)


def _amplitudes(bits, config: OfdmConfig) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64)
    if b.shape[-1] != config.n_subcarriers:
        raise ValueError(f"expected {config.n_subcarriers} bits per symbol, got {b.shape[-1]}")
    if np.any((b != 0) & (b != 1)):
        raise ValueError("bits must be 0 or 1")
    return 1.0 - 2.0 * b


def ofdm_modulate_batch(bits: np.ndarray, config: OfdmConfig) -> np.ndarray:
    return np.atleast_2d(_amplitudes(bits, config)) @ basis(config)


def ofdm_modulate(bits, config: OfdmConfig) -> SampledSignal:
    return SampledSignal(ofdm_modulate_batch(np.asarray(bits).reshape(1, -1), config)[0], config.fs)


def ofdm_demodulate_batch(samples: np.ndarray, config: OfdmConfig) -> np.ndarray:
    samples = np.atleast_2d(samples)
    if samples.shape[1] != config.n_samples:
        raise ValueError("sample count does not match the OFDM grid")
    corr = samples @ basis(config).T / config.fs
    # a zero correlation decides bit 0
    return (corr < 0).astype(np.int64)


def ofdm_demodulate(received: SampledSignal, config: OfdmConfig) -> np.ndarray:
    """Sign of the correlation with each harmonic sine."""
    if received.sample_rate != config.fs:
        raise ValueError("sample rate does not match the OFDM grid")
    return ofdm_demodulate_batch(received.samples[None, :], config)[0]
