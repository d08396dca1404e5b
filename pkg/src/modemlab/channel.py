"""AWGN channel with counter-based, order-independent noise generation.

Noise sample ``i`` of stream ``(seed, stream_id)`` depends only on those
three numbers: a Philox-4x64 block cipher keyed by ``(seed, stream_id)``
is evaluated at counter ``i // 2`` (two 64-bit words per pair of samples)
and the words are turned into a Gaussian pair by Box-Muller. Any slice
of the stream can therefore be regenerated on its own.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .signals import SampledSignal, interleave_overlap, mean_power

_U64 = (1 << 64) - 1
_WORDS_PER_BLOCK = 4


@dataclass(frozen=True)
class NoiseSpec:
    noise_power: float
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.noise_power < 0:
            raise ValueError(f"noise_power must be non-negative, got {self.noise_power}")
        if not 0 <= self.seed <= _U64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not 0 <= self.stream_id <= _U64:
            raise ValueError("stream_id must be an unsigned 64-bit integer")


def derive_stream(*parts) -> int:
    """Hash arbitrary labels (experiment name, grid index, trial...) to a 64-bit stream id."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")


def _raw_words(seed: int, stream_id: int, first_word: int, count: int) -> np.ndarray:
    gen = np.random.Philox(key=np.array([seed, stream_id], dtype=np.uint64))
    block, offset = divmod(first_word, _WORDS_PER_BLOCK)
    if block:
        gen.advance(block)
    return gen.random_raw(offset + count)[offset:]


def standard_normal(seed: int, stream_id: int, count: int, start: int = 0) -> np.ndarray:
    """Unit-variance Gaussian samples ``start .. start + count - 1`` of a stream."""
    if count <= 0:
        return np.zeros(0)
    first_pair = start // 2
    last_pair = (start + count - 1) // 2
    n_pairs = last_pair - first_pair + 1
    words = _raw_words(seed, stream_id, 2 * first_pair, 2 * n_pairs).reshape(n_pairs, 2)
    # 53-bit uniforms; u1 in (0, 1] keeps the log finite
    u1 = ((words[:, 0] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = (words[:, 1] >> np.uint64(11)).astype(np.float64) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * math.pi * u2
    pairs = np.empty((n_pairs, 2))
    pairs[:, 0] = radius * np.cos(angle)
    pairs[:, 1] = radius * np.sin(angle)
    flat = pairs.reshape(-1)
    lead = start - 2 * first_pair
    return flat[lead:lead + count]


def gaussian_noise(noise: NoiseSpec, count: int, start: int = 0) -> np.ndarray:
    if noise.noise_power == 0:
        return np.zeros(count)
    return math.sqrt(noise.noise_power) * standard_normal(noise.seed, noise.stream_id, count, start)


def awgn_apply(s: SampledSignal, noise: NoiseSpec) -> SampledSignal:
    """``y = x + n`` with ``n`` drawn from the ``(seed, stream_id)`` stream."""
    if noise.noise_power == 0:
        return s
    return SampledSignal(s.samples + gaussian_noise(noise, s.n), s.sample_rate)


def calibrate_noise_power(signal_power: float, target_snr: float) -> float:
    if not signal_power > 0:
        raise ValueError(f"signal_power must be positive, got {signal_power}")
    if not target_snr > 0:
        raise ValueError(f"target_snr must be positive, got {target_snr}")
    return signal_power / target_snr


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def ebn0_noise_power(signal_power: float, samples_per_symbol: int, bits_per_symbol: int, ebn0_db: float) -> float:
    """Per-sample noise variance for a target Eb/N0.

    Energies are in sample units: ``Eb = P * Ns / k`` and the two-sided
    noise density equals the per-sample variance, so
    ``N = P * Ns / (2 * k * Eb/N0)``.
    """
    if bits_per_symbol < 1 or samples_per_symbol < 1:
        raise ValueError("bits_per_symbol and samples_per_symbol must be >= 1")
    ebn0 = db_to_linear(ebn0_db)
    return signal_power * samples_per_symbol / (2.0 * bits_per_symbol * ebn0)


def verify_interleaved_noise_power(n1: SampledSignal, n2: SampledSignal) -> float:
    """Mean power of two noise records interleaved sample by sample."""
    if n1.n != n2.n:
        raise ValueError(f"length mismatch: {n1.n} != {n2.n}")
    return mean_power(interleave_overlap([n1, n2]))
