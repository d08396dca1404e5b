"""Random Gaussian codebooks with minimum-distance decoding.

This is the classic achievability experiment for the AWGN channel: draw
``M`` white Gaussian codewords of ``n`` samples, send one, add noise and
pick the codeword with the least RMS discrepancy. Spectral efficiency is
``2 * log2(M) / n`` bits/s/Hz, since ``n = 2TW`` samples span ``T`` seconds
of a ``W``-hertz channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import calibrate_noise_power, derive_stream, standard_normal

MAX_ENTRIES = 1 << 30
_DECODE_CHUNK = 1 << 22


@dataclass(frozen=True, eq=False)
class Codebook:
    codewords: np.ndarray
    power: float

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def block_length(self) -> int:
        return self.codewords.shape[1]


@dataclass(frozen=True)
class RatePoint:
    snr: float
    n: int
    bits_per_block: float
    block_error_rate: float
    errors: int
    trials: int

    @property
    def spectral_efficiency(self) -> float:
        return 2.0 * self.bits_per_block / self.n

    @property
    def std_error(self) -> float:
        eps = self.block_error_rate
        return math.sqrt(eps * (1.0 - eps) / self.trials)


def build_codebook(M: int, n: int, power: float, seed: int) -> Codebook:
    """``M`` Gaussian codewords, each rescaled to mean square ``power``.

    Row ``j`` depends only on ``(seed, n, j)``, so the codebook for a
    smaller ``M`` is a prefix of the one for a larger ``M``.
    """
    if M < 1 or n < 1:
        raise ValueError("M and n must be >= 1")
    if not power > 0:
        raise ValueError("power must be positive")
    if M * n > MAX_ENTRIES:
        raise ValueError(f"codebook of {M} x {n} entries exceeds the 2^30 entry guard")
    raw = standard_normal(seed, derive_stream("codebook", n), M * n).reshape(M, n)
    ms = np.mean(raw**2, axis=1, keepdims=True)
    words = raw * np.sqrt(power / ms)
    words.setflags(write=False)
    return Codebook(words, float(power))


def min_rms_decode(cb: Codebook, received) -> int:
    """Index of the codeword nearest ``received``; ties go to the lowest index."""
    r = np.asarray(received, dtype=np.float64).reshape(-1)
    if r.size != cb.block_length:
        raise ValueError(f"received block has {r.size} samples, codebook expects {cb.block_length}")
    d = np.sum((cb.codewords - r) ** 2, axis=1)
    return int(np.argmin(d))


def decode_batch(cb: Codebook, received: np.ndarray) -> np.ndarray:
    """Vectorised minimum-distance decoding of the rows of ``received``.

    Uses ``|c|^2 - 2 r.c``; it agrees with :func:`min_rms_decode` except
    at exact floating-point ties, which have probability zero under noise.
    """
    received = np.atleast_2d(received)
    norms = np.sum(cb.codewords**2, axis=1)
    rows = max(1, _DECODE_CHUNK // max(1, cb.size))
    out = np.empty(received.shape[0], dtype=np.int64)
    for lo in range(0, received.shape[0], rows):
        chunk = received[lo:lo + rows]
        scores = norms[None, :] - 2.0 * chunk @ cb.codewords.T
        out[lo:lo + rows] = np.argmin(scores, axis=1)
    return out


def _messages(seed: int, M: int, trials: int) -> np.ndarray:
    # M is a power of two in practice; the modulo bias is negligible otherwise
    words = np.random.Philox(key=np.array([seed, derive_stream("messages")], dtype=np.uint64)).random_raw(trials)
    return (words % np.uint64(M)).astype(np.int64)


def measure_rate_point(M: int, n: int, power: float, snr: float, trials: int, seed: int) -> RatePoint:
    """Monte Carlo block error rate of a random codebook at one SNR.

    Messages, codebook and noise are drawn from streams that do not depend
    on ``snr`` (noise) or on ``M`` beyond a prefix, so neighbouring points
    share randomness (paired seeds).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if M == 1:
        return RatePoint(snr, n, 0.0, 0.0, 0, trials)
    cb = build_codebook(M, n, power, seed)
    noise_power = calibrate_noise_power(power, snr)
    msgs = _messages(seed, M, trials)
    noise = standard_normal(seed, derive_stream("rate-noise", n), trials * n).reshape(trials, n)
    received = cb.codewords[msgs] + math.sqrt(noise_power) * noise
    decoded = decode_batch(cb, received)
    errors = int(np.count_nonzero(decoded != msgs))
    return RatePoint(snr, n, math.log2(M), errors / trials, errors, trials)


def converse_margin(point: RatePoint) -> float:
    """Three binomial standard errors of the block error estimate."""
    return 3.0 * point.std_error


def sweep_block_sizes(
    n: int,
    snr: float,
    trials: int,
    seed: int,
    max_bits: int = 16,
    power: float = 1.0,
) -> list[RatePoint]:
    """Rate points for ``M = 1, 2, 4, ..., 2**max_bits`` at fixed ``n`` and SNR.

    ``M = 1`` carries no information and never errs; it is the floor of the sweep.
    """
    return [measure_rate_point(1 << s, n, power, snr, trials, seed) for s in range(0, max_bits + 1)]


def best_rate_point(points: list[RatePoint], target_error: float = 1e-2) -> RatePoint | None:
    """Largest-``M`` point whose measured block error rate is within target."""
    ok = [p for p in points if p.block_error_rate <= target_error]
    if not ok:
        return None
    return max(ok, key=lambda p: p.bits_per_block)
