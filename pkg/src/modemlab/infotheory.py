"""Entropy, mutual information and capacity formulas.

Everything is in bits (base-2 logarithms). The Gaussian differential
entropy keeps the ``e`` factor, ``0.5 * log2(2*pi*e*var)``; it cancels in
``H(Y) - H(N)`` so the capacity formula is unaffected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    bandwidth: float
    signal_power: float
    noise_power: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if not self.noise_power > 0:
            raise ValueError(f"noise_power must be positive, got {self.noise_power}")
        if self.signal_power < 0:
            raise ValueError(f"signal_power must be non-negative, got {self.signal_power}")

    @classmethod
    def from_snr(cls, bandwidth: float, snr: float, noise_power: float = 1.0) -> "ChannelParams":
        return cls(bandwidth, snr * noise_power, noise_power)

    @property
    def snr(self) -> float:
        return self.signal_power / self.noise_power


@dataclass(frozen=True)
class OverlapCapacityParams:
    """``layers`` overlapped streams whose composite power is ``power_factor * P``."""

    layers: int
    power_factor: float
    base: ChannelParams

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if not 0 <= self.power_factor <= self.layers:
            raise ValueError(
                f"power_factor must lie in [0, {self.layers}], got {self.power_factor}"
            )


@dataclass(frozen=True)
class MiEstimate:
    bits_per_sample: float
    sample_count: int
    bin_count: int
    std_error: float
    degenerate: bool = False


def shannon_capacity(params: ChannelParams) -> float:
    """``W * log2(1 + P/N)`` in bits/s."""
    return params.bandwidth * math.log2(1.0 + params.snr)


def spectral_efficiency(snr: float) -> float:
    """Capacity per unit bandwidth, ``log2(1 + snr)`` in bits/s/Hz."""
    return math.log2(1.0 + snr)


def tds_capacity(params: OverlapCapacityParams) -> float:
    """Overlap capacity formula ``L * W * log2(1 + factor * P/N)``.

    This is the claimed capacity of ``L`` time-delay-overlapped layers; it
    reduces to :func:`shannon_capacity` for ``L = 1, factor = 1``.
    """
    base = params.base
    return params.layers * base.bandwidth * math.log2(1.0 + params.power_factor * base.snr)


def gaussian_diff_entropy(variance: float) -> float:
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance}")
    return 0.5 * math.log2(2.0 * math.pi * math.e * variance)


def discrete_entropy(pmf, tol: float = 1e-9) -> float:
    """Shannon entropy of a probability vector, with ``0 log 0 = 0``.

    Vectors summing to 1 within ``tol`` are renormalised; anything further
    off raises ValueError.
    """
    p = np.asarray(pmf, dtype=np.float64).reshape(-1)
    if p.size == 0:
        raise ValueError("empty pmf")
    if np.any(p < 0):
        raise ValueError("pmf entries must be non-negative")
    total = float(p.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"pmf sums to {total}, not 1")
    p = p / total
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz))) + 0.0


def default_bin_count(sample_count: int) -> int:
    return int(min(256, max(8, math.ceil(round(sample_count ** (1.0 / 3.0), 9)))))


def _bin_indices(x: np.ndarray, bins: int) -> np.ndarray | None:
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        return None
    idx = np.floor((x - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def _entropy_from_counts(counts: np.ndarray, n: int) -> float:
    # sorted so the sum does not depend on bin ordering (keeps I(X;Y) == I(Y;X) bitwise)
    c = np.sort(counts[counts > 0]).astype(np.float64)
    p = c / n
    return float(-np.sum(p * np.log2(p)))


def _plugin_mi(ix: np.ndarray, iy: np.ndarray, bins: int) -> float:
    n = ix.size
    hx = _entropy_from_counts(np.bincount(ix, minlength=bins), n)
    hy = _entropy_from_counts(np.bincount(iy, minlength=bins), n)
    hxy = _entropy_from_counts(np.bincount(ix * bins + iy, minlength=bins * bins), n)
    return max(0.0, (hx + hy) - hxy)


def empirical_mutual_information(x, y, bins: int | None = None, blocks: int = 10) -> MiEstimate:
    """Plug-in histogram estimate of ``I(X;Y)`` in bits per sample.

    Equal-width bins span each variable's own ``[min, max]``. The standard
    error is a block jackknife over ``blocks`` contiguous blocks. The
    estimate is not bias-corrected.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} != {y.size}")
    n = x.size
    if n < 1000:
        raise ValueError(f"at least 1000 samples are required, got {n}")
    if bins is None:
        bins = default_bin_count(n)
    if bins < 2:
        raise ValueError("bins must be >= 2")
    ix, iy = _bin_indices(x, bins), _bin_indices(y, bins)
    if ix is None or iy is None:
        return MiEstimate(0.0, n, bins, 0.0, degenerate=True)

    estimate = _plugin_mi(ix, iy, bins)
    edges = np.linspace(0, n, blocks + 1).astype(np.int64)
    leave_out = []
    for b in range(blocks):
        keep = np.ones(n, dtype=bool)
        keep[edges[b]:edges[b + 1]] = False
        leave_out.append(_plugin_mi(ix[keep], iy[keep], bins))
    loo = np.array(leave_out)
    std_error = math.sqrt((blocks - 1) / blocks * float(np.sum((loo - loo.mean()) ** 2)))
    return MiEstimate(estimate, n, bins, std_error)
