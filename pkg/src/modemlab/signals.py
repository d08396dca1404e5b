"""Sampled waveforms: base subcarriers, symbol synthesis, interleaving and measurements.

All signals are real-valued and sampled on the grid ``t_i = i / fs`` with
``t_0 = 0``. Subcarriers use a rectangular lifetime window: a base subcarrier
is nonzero only for ``tau <= t_i < tau + T_d``.
"""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

#: Default oversampling relative to the Nyquist rate of the highest subcarrier.
DEFAULT_OVERSAMPLING = 8

# Relative slack used when snapping times onto the sample grid.
_GRID_EPS = 1e-9


class Waveform(str, enum.Enum):
    SINE = "sine"
    COSINE = "cosine"

    def __call__(self, phase: np.ndarray) -> np.ndarray:
        if self is Waveform.SINE:
            return np.sin(phase)
        return np.cos(phase)


def sample_count(duration: float, sample_rate: float) -> int:
    """Number of samples covering ``duration`` at ``sample_rate``.

    Raises ValueError when the product is not an integer to within 1e-6
    samples, so grids never silently drift.
    """
    exact = duration * sample_rate
    n = int(round(exact))
    if abs(exact - n) > 1e-6 * max(1.0, abs(exact)):
        raise ValueError(
            f"duration {duration!r} s is not a whole number of samples at {sample_rate!r} Hz"
        )
    return n


def _as_readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """A finite real sample sequence with its sample rate."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_readonly(self.samples))
        object.__setattr__(self, "sample_rate", float(self.sample_rate))
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.samples.size == 0:
            raise ValueError("a sampled signal needs at least one sample")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    def __add__(self, other: "SampledSignal") -> "SampledSignal":
        _check_compatible([self, other])
        return SampledSignal(self.samples + other.samples, self.sample_rate)


@dataclass(frozen=True)
class SubcarrierSpec:
    """One base subcarrier ``a * wave(omega * (t - tau))`` alive on ``[tau, tau + T_d)``."""

    amplitude: float
    angular_frequency: float
    delay: float
    lifetime: float
    waveform: Waveform = Waveform.SINE

    def __post_init__(self):
        object.__setattr__(self, "waveform", Waveform(self.waveform))
        if not self.lifetime > 0:
            raise ValueError(f"lifetime must be positive, got {self.lifetime}")
        if self.delay < 0:
            raise ValueError(f"delay must be non-negative, got {self.delay}")
        if not self.angular_frequency > 0:
            raise ValueError("angular_frequency must be positive (no DC component)")

    @property
    def frequency(self) -> float:
        return self.angular_frequency / (2.0 * math.pi)

    @property
    def end(self) -> float:
        return self.delay + self.lifetime

    def with_amplitude(self, amplitude: float) -> "SubcarrierSpec":
        return SubcarrierSpec(amplitude, self.angular_frequency, self.delay, self.lifetime, self.waveform)


@dataclass(frozen=True)
class TsnmtSymbolSpec:
    """An ordered set of subcarriers sharing one symbol period."""

    subcarriers: tuple[SubcarrierSpec, ...]
    symbol_period: float
    frequency_ratio: Fraction | None = None

    def __post_init__(self):
        subs = tuple(self.subcarriers)
        object.__setattr__(self, "subcarriers", subs)
        if not subs:
            raise ValueError("a symbol needs at least one subcarrier")
        first = subs[0]
        if first.delay != 0:
            raise ValueError("the first subcarrier must start at t = 0")
        for h, sc in enumerate(subs):
            if not sc.delay < first.end:
                raise ValueError(
                    f"subcarrier {h} starts at {sc.delay} s, outside the first lifetime"
                )
        longest = max(sc.end for sc in subs)
        if self.symbol_period < longest * (1 - _GRID_EPS):
            raise ValueError(
                f"symbol_period {self.symbol_period} s shorter than the last lifetime end {longest} s"
            )

    @property
    def n_subcarriers(self) -> int:
        return len(self.subcarriers)

    @property
    def max_angular_frequency(self) -> float:
        return max(sc.angular_frequency for sc in self.subcarriers)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([sc.amplitude for sc in self.subcarriers])

    def with_amplitudes(self, amplitudes: Sequence[float]) -> "TsnmtSymbolSpec":
        if len(amplitudes) != len(self.subcarriers):
            raise ValueError("one amplitude per subcarrier is required")
        subs = tuple(sc.with_amplitude(float(a)) for sc, a in zip(self.subcarriers, amplitudes))
        return TsnmtSymbolSpec(subs, self.symbol_period, self.frequency_ratio)

    def nyquist_rate(self) -> float:
        return self.max_angular_frequency / math.pi


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided RMS magnitude spectrum; ``sum(magnitudes**2)`` equals the mean power."""

    frequencies: np.ndarray
    magnitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frequencies", _as_readonly(self.frequencies))
        object.__setattr__(self, "magnitudes", _as_readonly(self.magnitudes))
        if self.frequencies.shape != self.magnitudes.shape:
            raise ValueError("frequencies and magnitudes must have equal length")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if np.any(self.magnitudes < 0):
            raise ValueError("magnitudes must be non-negative")

    @property
    def resolution(self) -> float:
        if self.frequencies.size < 2:
            return float("inf")
        return float(self.frequencies[1] - self.frequencies[0])


def lifetime_slice(delay: float, lifetime: float, sample_rate: float, n: int) -> slice:
    """Sample indices ``i`` with ``delay <= i / fs < delay + lifetime``, clipped to ``n``."""
    start = math.ceil(delay * sample_rate - _GRID_EPS)
    stop = math.ceil((delay + lifetime) * sample_rate - _GRID_EPS)
    return slice(min(max(start, 0), n), min(max(stop, 0), n))


def _check_rate(spec: SubcarrierSpec, sample_rate: float) -> None:
    nyquist = spec.angular_frequency / math.pi
    if sample_rate < nyquist:
        raise ValueError(
            f"sample rate {sample_rate} Hz is below the Nyquist rate {nyquist} Hz of the subcarrier"
        )


def unit_waveform(spec: SubcarrierSpec, sample_rate: float, n: int) -> np.ndarray:
    """Unit-amplitude base subcarrier on an ``n``-sample grid (no validation)."""
    out = np.zeros(n)
    window = lifetime_slice(spec.delay, spec.lifetime, sample_rate, n)
    t = np.arange(window.start, window.stop) / sample_rate
    out[window] = spec.waveform(spec.angular_frequency * (t - spec.delay))
    return out


def gen_base_subcarrier(spec: SubcarrierSpec, sample_rate: float, symbol_period: float) -> SampledSignal:
    """Sample ``a_h * wave(omega_h (t - tau_h))`` over one symbol period.

    Samples outside the lifetime window are exactly zero.
    """
    _check_rate(spec, sample_rate)
    if spec.end > symbol_period * (1 + _GRID_EPS):
        raise ValueError(
            f"subcarrier ends at {spec.end} s, after the symbol period {symbol_period} s"
        )
    n = sample_count(symbol_period, sample_rate)
    return SampledSignal(spec.amplitude * unit_waveform(spec, sample_rate, n), sample_rate)


def base_waveforms(
    subcarriers: Sequence[SubcarrierSpec], sample_rate: float, symbol_period: float
) -> np.ndarray:
    """Stack unit-amplitude base subcarriers as rows of an ``H x n`` matrix."""
    n = sample_count(symbol_period, sample_rate)
    rows = []
    for sc in subcarriers:
        _check_rate(sc, sample_rate)
        if sc.end > symbol_period * (1 + _GRID_EPS):
            raise ValueError(f"subcarrier ends at {sc.end} s, after the symbol period")
        rows.append(unit_waveform(sc, sample_rate, n))
    return np.vstack(rows) if rows else np.zeros((0, n))


def synthesize_symbol(spec: TsnmtSymbolSpec, sample_rate: float) -> SampledSignal:
    """Sum every subcarrier of ``spec`` on a common grid."""
    total = None
    for sc in spec.subcarriers:
        part = gen_base_subcarrier(sc, sample_rate, spec.symbol_period).samples
        total = part.copy() if total is None else total + part
    return SampledSignal(total, sample_rate)


def _check_compatible(signals: Sequence[SampledSignal]) -> None:
    if not signals:
        raise ValueError("at least one signal is required")
    n, fs = signals[0].n, signals[0].sample_rate
    for s in signals[1:]:
        if s.n != n:
            raise ValueError(f"length mismatch: {s.n} != {n}")
        if s.sample_rate != fs:
            raise ValueError(f"sample-rate mismatch: {s.sample_rate} != {fs}")


def interleave_overlap(layers: Sequence[SampledSignal]) -> SampledSignal:
    """Interleave ``L`` equal-length layers sample by sample.

    ``out[L*j + k] = layers[k][j]``; the result runs at ``L`` times the
    layer sample rate, so each later layer sits a fraction ``k/L`` of a
    sampling interval behind the first.
    """
    layers = list(layers)
    _check_compatible(layers)
    stacked = np.stack([s.samples for s in layers], axis=1)
    return SampledSignal(stacked.reshape(-1), layers[0].sample_rate * len(layers))


def mean_power(s: SampledSignal) -> float:
    """``sum(x**2) / n`` with a correctly rounded sum, so reordering samples never changes it."""
    x = s.samples
    return math.fsum((x * x).tolist()) / x.size


def papr(s: SampledSignal) -> float:
    """Peak-to-average power ratio, ``max(x**2) / mean(x**2)``."""
    p = mean_power(s)
    if p <= 0:
        raise ValueError("PAPR is undefined for a zero-power signal")
    return float(np.max(s.samples**2) / p)


def papr_db(s: SampledSignal) -> float:
    return 10.0 * math.log10(papr(s))


def magnitude_spectrum(s: SampledSignal) -> Spectrum:
    """One-sided RMS magnitude spectrum on a grid of spacing ``fs / n``.

    Interior bins carry sqrt(2)|X_k|/n so the squared magnitudes sum to the
    mean power of the signal.
    """
    n = s.n
    mags = np.abs(np.fft.rfft(s.samples)) / n
    if n % 2 == 0:
        mags[1:-1] *= math.sqrt(2.0)
    else:
        mags[1:] *= math.sqrt(2.0)
    freqs = np.fft.rfftfreq(n, d=1.0 / s.sample_rate)
    return Spectrum(freqs, mags)


def occupied_bandwidth(spectrum: Spectrum, energy_fraction: float = 0.99) -> float:
    """Smallest frequency ``F`` whose bins ``<= F`` hold ``energy_fraction`` of the energy."""
    if not 0 < energy_fraction <= 1:
        raise ValueError("energy_fraction must lie in (0, 1]")
    energy = spectrum.magnitudes**2
    total = float(energy.sum())
    if total <= 0:
        raise ValueError("occupied bandwidth of a zero-energy spectrum is undefined")
    cumulative = np.cumsum(energy) / total
    idx = int(np.searchsorted(cumulative, energy_fraction * (1 - 1e-12), side="left"))
    idx = min(idx, energy.size - 1)
    return float(spectrum.frequencies[idx])


def write_signal(path: str | os.PathLike, s: SampledSignal) -> None:
    """Dump ``s`` as text: two ``#`` header lines then one sample per line."""
    lines = [f"# sample_rate_hz={s.sample_rate!r}", f"# n={s.n}"]
    lines.extend(repr(float(v)) for v in s.samples)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_signal(path: str | os.PathLike) -> SampledSignal:
    header: dict[str, str] = {}
    values: list[float] = []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                header[key.strip()] = value.strip()
            else:
                values.append(float(line))
    try:
        rate = float(header["sample_rate_hz"])
        n = int(header["n"])
    except KeyError as exc:
        raise ValueError(f"signal dump is missing header field {exc}") from None
    if n != len(values):
        raise ValueError(f"header declares {n} samples but {len(values)} were read")
    return SampledSignal(values, rate)
