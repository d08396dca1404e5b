"""Time-shift non-orthogonal multicarrier (TS-NMT) modem.

A symbol is a sum of windowed sinusoids that overlap in time and need not
be orthogonal. The receiver correlates the received symbol against every
base subcarrier (the "coherent vector" ``B``), builds the matrix of
pairwise correlations between base subcarriers (the Gram matrix ``R``) and
solves ``R A = B`` for the amplitudes ``A``.

Integrals are rectangle-rule sums on the working sample grid. Because the
same rule is used for ``R`` and ``B``, noiseless demodulation is exact up
to floating-point error regardless of quadrature accuracy.

Stabilizer ("additional wave") subcarriers are pilots of known amplitude
that are transmitted with the data. Each contributes one more correlation
equation, so the receiver solves an overdetermined ``(H + K) x H`` system
by least squares; the pilots' known contribution is subtracted first.
"""
from __future__ import annotations

import enum
import functools
import itertools
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .signals import (
    DEFAULT_OVERSAMPLING,
    SampledSignal,
    SubcarrierSpec,
    TsnmtSymbolSpec,
    Waveform,
    base_waveforms,
    sample_count,
)

#: Symbols whose system matrix is worse conditioned than this are undecodable.
KAPPA_FAILURE = 1e12

BPSK = (1.0, -1.0)


class ConditioningError(ArithmeticError):
    """Raised when a demodulation system is too ill-conditioned to solve."""

    def __init__(self, kappa: float, threshold: float = KAPPA_FAILURE):
        super().__init__(f"condition number {kappa:.3e} exceeds {threshold:.1e}")
        self.kappa = kappa
        self.threshold = threshold


class Variant(str, enum.Enum):
    S = "S"
    F = "F"


@dataclass(frozen=True)
class ModemConfig:
    """Everything the transmitter and receiver share about one symbol layout.

    ``symbol`` holds the data subcarriers (their amplitudes are ignored);
    ``pilots`` are stabilizer subcarriers sent with their own known
    amplitudes. ``sample_rate`` defaults to ``oversampling`` times the
    Nyquist rate of the fastest data subcarrier.
    """

    symbol: TsnmtSymbolSpec
    alphabet: tuple[float, ...] = BPSK
    oversampling: int = DEFAULT_OVERSAMPLING
    variant: Variant = Variant.S
    pilots: tuple[SubcarrierSpec, ...] = ()
    sample_rate: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(float(a) for a in self.alphabet))
        object.__setattr__(self, "pilots", tuple(self.pilots))
        object.__setattr__(self, "variant", Variant(self.variant))
        values = self.alphabet
        if len(set(values)) != len(values) or len(values) < 2:
            raise ValueError("alphabet needs at least two distinct values")
        if len(values) & (len(values) - 1):
            raise ValueError("alphabet size must be a power of two")
        if sorted(values) != sorted(-v for v in values):
            raise ValueError("alphabet must be symmetric about zero")
        if self.oversampling < 1:
            raise ValueError("oversampling must be >= 1")
        if self.variant is Variant.S:
            omegas = {sc.angular_frequency for sc in self.symbol.subcarriers}
            if len(omegas) != 1:
                raise ValueError("TS-NMT/S requires every data subcarrier to share one frequency")
        fs = self.fs
        for sc in self.symbol.subcarriers + self.pilots:
            if fs < sc.angular_frequency / math.pi:
                raise ValueError("sample rate is below the Nyquist rate of a subcarrier")
            if sc.end > self.symbol.symbol_period * (1 + 1e-9):
                raise ValueError("a subcarrier outlives the symbol period")
        sample_count(self.symbol.symbol_period, fs)

    @property
    def fs(self) -> float:
        if self.sample_rate is not None:
            return float(self.sample_rate)
        return self.oversampling * self.symbol.nyquist_rate()

    @property
    def n_data(self) -> int:
        return self.symbol.n_subcarriers

    @property
    def stabilizer_count(self) -> int:
        return len(self.pilots)

    @property
    def bits_per_amplitude(self) -> int:
        return int(math.log2(len(self.alphabet)))

    @property
    def bits_per_symbol(self) -> int:
        return self.n_data * self.bits_per_amplitude

    @property
    def n_samples(self) -> int:
        return sample_count(self.symbol.symbol_period, self.fs)

    @property
    def symbol_period(self) -> float:
        return self.symbol.symbol_period

    @property
    def raw_bit_rate(self) -> float:
        return self.bits_per_symbol / self.symbol_period

    def with_alphabet(self, alphabet: Sequence[float]) -> "ModemConfig":
        return replace(self, alphabet=tuple(alphabet))


@dataclass(frozen=True, eq=False)
class DemodSystem:
    gram: np.ndarray
    coherent: np.ndarray
    amplitudes: np.ndarray
    condition_number: float


@dataclass(frozen=True, eq=False)
class DemodResult:
    bits: np.ndarray
    amplitudes: np.ndarray
    symbols: np.ndarray
    condition_number: float
    residual: float
    low_confidence: bool


@dataclass(frozen=True)
class StabilizeResult:
    config: ModemConfig
    kappa_before: float
    kappa_after: float
    added: int
    improved: bool


# --------------------------------------------------------------------------- layouts


def grid_sample_rate(min_rate: float, quantum: float) -> float:
    """Smallest rate ``>= min_rate`` at which ``quantum`` seconds is a whole number of samples."""
    k = math.ceil(min_rate * quantum - 1e-9)
    return k / quantum


def tsnmt_s_config(
    H: int,
    frequency: float = 1000.0,
    lifetime_periods: int = 2,
    delay_step: float | None = None,
    alphabet: Sequence[float] = BPSK,
    oversampling: int = DEFAULT_OVERSAMPLING,
    waveform: Waveform = Waveform.SINE,
) -> ModemConfig:
    """Single-frequency layout: ``H`` equal-frequency subcarriers staggered in time.

    Delays default to ``h * T_d / H`` so every start lies inside the first
    lifetime; the symbol period is ``tau_max + T_d``.
    """
    if H < 1:
        raise ValueError("H must be >= 1")
    lifetime = lifetime_periods / frequency
    step = lifetime / H if delay_step is None else delay_step
    omega = 2.0 * math.pi * frequency
    subs = tuple(SubcarrierSpec(1.0, omega, h * step, lifetime, waveform) for h in range(H))
    period = subs[-1].delay + lifetime
    quantum = lifetime / (8 * H) if delay_step is None else _time_quantum([lifetime, step])
    fs = grid_sample_rate(oversampling * omega / math.pi, quantum)
    symbol = TsnmtSymbolSpec(subs, period, Fraction(1))
    return ModemConfig(symbol, tuple(alphabet), oversampling, Variant.S, (), fs)


def tsnmt_f_config(
    H: int = 8,
    base_frequency: float = 1000.0,
    gamma: Fraction = Fraction(5, 4),
    channels: int | None = None,
    lifetime_periods: int = 2,
    alphabet: Sequence[float] = BPSK,
    oversampling: int = DEFAULT_OVERSAMPLING,
) -> ModemConfig:
    """Multi-frequency layout: ``channels`` sub-channels at ratio ``gamma``.

    Sub-channel ``c`` runs at ``base_frequency * gamma**c`` and carries
    ``H / channels`` subcarriers with delays ``j * T_d / (H / channels)``.
    The lifetime is ``lifetime_periods`` periods of the base frequency.
    """
    gamma = Fraction(gamma)
    if channels is None:
        channels = min(4, H)
    if H % channels:
        raise ValueError("H must be a multiple of the channel count")
    per_channel = H // channels
    lifetime = lifetime_periods / base_frequency
    step = lifetime / per_channel
    subs = []
    for c in range(channels):
        omega = 2.0 * math.pi * base_frequency * float(gamma**c)
        subs.extend(SubcarrierSpec(1.0, omega, j * step, lifetime) for j in range(per_channel))
    period = (per_channel - 1) * step + lifetime
    f_max = base_frequency * float(max(gamma**c for c in range(channels)))
    fs = grid_sample_rate(2.0 * oversampling * f_max, lifetime / (8 * per_channel))
    symbol = TsnmtSymbolSpec(tuple(subs), period, gamma)
    variant = Variant.S if channels == 1 else Variant.F
    return ModemConfig(symbol, tuple(alphabet), oversampling, variant, (), fs)


def fig5_config(oversampling: int = DEFAULT_OVERSAMPLING) -> ModemConfig:
    """Four equal-frequency subcarriers staggered by a quarter lifetime."""
    return tsnmt_s_config(4, oversampling=oversampling)


def _time_quantum(times: Sequence[float]) -> float:
    fracs = [Fraction(t).limit_denominator(10**9) for t in times]
    num = functools.reduce(math.gcd, (f.numerator for f in fracs))
    den = functools.reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in fracs))
    return float(Fraction(num, den)) / 8


# --------------------------------------------------------------------------- gram


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@functools.lru_cache(maxsize=256)
def _basis(config: ModemConfig) -> tuple[np.ndarray, np.ndarray]:
    T, fs = config.symbol.symbol_period, config.fs
    data = base_waveforms(config.symbol.subcarriers, fs, T)
    pilots = base_waveforms(config.pilots, fs, T)
    return _readonly(data), _readonly(pilots)


def data_waveforms(config: ModemConfig) -> np.ndarray:
    """Unit-amplitude data subcarriers as rows of an ``H x n`` matrix."""
    return _basis(config)[0]


def pilot_waveforms(config: ModemConfig) -> np.ndarray:
    return _basis(config)[1]


def pilot_amplitudes(config: ModemConfig) -> np.ndarray:
    return np.array([p.amplitude for p in config.pilots], dtype=np.float64)


@functools.lru_cache(maxsize=256)
def gram_matrix(config: ModemConfig) -> np.ndarray:
    """``r_hk = integral of g_h(t) g_k(t) dt`` over the data subcarriers (seconds)."""
    W = data_waveforms(config)
    if np.any(~W.any(axis=1)):
        raise ValueError("a data subcarrier has no samples inside its lifetime")
    R = W @ W.T / config.fs
    return _readonly(0.5 * (R + R.T))


@functools.lru_cache(maxsize=256)
def system_matrix(config: ModemConfig) -> np.ndarray:
    """Correlator rows (data then pilots) against data columns: ``(H + K) x H``."""
    R = gram_matrix(config)
    if not config.pilots:
        return R
    cross = pilot_waveforms(config) @ data_waveforms(config).T / config.fs
    return _readonly(np.vstack([R, cross]))


@functools.lru_cache(maxsize=256)
def _pilot_offset(config: ModemConfig) -> np.ndarray:
    # known pilot contribution to every correlator output
    if not config.pilots:
        return _readonly(np.zeros(config.n_data))
    P = pilot_waveforms(config)
    rows = np.vstack([data_waveforms(config), P])
    return _readonly(rows @ (P.T @ pilot_amplitudes(config)) / config.fs)


def condition_number(matrix) -> float:
    """2-norm condition number ``sigma_max / sigma_min``; ``inf`` when singular."""
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("condition number needs a non-empty 2-D matrix")
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        raise ValueError("condition number of the zero matrix is undefined")
    if s[-1] == 0:
        return math.inf
    return float(s[0] / s[-1])


@functools.lru_cache(maxsize=256)
def system_condition(config: ModemConfig) -> float:
    return condition_number(system_matrix(config))


def _check_grid(received: SampledSignal, config: ModemConfig) -> None:
    if received.n != config.n_samples or received.sample_rate != config.fs:
        raise ValueError(
            f"received grid ({received.n} samples at {received.sample_rate} Hz) does not match "
            f"the modem ({config.n_samples} samples at {config.fs} Hz)"
        )


def coherent_vector(received: SampledSignal, config: ModemConfig) -> np.ndarray:
    """``B_h = integral of g_r(t) g_h(t) dt`` over each data subcarrier's lifetime."""
    _check_grid(received, config)
    return data_waveforms(config) @ received.samples / config.fs


def _correlate(samples: np.ndarray, config: ModemConfig) -> np.ndarray:
    # columns of correlator outputs minus the known pilot contribution
    rows = data_waveforms(config)
    if config.pilots:
        rows = np.vstack([rows, pilot_waveforms(config)])
    out = rows @ samples.T / config.fs
    return out - _pilot_offset(config)[:, None]


def solve_amplitudes(R, B, max_condition: float = KAPPA_FAILURE, kappa: float | None = None) -> np.ndarray:
    """Solve ``R A = B``.

    Square systems use LU factorisation with partial pivoting; tall systems
    (stabilized modems) use least squares. ``B`` may hold several
    right-hand sides as columns. Raises :class:`ConditioningError` above
    ``max_condition``.
    """
    R = np.asarray(R, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if R.ndim != 2 or R.shape[0] < R.shape[1]:
        raise ValueError("R must be square or tall")
    if B.shape[0] != R.shape[0]:
        raise ValueError(f"B has {B.shape[0]} rows, R has {R.shape[0]}")
    if kappa is None:
        kappa = condition_number(R)
    if not kappa <= max_condition:
        raise ConditioningError(kappa, max_condition)
    if R.shape[0] == R.shape[1]:
        return np.linalg.solve(R, B)
    return np.linalg.lstsq(R, B, rcond=None)[0]


# --------------------------------------------------------------------------- mapping


def bits_to_indices(bits, bits_per_amplitude: int) -> np.ndarray:
    """Group bits MSB-first into alphabet indices (natural binary)."""
    b = np.asarray(bits, dtype=np.int64)
    if np.any((b != 0) & (b != 1)):
        raise ValueError("bits must be 0 or 1")
    if b.shape[-1] % bits_per_amplitude:
        raise ValueError("bit count is not a multiple of the bits per amplitude")
    groups = b.reshape(*b.shape[:-1], -1, bits_per_amplitude)
    weights = 1 << np.arange(bits_per_amplitude - 1, -1, -1)
    return groups @ weights


def indices_to_bits(indices: np.ndarray, bits_per_amplitude: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(bits_per_amplitude - 1, -1, -1)
    bits = (idx[..., None] >> shifts) & 1
    return bits.reshape(*idx.shape[:-1], -1)


def pam_alphabet(bits_per_amplitude: int) -> tuple[float, ...]:
    """Gray-labelled ``2**b``-level PAM; one bit gives ``(+1, -1)``.

    Entry ``i`` is the level whose Gray label is ``i``; levels descend
    from ``M - 1`` to ``-(M - 1)`` in steps of two.
    """
    M = 1 << bits_per_amplitude
    out = [0.0] * M
    for pos in range(M):
        out[pos ^ (pos >> 1)] = float((M - 1) - 2 * pos)
    return tuple(out)


def quantize(amplitudes, alphabet: Sequence[float]) -> np.ndarray:
    """Index of the nearest alphabet value; exact ties go to the smaller value."""
    values = np.asarray(alphabet, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ladder = values[order]
    a = np.asarray(amplitudes, dtype=np.float64)
    if ladder.size == 1:
        return np.zeros(a.shape, dtype=np.int64)
    pos = np.clip(np.searchsorted(ladder, a), 1, ladder.size - 1)
    upper = (ladder[pos] - a) < (a - ladder[pos - 1])
    return order[np.where(upper, pos, pos - 1)]


def _decision_margin(amplitudes: np.ndarray, alphabet: Sequence[float]) -> np.ndarray:
    values = np.sort(np.asarray(alphabet, dtype=np.float64))
    dist = np.sort(np.abs(amplitudes[..., None] - values), axis=-1)
    spacing = float(np.min(np.diff(values)))
    return (dist[..., 1] - dist[..., 0]) / spacing


# --------------------------------------------------------------------------- modem


def amplitudes_for(bits, config: ModemConfig) -> np.ndarray:
    idx = bits_to_indices(bits, config.bits_per_amplitude)
    if idx.shape[-1] != config.n_data:
        raise ValueError(
            f"expected {config.bits_per_symbol} bits per symbol, got {np.shape(bits)[-1]}"
        )
    return np.asarray(config.alphabet)[idx]


def modulate_amplitudes(amplitudes, config: ModemConfig) -> np.ndarray:
    """Samples for one or more amplitude vectors (rows), pilots included."""
    A = np.atleast_2d(np.asarray(amplitudes, dtype=np.float64))
    out = A @ data_waveforms(config)
    if config.pilots:
        out = out + pilot_amplitudes(config) @ pilot_waveforms(config)
    return out


def modulate(bits, config: ModemConfig) -> SampledSignal:
    """Map one symbol's bits to amplitudes and synthesize the waveform."""
    amps = amplitudes_for(np.asarray(bits).reshape(-1), config)
    return SampledSignal(modulate_amplitudes(amps, config)[0], config.fs)


def modulate_batch(bits: np.ndarray, config: ModemConfig) -> np.ndarray:
    """``(m, bits_per_symbol)`` bits to an ``(m, n_samples)`` sample matrix."""
    return modulate_amplitudes(amplitudes_for(bits, config), config)


def _solve_batch(samples: np.ndarray, config: ModemConfig, regularization: float):
    G = system_matrix(config)
    rhs = _correlate(samples, config)
    if regularization > 0:
        # ridge on the normal equations, scaled to the mean diagonal
        N = G.T @ G
        lam = regularization * float(np.mean(np.diag(N)))
        M, rhs_eff = N + lam * np.eye(N.shape[0]), G.T @ rhs
        kappa = condition_number(M)
        A = solve_amplitudes(M, rhs_eff, kappa=kappa)
    else:
        kappa = system_condition(config)
        A = solve_amplitudes(G, rhs, kappa=kappa)
    return A.T, rhs, kappa


def demodulate_batch(samples: np.ndarray, config: ModemConfig, regularization: float = 0.0):
    """Demodulate the rows of ``samples``; returns ``(bits, amplitudes, kappa)``."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[1] != config.n_samples:
        raise ValueError("sample count does not match the modem grid")
    A, _, kappa = _solve_batch(samples, config, regularization)
    idx = quantize(A, config.alphabet)
    return indices_to_bits(idx, config.bits_per_amplitude), A, kappa


def demodulate(received: SampledSignal, config: ModemConfig, regularization: float = 0.0) -> DemodResult:
    """Correlate, solve for amplitudes and quantize to bits.

    ``regularization > 0`` switches to a ridge-regularised solve (for
    comparison with stabilizer pilots). Raises :class:`ConditioningError`
    for systems beyond :data:`KAPPA_FAILURE`.
    """
    _check_grid(received, config)
    A, rhs, kappa = _solve_batch(received.samples[None, :], config, regularization)
    a = A[0]
    G = system_matrix(config)
    residual = float(np.linalg.norm(G @ a - rhs[:, 0]))
    idx = quantize(a, config.alphabet)
    symbols = np.asarray(config.alphabet)[idx]
    bits = indices_to_bits(idx[None, :], config.bits_per_amplitude)[0]
    low = bool(np.any(_decision_margin(a, config.alphabet) < 0.1))
    return DemodResult(bits, a, symbols, kappa, residual, low)


def demod_system(received: SampledSignal, config: ModemConfig) -> DemodSystem:
    """The square system ``R A = B`` for one received symbol (pilots ignored)."""
    R = gram_matrix(config)
    B = coherent_vector(received, config)
    kappa = condition_number(R)
    return DemodSystem(R, B, solve_amplitudes(R, B, kappa=kappa), kappa)


# --------------------------------------------------------------------------- stabilizers


def stabilizer_candidates(config: ModemConfig, freq_steps: int = 2, delay_points: int = 8) -> list[SubcarrierSpec]:
    """Candidate pilot subcarriers on a frequency/delay grid.

    Frequencies are each data frequency plus ``m / T_d`` for
    ``|m| <= freq_steps``; delays are ``j * T_d / delay_points``. Candidates
    identical to a data subcarrier, or above the Nyquist limit, are dropped.
    """
    first = config.symbol.subcarriers[0]
    Td = first.lifetime
    freqs = sorted({sc.frequency for sc in config.symbol.subcarriers})
    existing = {(round(sc.frequency, 6), round(sc.delay * 1e9), sc.waveform) for sc in config.symbol.subcarriers}
    out = []
    for f, m, j in itertools.product(freqs, range(-freq_steps, freq_steps + 1), range(delay_points)):
        fc = f + m / Td
        if fc <= 0 or 2.0 * fc >= config.fs:
            continue
        tau = j * Td / delay_points
        if (round(fc, 6), round(tau * 1e9), Waveform.SINE) in existing:
            continue
        out.append(SubcarrierSpec(1.0, 2.0 * math.pi * fc, tau, Td, Waveform.SINE))
    unique = {(round(c.frequency, 6), round(c.delay * 1e9)): c for c in out}
    return list(unique.values())


def with_pilots(config: ModemConfig, pilots: Sequence[SubcarrierSpec]) -> ModemConfig:
    """A copy of ``config`` carrying ``pilots``, lengthening the period if needed."""
    pilots = tuple(pilots)
    period = max([config.symbol.symbol_period] + [p.end for p in pilots])
    symbol = TsnmtSymbolSpec(config.symbol.subcarriers, period, config.symbol.frequency_ratio)
    return replace(config, symbol=symbol, pilots=pilots, sample_rate=config.fs)


def stabilize(config: ModemConfig, K: int, candidates: Sequence[SubcarrierSpec] | None = None) -> StabilizeResult:
    """Greedily add up to ``K`` pilot subcarriers that lower the condition number.

    Each round adds the candidate giving the smallest condition number of
    the stacked correlator system, and only if it strictly improves on the
    current one, so the result is never worse conditioned than the input.
    When no candidate helps, the input config comes back with
    ``improved=False``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if candidates is None:
        candidates = stabilizer_candidates(config)
    before = system_condition(config)
    current, best_kappa = config, before
    remaining = list(candidates)
    added = 0
    for _ in range(K):
        scored = []
        for i, cand in enumerate(remaining):
            trial = with_pilots(current, current.pilots + (cand,))
            scored.append((system_condition(trial), i, trial))
        if not scored:
            break
        kappa, i, trial = min(scored, key=lambda x: (x[0], x[1]))
        if not kappa < best_kappa:
            break
        current, best_kappa = trial, kappa
        remaining.pop(i)
        added += 1
    return StabilizeResult(current, before, best_kappa, added, added > 0)
