"""Experiment drivers: each ``run_*`` turns an :class:`ExperimentConfig` into CSV rows.

Work is split into independent tasks (one per grid point or sweep entry)
whose random streams are derived from ``(seed, experiment, labels)`` only,
so results do not depend on how many worker processes run them. Rows are
assembled in task order by a single writer.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..channel import db_to_linear, derive_stream, ebn0_noise_power, standard_normal
from ..codebook import best_rate_point, sweep_block_sizes
from ..infotheory import ChannelParams, shannon_capacity, spectral_efficiency
from ..ofdm import OfdmConfig, as_modem_config, ofdm_demodulate_batch, ofdm_modulate_batch
from ..signals import SampledSignal, interleave_overlap, magnitude_spectrum, mean_power, occupied_bandwidth
from ..tsnmt import (
    ConditioningError,
    ModemConfig,
    data_waveforms,
    demodulate_batch,
    modulate_batch,
    pam_alphabet,
    stabilize,
    system_condition,
    tsnmt_f_config,
    tsnmt_s_config,
)
from .config import ExperimentConfig, ModemSection
from .tables import SCHEMAS, write_csv

WILSON_Z = 3.0
CHUNK_SYMBOLS = 4096
VERDICTS = ("below_shannon", "above_shannon", "inconclusive")


# --------------------------------------------------------------------------- plumbing


def parallel_map(func: Callable, tasks: Sequence, jobs: int = 1) -> list:
    """``[func(t) for t in tasks]``, optionally across worker processes, in task order."""
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(func, tasks))


def random_bits(seed: int, stream_id: int, shape: tuple[int, ...]) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, stream_id], dtype=np.uint64)))
    return gen.integers(0, 2, size=shape, dtype=np.int64)


def wilson_interval(errors: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return math.nan, math.nan
    p = errors / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class Scheme:
    """A named modem with a uniform batch interface.

    ``layers`` is the number of superposed base waveforms counted by the
    overlap capacity formula (one for the orthogonal baseline).
    """

    name: str
    modem: ModemConfig | OfdmConfig

    @property
    def n_samples(self) -> int:
        return self.modem.n_samples

    @property
    def bits_per_symbol(self) -> int:
        return self.modem.bits_per_symbol

    @property
    def fs(self) -> float:
        return self.modem.fs

    @property
    def symbol_period(self) -> float:
        return self.modem.symbol_period

    @property
    def layers(self) -> int:
        if isinstance(self.modem, OfdmConfig) or self.name == "ofdm":
            return 1
        return self.modem.n_data

    def modulate(self, bits: np.ndarray) -> np.ndarray:
        if isinstance(self.modem, OfdmConfig):
            return ofdm_modulate_batch(bits, self.modem)
        return modulate_batch(bits, self.modem)

    def demodulate(self, samples: np.ndarray) -> np.ndarray:
        if isinstance(self.modem, OfdmConfig):
            return ofdm_demodulate_batch(samples, self.modem)
        return demodulate_batch(samples, self.modem)[0]


def _channel_count(H: int, requested: int | None) -> int:
    if requested is not None:
        return requested
    return max(c for c in range(1, min(4, H) + 1) if H % c == 0)


def build_scheme(
    name: str,
    modem: ModemSection,
    subcarriers: int | None = None,
    alphabet_bits: int | None = None,
    native_ofdm: bool = True,
) -> Scheme:
    """Instantiate ``name`` (``ofdm``, ``tsnmt_s`` or ``tsnmt_f``) from the modem section."""
    H = modem.subcarriers if subcarriers is None else subcarriers
    b = modem.alphabet_bits if alphabet_bits is None else alphabet_bits
    alphabet = pam_alphabet(b)
    if name == "ofdm":
        cfg = OfdmConfig(H, modem.frequency, modem.oversampling)
        if native_ofdm and b == 1:
            return Scheme(name, cfg)
        return Scheme(name, as_modem_config(cfg).with_alphabet(alphabet))
    if name == "tsnmt_s":
        return Scheme(name, tsnmt_s_config(
            H, modem.frequency, modem.lifetime_periods, alphabet=alphabet, oversampling=modem.oversampling,
        ))
    if name == "tsnmt_f":
        return Scheme(name, tsnmt_f_config(
            H, modem.frequency, Fraction(modem.gamma), _channel_count(H, modem.channels),
            modem.lifetime_periods, alphabet, modem.oversampling,
        ))
    raise ValueError(f"unknown scheme {name!r}")


def _chunks(total: int, size: int = CHUNK_SYMBOLS):
    for index, lo in enumerate(range(0, total, size)):
        yield index, min(size, total - lo)


# --------------------------------------------------------------------------- BER


@dataclass(frozen=True)
class BerCount:
    bits: int
    errors: int
    erasures: int

    @property
    def ber(self) -> float:
        decided = self.bits - self.erasures
        return self.errors / decided if decided else math.nan


def measure_ber(scheme: Scheme, ebn0_db: float, symbols: int, seed: int, label: str) -> BerCount:
    """Bit errors over ``symbols`` random symbols at one Eb/N0.

    Bits and unit noise come from streams keyed by ``label`` and the chunk
    index only, so every Eb/N0 point reuses the same realisations (paired
    seeds). The noise power follows the measured transmit power.
    """
    k, ns = scheme.bits_per_symbol, scheme.n_samples
    bits_stream = derive_stream(label, "bits", scheme.name)
    noise_stream = derive_stream(label, "noise", scheme.name)
    energy = 0.0
    for index, m in _chunks(symbols):
        x = scheme.modulate(random_bits(seed, derive_stream(bits_stream, index), (m, k)))
        energy += float(np.sum(x * x))
    power = energy / (symbols * ns)
    noise_power = ebn0_noise_power(power, ns, k, ebn0_db)
    sigma = math.sqrt(noise_power)
    errors = 0
    try:
        for index, m in _chunks(symbols):
            bits = random_bits(seed, derive_stream(bits_stream, index), (m, k))
            y = scheme.modulate(bits)
            if sigma > 0:
                y = y + sigma * standard_normal(seed, noise_stream, m * ns, start=index * CHUNK_SYMBOLS * ns).reshape(m, ns)
            errors += int(np.count_nonzero(scheme.demodulate(y) != bits))
    except ConditioningError:
        return BerCount(symbols * k, 0, symbols * k)
    return BerCount(symbols * k, errors, 0)


def _ber_task(args) -> dict:
    scheme, ebn0_db, symbols, seed = args
    count = measure_ber(scheme, ebn0_db, symbols, seed, "ber")
    lo, hi = wilson_interval(count.errors, count.bits - count.erasures)
    return {
        "snr_db": ebn0_db, "scheme": scheme.name, "bits": count.bits, "errors": count.errors,
        "erasures": count.erasures, "ber": count.ber, "ci_low": lo, "ci_high": hi,
    }


def run_ber_sweep(cfg: ExperimentConfig) -> list[dict]:
    """BER against Eb/N0 (dB, in the ``snr_db`` column) for each configured scheme."""
    tasks = []
    for name in cfg.ber.schemes:
        scheme = build_scheme(name, cfg.modem)
        symbols = max(cfg.trials, math.ceil(cfg.ber.min_bits / scheme.bits_per_symbol))
        tasks.extend((scheme, snr, symbols, cfg.seed) for snr in cfg.snr_grid_db)
    return parallel_map(_ber_task, tasks, cfg.jobs)


# --------------------------------------------------------------------------- rate / overlap formulas


def _fig1_task(args) -> dict:
    snr_db, n, trials, seed, max_bits, power, target = args
    snr = db_to_linear(snr_db)
    best = best_rate_point(sweep_block_sizes(n, snr, trials, seed, max_bits, power), target)
    return {
        "snr_db": snr_db, "scheme": f"random_code_n{n}", "n": n, "best_m": 1 << round(best.bits_per_block),
        "spectral_efficiency": best.spectral_efficiency, "block_error_rate": best.block_error_rate,
        "trials": trials, "shannon_se": spectral_efficiency(snr),
    }


def run_fig1(cfg: ExperimentConfig) -> list[dict]:
    """Best random-code spectral efficiency at the target block error rate, per SNR and ``n``."""
    cb = cfg.codebook
    tasks = [
        (snr, n, cfg.trials, cfg.seed, cb.max_bits, cb.power, cb.target_error)
        for n in cb.block_lengths
        for snr in cfg.snr_grid_db
    ]
    return parallel_map(_fig1_task, tasks, cfg.jobs)


def run_fig3(cfg: ExperimentConfig) -> list[dict]:
    """``C_L / W = L log2(1 + beta * SNR)`` curves; formula only."""
    rows = []
    for L, beta in zip(cfg.fig3.layers, cfg.fig3.beta):
        for snr_db in cfg.snr_grid_db:
            rows.append({
                "snr_db": snr_db, "scheme": f"L{L}", "layers": L, "beta": float(beta),
                "spectral_efficiency": L * spectral_efficiency(beta * db_to_linear(snr_db)),
            })
    return rows


# --------------------------------------------------------------------------- power and alpha


def _power_task(args) -> dict:
    name, count, modem, trials, seed = args
    scheme = build_scheme(name, modem, subcarriers=count, alphabet_bits=1)
    stream = derive_stream("fig6a", name, count)
    energy = 0.0
    for index, m in _chunks(trials):
        x = scheme.modulate(random_bits(seed, derive_stream(stream, index), (m, scheme.bits_per_symbol)))
        energy += float(np.sum(x * x))
    return {"n_subcarriers": count, "scheme": name, "mean_power_w": energy / (trials * scheme.n_samples)}


def run_fig6a(cfg: ExperimentConfig) -> list[dict]:
    """Mean symbol power against subcarrier count for the three schemes."""
    tasks = [
        (name, count, cfg.modem, cfg.trials, cfg.seed)
        for count in cfg.power.counts
        for name in ("ofdm", "tsnmt_s", "tsnmt_f")
    ]
    return parallel_map(_power_task, tasks, cfg.jobs)


def power_curve_flags(rows: Sequence[dict]) -> list[int]:
    """Counts ``>= 2`` where the TS-NMT/S power exceeds the OFDM power."""
    table = {(r["scheme"], r["n_subcarriers"]): r["mean_power_w"] for r in rows}
    return sorted(
        c for (s, c), p in table.items()
        if s == "tsnmt_s" and c >= 2 and ("ofdm", c) in table and p > table[("ofdm", c)]
    )


def _single_layer_power(powers: Sequence[float]) -> float:
    p = float(np.mean(powers))
    if not p > 0:
        raise ValueError("single-layer power is zero")
    return p


def interleave_alpha(layers: Sequence[SampledSignal]) -> float:
    """Power of the sample-interleaved sequence over the mean single-layer power."""
    single = _single_layer_power([mean_power(s) for s in layers])
    return mean_power(interleave_overlap(layers)) / single


def superposition_alpha(layers: Sequence[SampledSignal]) -> float:
    """Power of the superposed (summed) waveform over the mean single-layer power."""
    single = _single_layer_power([mean_power(s) for s in layers])
    total = layers[0]
    for s in layers[1:]:
        total = total + s
    return mean_power(total) / single


def _alpha_row(scheme: str, layers: int, convention: str, values: np.ndarray) -> dict:
    alpha = float(np.mean(values))
    err = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return {
        "scheme": scheme, "layers": layers, "convention": convention, "alpha": alpha,
        "std_error": err, "trials": int(values.size),
        "in_alpha_range": bool(0.0 <= alpha <= 2.0), "in_beta_range": bool(0.0 <= alpha <= layers),
    }


def alpha_sample_values(layers: int, samples: int, trials: int, seed: int) -> np.ndarray:
    """Per-trial interleave power ratio for ``layers`` independent Gaussian streams."""
    out = np.empty(trials)
    stream = derive_stream("alpha", "sample", layers)
    block = layers * samples
    for t in range(trials):
        z = standard_normal(seed, stream, block, start=t * block).reshape(layers, samples)
        single = _single_layer_power(np.mean(z * z, axis=1))
        out[t] = float(np.mean(z.T.reshape(-1) ** 2)) / single
    return out


def alpha_wave_values(config: ModemConfig, trials: int, seed: int, label: str = "tsnmt_s") -> np.ndarray:
    """Per-trial synthesized-symbol power over the mean single-subcarrier power, random BPSK amplitudes."""
    W = data_waveforms(config)
    single = _single_layer_power(np.mean(W * W, axis=1))
    stream = derive_stream("alpha", "wave", label, config.n_data)
    out = np.empty(trials)
    for index, m in _chunks(trials):
        bits = random_bits(seed, derive_stream(stream, index), (m, config.n_data))
        x = (1.0 - 2.0 * bits) @ W
        out[index * CHUNK_SYMBOLS:index * CHUNK_SYMBOLS + m] = np.mean(x * x, axis=1) / single
    return out


def measure_alpha(cfg: ExperimentConfig) -> list[dict]:
    """Both power-factor conventions: sample interleaving and waveform superposition."""
    a = cfg.alpha
    rows = [_alpha_row("interleave", a.layers, "sample", alpha_sample_values(a.layers, a.layer_samples, cfg.trials, cfg.seed))]
    for name in a.schemes:
        if name == "ofdm":
            modem = as_modem_config(OfdmConfig(cfg.modem.subcarriers, cfg.modem.frequency, cfg.modem.oversampling))
        else:
            modem = build_scheme(name, cfg.modem, alphabet_bits=1).modem
        rows.append(_alpha_row(name, modem.n_data, "wave", alpha_wave_values(modem, cfg.trials, cfg.seed, name)))
    return rows


# --------------------------------------------------------------------------- conditioning study


def cond_rows(config: ModemConfig, k_values: Sequence[int], ebn0_db: float, symbols: int, seed: int, delay_frac: float) -> list[dict]:
    """Condition number and BER before and after adding ``K`` stabilizer pilots."""
    before = Scheme("cond", config)
    kappa_before = system_condition(config)
    ber_before = measure_ber(before, ebn0_db, symbols, seed, "cond").ber
    rows = []
    for K in k_values:
        if K == 0:
            after, kappa_after, ber_after = config, kappa_before, ber_before
        else:
            result = stabilize(config, K)
            after, kappa_after = result.config, result.kappa_after
            ber_after = ber_before if after is config else measure_ber(Scheme("cond", after), ebn0_db, symbols, seed, "cond").ber
        rows.append({
            "min_delay_frac": delay_frac, "k": K, "kappa_before": kappa_before, "kappa_after": kappa_after,
            "ber_before": ber_before, "ber_after": ber_after,
        })
    return rows


def cond_fixture(delay_frac: float, modem: ModemSection) -> ModemConfig:
    """Two equal-frequency sines, the second delayed by ``delay_frac`` carrier periods."""
    return tsnmt_s_config(
        2, modem.frequency, modem.lifetime_periods, delay_step=delay_frac / modem.frequency,
        oversampling=modem.oversampling,
    )


def _cond_task(args) -> list[dict]:
    d, modem, k_values, ebn0_db, symbols, seed = args
    return cond_rows(cond_fixture(d, modem), k_values, ebn0_db, symbols, seed, d)


def run_cond_study(cfg: ExperimentConfig) -> list[dict]:
    c = cfg.cond
    symbols = max(cfg.trials, math.ceil(cfg.ber.min_bits / 2))
    tasks = [(d, cfg.modem, tuple(c.k_values), c.ebn0_db, symbols, cfg.seed) for d in c.delay_fractions]
    return [row for rows in parallel_map(_cond_task, tasks, cfg.jobs) for row in rows]


# --------------------------------------------------------------------------- capacity audit


@dataclass(frozen=True)
class SchemeProfile:
    """Measured, SNR-independent properties of a scheme's BPSK waveform."""

    power_w: float
    bandwidth_hz: float
    single_layer_power_w: float
    layers: int
    sample_rate: float

    @property
    def beta(self) -> float:
        return self.power_w / self.single_layer_power_w


def profile_scheme(scheme: Scheme, symbols: int, energy_fraction: float, seed: int) -> SchemeProfile:
    """Power and occupied bandwidth of ``symbols`` concatenated random symbols."""
    bits = random_bits(seed, derive_stream("audit", "profile", scheme.name), (symbols, scheme.bits_per_symbol))
    record = SampledSignal(scheme.modulate(bits).reshape(-1), scheme.fs)
    power = mean_power(record)
    bandwidth = occupied_bandwidth(magnitude_spectrum(record), energy_fraction)
    if scheme.layers == 1:
        single = power
    else:
        W = data_waveforms(scheme.modem)
        single = float(np.mean(W * W))
    return SchemeProfile(power, bandwidth, single, scheme.layers, scheme.fs)


def inband_capacity(power_w: float, noise_power_w: float, bandwidth_hz: float, sample_rate: float) -> float:
    """Shannon capacity of the occupied band; white noise of per-sample variance N spreads over fs/2."""
    if noise_power_w == 0:
        return math.inf
    inband_noise = noise_power_w * 2.0 * bandwidth_hz / sample_rate
    return shannon_capacity(ChannelParams(bandwidth_hz, power_w, inband_noise))


def verdict(shannon_c: float, rate_low: float, rate_high: float, converged: bool = True) -> str:
    """Compare a rate interval with capacity; the interval comes from 3-sigma BER bounds."""
    if math.isinf(shannon_c):
        return "below_shannon"
    if not converged:
        return "inconclusive"
    if rate_high < shannon_c:
        return "below_shannon"
    if rate_low > shannon_c:
        return "above_shannon"
    return "inconclusive"


def audit_row(
    snr_db: float,
    scheme: str,
    profile: SchemeProfile,
    noise_power_w: float,
    rate: float,
    rate_low: float,
    rate_high: float,
    converged: bool = True,
) -> dict:
    """One capacity-report row; every capacity is recomputed from the measured profile."""
    c = inband_capacity(profile.power_w, noise_power_w, profile.bandwidth_hz, profile.sample_rate)
    if math.isinf(c):
        formula = math.inf
    else:
        single = inband_capacity(profile.single_layer_power_w * profile.beta, noise_power_w,
                                 profile.bandwidth_hz, profile.sample_rate)
        formula = profile.layers * single
    return {
        "snr_db": snr_db, "scheme": scheme, "shannon_c": c, "formula_c": formula, "measured_rate": rate,
        "alpha": profile.beta, "power_w": profile.power_w, "bandwidth_hz": profile.bandwidth_hz,
        "verdict": verdict(c, rate_low, rate_high, converged),
    }


def largest_passing(predicate: Callable[[int], bool], top: int) -> int:
    """Largest ``b`` in ``1..top`` with ``predicate(b)`` by bisection, assuming monotonicity; 0 if none."""
    if not predicate(1):
        return 0
    if predicate(top):
        return top
    lo, hi = 1, top
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _audit_task(args) -> dict:
    name, modem, snr_db, audit, trials, seed = args
    base = build_scheme(name, modem, alphabet_bits=1, native_ofdm=False)
    profile = profile_scheme(base, audit.spectrum_symbols, audit.energy_fraction, seed)
    snr = db_to_linear(snr_db)
    counts: dict[int, BerCount] = {}

    def count(b: int) -> BerCount:
        if b not in counts:
            scheme = build_scheme(name, modem, alphabet_bits=b, native_ofdm=False)
            symbols = max(trials, math.ceil(audit.min_bits / scheme.bits_per_symbol))
            # Eb/N0 that puts the full-band SNR at `snr` for this alphabet's own power
            ebn0_db = 10.0 * math.log10(scheme.n_samples * snr / (2.0 * scheme.bits_per_symbol)) if snr < math.inf else math.inf
            counts[b] = measure_ber(scheme, ebn0_db, symbols, seed, f"audit-{b}")
        return counts[b]

    def passes(bound: int):
        def check(b: int) -> bool:
            c = count(b)
            lo, hi = wilson_interval(c.errors, c.bits - c.erasures)
            value = (c.ber, hi, lo)[bound]
            return c.erasures == 0 and value <= audit.target_ber
        return check

    top = audit.max_alphabet_bits
    best = largest_passing(passes(0), top)
    best_low = largest_passing(passes(1), top)
    best_high = largest_passing(passes(2), top)
    point = passes(0)
    converged = all(point(b) == (b <= best) for b in sorted(counts))
    per_bit = base.modem.n_data / base.symbol_period
    noise = profile.power_w / snr if snr < math.inf else 0.0
    return audit_row(snr_db, name, profile, noise, per_bit * best, per_bit * best_low, per_bit * best_high, converged)


def run_capacity_audit(cfg: ExperimentConfig) -> list[dict]:
    """Measured reliable rate against in-band Shannon capacity, per scheme and SNR."""
    tasks = [
        (name, cfg.modem, snr, cfg.audit, cfg.trials, cfg.seed)
        for name in cfg.audit.schemes
        for snr in cfg.snr_grid_db
    ]
    return parallel_map(_audit_task, tasks, cfg.jobs)


# --------------------------------------------------------------------------- dispatch

_DISPATCH = {
    "fig1": (run_fig1, "rate"),
    "fig3": (run_fig3, "overlap"),
    "fig6a": (run_fig6a, "power"),
    "fig6b_capacity": (run_capacity_audit, "capacity"),
    "capacity_audit": (run_capacity_audit, "capacity"),
    "fig6c_stabilized": (run_cond_study, "cond"),
    "cond_study": (run_cond_study, "cond"),
    "fig6d_ber": (run_ber_sweep, "ber"),
    "alpha_measure": (measure_alpha, "alpha"),
}


def run_experiment(cfg: ExperimentConfig, plot: bool = False) -> Path:
    """Run ``cfg.experiment`` and write its CSV (and optionally an SVG) into ``cfg.output_dir``."""
    func, schema_name = _DISPATCH[cfg.experiment]
    schema = SCHEMAS[schema_name]
    rows = func(cfg)
    path = write_csv(Path(cfg.output_dir) / schema.filename, schema, rows)
    if plot:
        from .plotting import emit_plot

        emit_plot(path, schema)
    return path
