"""Experiment configuration: YAML files with a strict, documented schema.

Unknown keys anywhere are errors. Every section is optional and falls back
to the defaults below; see ``docs/config.md`` for the full key list.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml

EXPERIMENTS = (
    "fig1",
    "fig3",
    "fig6a",
    "fig6b_capacity",
    "fig6c_stabilized",
    "fig6d_ber",
    "alpha_measure",
    "capacity_audit",
    "cond_study",
)
SCHEMES = ("ofdm", "tsnmt_s", "tsnmt_f")
_U64_MAX = (1 << 64) - 1


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass
class ModemSection:
    scheme: str = "tsnmt_s"
    subcarriers: int = 8
    frequency: float = 1000.0
    lifetime_periods: int = 2
    oversampling: int = 8
    gamma: str = "5/4"
    channels: int | None = None
    alphabet_bits: int = 1

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigError(f"modem.scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.subcarriers < 1 or self.lifetime_periods < 1 or self.oversampling < 1:
            raise ConfigError("modem.subcarriers, lifetime_periods and oversampling must be >= 1")
        if not self.frequency > 0:
            raise ConfigError("modem.frequency must be positive")
        if self.alphabet_bits < 1:
            raise ConfigError("modem.alphabet_bits must be >= 1")
        try:
            if Fraction(self.gamma) <= 0:
                raise ConfigError("modem.gamma must be positive")
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"modem.gamma is not a rational number: {self.gamma!r}") from None


@dataclass
class CodebookSection:
    block_lengths: list[int] = field(default_factory=lambda: [16])
    max_bits: int = 16
    target_error: float = 0.01
    power: float = 1.0

    def validate(self) -> None:
        if not self.block_lengths or any(n < 1 for n in self.block_lengths):
            raise ConfigError("codebook.block_lengths must be a non-empty list of positive integers")
        if not 1 <= self.max_bits <= 24:
            raise ConfigError("codebook.max_bits must lie in [1, 24]")
        if not 0 < self.target_error < 1:
            raise ConfigError("codebook.target_error must lie in (0, 1)")
        if not self.power > 0:
            raise ConfigError("codebook.power must be positive")


@dataclass
class Fig3Section:
    layers: list[int] = field(default_factory=lambda: [1, 2, 5])
    beta: list[float] = field(default_factory=lambda: [1.0, 1.0, 1.0])

    def validate(self) -> None:
        if len(self.layers) != len(self.beta) or not self.layers:
            raise ConfigError("fig3.layers and fig3.beta must be non-empty and of equal length")
        for L, b in zip(self.layers, self.beta):
            if L < 1 or not 0 <= b <= L:
                raise ConfigError(f"fig3 needs L >= 1 and 0 <= beta <= L, got L={L}, beta={b}")


@dataclass
class PowerSection:
    counts: list[int] = field(default_factory=lambda: [1, 2, 4, 8, 16])

    def validate(self) -> None:
        if not self.counts or any(c < 1 for c in self.counts):
            raise ConfigError("power.counts must be a non-empty list of positive integers")


@dataclass
class BerSection:
    schemes: list[str] = field(default_factory=lambda: ["tsnmt_s"])
    min_bits: int = 100_000

    def validate(self) -> None:
        _check_schemes("ber.schemes", self.schemes)
        if self.min_bits < 1:
            raise ConfigError("ber.min_bits must be >= 1")


@dataclass
class CondSection:
    delay_fractions: list[float] = field(default_factory=lambda: [0.25, 0.1, 0.05, 0.01])
    k_values: list[int] = field(default_factory=lambda: [0, 1, 2])
    ebn0_db: float = 10.0

    def validate(self) -> None:
        if not self.delay_fractions or any(not 0 < d < 1 for d in self.delay_fractions):
            raise ConfigError("cond.delay_fractions must lie in (0, 1)")
        if not self.k_values or any(k < 0 for k in self.k_values):
            raise ConfigError("cond.k_values must be non-negative integers")


@dataclass
class AuditSection:
    schemes: list[str] = field(default_factory=lambda: ["ofdm", "tsnmt_s"])
    target_ber: float = 1e-3
    min_bits: int = 100_000
    max_alphabet_bits: int = 8
    energy_fraction: float = 0.99
    spectrum_symbols: int = 256

    def validate(self) -> None:
        _check_schemes("audit.schemes", self.schemes)
        if not 0 < self.target_ber < 0.5:
            raise ConfigError("audit.target_ber must lie in (0, 0.5)")
        if self.min_bits < 1 or self.spectrum_symbols < 1:
            raise ConfigError("audit.min_bits and audit.spectrum_symbols must be >= 1")
        if not 1 <= self.max_alphabet_bits <= 12:
            raise ConfigError("audit.max_alphabet_bits must lie in [1, 12]")
        if not 0 < self.energy_fraction <= 1:
            raise ConfigError("audit.energy_fraction must lie in (0, 1]")


@dataclass
class AlphaSection:
    layers: int = 2
    layer_samples: int = 1024
    schemes: list[str] = field(default_factory=lambda: ["tsnmt_s"])

    def validate(self) -> None:
        if self.layers < 2:
            raise ConfigError("alpha.layers must be >= 2")
        if self.layer_samples < 1:
            raise ConfigError("alpha.layer_samples must be >= 1")
        _check_schemes("alpha.schemes", self.schemes)


def _check_schemes(name: str, schemes: list[str]) -> None:
    if not schemes:
        raise ConfigError(f"{name} must not be empty")
    for s in schemes:
        if s not in SCHEMES:
            raise ConfigError(f"{name}: unknown scheme {s!r}; choose from {SCHEMES}")


_SECTIONS = {
    "modem": ModemSection,
    "codebook": CodebookSection,
    "fig3": Fig3Section,
    "power": PowerSection,
    "ber": BerSection,
    "cond": CondSection,
    "audit": AuditSection,
    "alpha": AlphaSection,
}

_DEFAULT_GRIDS = {
    "fig1": [0.0, 3.0, 6.0, 9.0, 12.0],
    "fig3": [float(x) for x in range(-10, 31, 2)],
    "fig6d_ber": [0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
    "capacity_audit": [0.0, 5.0, 10.0, 15.0, 20.0],
    "fig6b_capacity": [0.0, 5.0, 10.0, 15.0, 20.0],
}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 20240601
    trials: int = 1000
    snr_grid_db: list[float] = field(default_factory=lambda: [0.0])
    output_dir: str = "out"
    jobs: int = 1
    modem: ModemSection = field(default_factory=ModemSection)
    codebook: CodebookSection = field(default_factory=CodebookSection)
    fig3: Fig3Section = field(default_factory=Fig3Section)
    power: PowerSection = field(default_factory=PowerSection)
    ber: BerSection = field(default_factory=BerSection)
    cond: CondSection = field(default_factory=CondSection)
    audit: AuditSection = field(default_factory=AuditSection)
    alpha: AlphaSection = field(default_factory=AlphaSection)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= _U64_MAX:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        grid = self.snr_grid_db
        if not grid:
            raise ConfigError("snr_grid_db must not be empty")
        if any(math.isnan(x) for x in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("snr_grid_db must be strictly increasing")
        for name in _SECTIONS:
            getattr(self, name).validate()
        return self


def default_config(experiment: str) -> ExperimentConfig:
    cfg = ExperimentConfig(experiment=experiment)
    if experiment in _DEFAULT_GRIDS:
        cfg.snr_grid_db = list(_DEFAULT_GRIDS[experiment])
    if experiment == "fig6b_capacity":
        cfg.audit.schemes = ["tsnmt_s", "tsnmt_f"]
    if experiment == "fig6d_ber":
        cfg.modem.subcarriers = 4
        cfg.ber.schemes = ["ofdm", "tsnmt_s"]
    if experiment == "alpha_measure":
        cfg.trials = 10_000
    return cfg


def _coerce(cls, name: str, data: Any):
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {', '.join(sorted(map(str, unknown)))}")
    return cls(**data)


def config_from_mapping(data: dict, experiment: str | None = None) -> ExperimentConfig:
    """Merge a parsed mapping over the defaults for its experiment."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    data = dict(data)
    name = experiment or data.get("experiment")
    if name is None:
        raise ConfigError("no experiment given")
    if experiment and data.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for {data['experiment']!r}, not {experiment!r}")
    data.pop("experiment", None)
    cfg = default_config(name)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"experiment"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(map(str, unknown)))}")
    for key, value in data.items():
        if key in _SECTIONS:
            base = dataclasses.asdict(getattr(cfg, key))
            _coerce(_SECTIONS[key], key, value)
            base.update(value)
            value = _SECTIONS[key](**base)
        elif key == "snr_grid_db":
            if not isinstance(value, list):
                raise ConfigError("snr_grid_db must be a list")
            value = [float(v) for v in value]
        setattr(cfg, key, value)
    return cfg.validate()


def load_config(path: str | Path, experiment: str | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    try:
        return config_from_mapping(data, experiment)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
