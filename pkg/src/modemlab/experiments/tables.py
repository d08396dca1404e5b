"""CSV schemas, deterministic writing and schema-checked reading."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence


class SchemaError(ValueError):
    """A CSV does not match its declared schema."""


@dataclass(frozen=True)
class Schema:
    name: str
    filename: str
    columns: tuple[tuple[str, type], ...]
    x: str
    y: str
    series: str
    x_label: str
    y_label: str

    @property
    def header(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.columns)


SCHEMAS = {
    s.name: s
    for s in (
        Schema(
            "ber", "ber.csv",
            (("snr_db", float), ("scheme", str), ("bits", int), ("errors", int), ("erasures", int),
             ("ber", float), ("ci_low", float), ("ci_high", float)),
            "snr_db", "ber", "scheme", "Eb/N0 (dB)", "bit error rate",
        ),
        Schema(
            "capacity", "capacity.csv",
            (("snr_db", float), ("scheme", str), ("shannon_c", float), ("formula_c", float),
             ("measured_rate", float), ("alpha", float), ("power_w", float), ("bandwidth_hz", float),
             ("verdict", str)),
            "snr_db", "measured_rate", "scheme", "SNR (dB)", "reliable rate (bit/s)",
        ),
        Schema(
            "power", "power.csv",
            (("n_subcarriers", int), ("scheme", str), ("mean_power_w", float)),
            "n_subcarriers", "mean_power_w", "scheme", "subcarriers", "mean symbol power (W)",
        ),
        Schema(
            "cond", "cond.csv",
            (("min_delay_frac", float), ("k", int), ("kappa_before", float), ("kappa_after", float),
             ("ber_before", float), ("ber_after", float)),
            "min_delay_frac", "kappa_after", "k", "minimum delay (periods)", "condition number",
        ),
        Schema(
            "rate", "rate.csv",
            (("snr_db", float), ("scheme", str), ("n", int), ("best_m", int),
             ("spectral_efficiency", float), ("block_error_rate", float), ("trials", int),
             ("shannon_se", float)),
            "snr_db", "spectral_efficiency", "scheme", "SNR (dB)", "spectral efficiency (bit/s/Hz)",
        ),
        Schema(
            "overlap", "overlap_capacity.csv",
            (("snr_db", float), ("scheme", str), ("layers", int), ("beta", float),
             ("spectral_efficiency", float)),
            "snr_db", "spectral_efficiency", "scheme", "SNR (dB)", "C/W (bit/s/Hz)",
        ),
        Schema(
            "alpha", "alpha.csv",
            (("scheme", str), ("layers", int), ("convention", str), ("alpha", float),
             ("std_error", float), ("trials", int), ("in_alpha_range", bool), ("in_beta_range", bool)),
            "layers", "alpha", "convention", "layers", "power factor",
        ),
    )
}


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _parse(text: str, kind: type, column: str):
    try:
        if kind is float:
            if text.lower() not in ("nan", "inf", "-inf") and not any(ch.isdigit() for ch in text):
                raise ValueError(text)
            return float(text)
        if kind is int:
            return int(text)
        if kind is bool:
            if text not in ("true", "false"):
                raise ValueError(text)
            return text == "true"
    except ValueError:
        raise SchemaError(f"column {column!r}: {text!r} is not a valid {kind.__name__}") from None
    if text == "":
        raise SchemaError(f"column {column!r}: empty value")
    return text


def render_csv(schema: Schema, rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(schema.header)
    for row in rows:
        if set(row) != set(schema.header):
            raise SchemaError(f"row keys {sorted(row)} do not match schema {schema.name!r}")
        values = []
        for column, kind in schema.columns:
            v = row[column]
            if kind is float:
                v = float(v)
            elif kind is int and not isinstance(v, bool):
                v = int(v)
            values.append(format_value(v))
        writer.writerow(values)
    return buf.getvalue()


def write_csv(path: str | Path, schema: Schema, rows: Sequence[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(schema, rows))
    return path


def read_csv(path: str | Path, schema: Schema | None = None) -> tuple[Schema, list[dict]]:
    """Parse a CSV, inferring its schema from the header when none is given."""
    with open(path, newline="") as fh:
        lines = list(csv.reader(fh))
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = tuple(lines[0])
    if schema is None:
        matches = [s for s in SCHEMAS.values() if s.header == header]
        if not matches:
            raise SchemaError(f"{path}: header {header} matches no known schema")
        schema = matches[0]
    elif header != schema.header:
        raise SchemaError(f"{path}: header {header} does not match schema {schema.name!r}")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if len(line) != len(header):
            raise SchemaError(f"{path}:{i}: expected {len(header)} fields, got {len(line)}")
        rows.append({c: _parse(v, k, c) for (c, k), v in zip(schema.columns, line)})
    return schema, rows
