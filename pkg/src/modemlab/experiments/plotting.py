"""Dependency-free, byte-deterministic SVG line plots of experiment CSVs."""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from .tables import Schema, SchemaError, read_csv

WIDTH, HEIGHT = 800, 600
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 90, 160, 40, 70
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
LOG_SCHEMAS = ("ber", "cond")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.3g}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def render_svg(schema: Schema, rows: list[dict]) -> str:
    log_y = schema.name in LOG_SCHEMAS
    series: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        x, y = float(row[schema.x]), float(row[schema.y])
        key = str(row[schema.series])
        series.setdefault(key, [])
        if not (math.isfinite(x) and math.isfinite(y)) or (log_y and y <= 0):
            continue
        series[key].append((x, math.log10(y) if log_y else y))
    points = [p for pts in series.values() for p in pts]
    if not points:
        raise SchemaError("no finite data points to plot")

    xs, ys = [p[0] for p in points], [p[1] for p in points]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x: float) -> float:
        return MARGIN_LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y: float) -> float:
        return MARGIN_TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{_fmt(sx(t))}" y1="{MARGIN_TOP + ph}" x2="{_fmt(sx(t))}" y2="{MARGIN_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(sx(t))}" y="{MARGIN_TOP + ph + 20}" font-size="12" text-anchor="middle">{_tick_label(t)}</text>')
    for t in _ticks(y0, y1):
        label = _tick_label(10**t) if log_y else _tick_label(t)
        out.append(f'<line x1="{MARGIN_LEFT - 5}" y1="{_fmt(sy(t))}" x2="{MARGIN_LEFT}" y2="{_fmt(sy(t))}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_LEFT - 8}" y="{_fmt(sy(t) + 4)}" font-size="12" text-anchor="end">{label}</text>')
    y_label = schema.y_label + (" (log scale)" if log_y else "")
    out.append(f'<text x="{MARGIN_LEFT + pw / 2:.2f}" y="{HEIGHT - 20}" font-size="14" text-anchor="middle">{escape(schema.x_label)}</text>')
    out.append(
        f'<text x="20" y="{MARGIN_TOP + ph / 2:.2f}" font-size="14" text-anchor="middle" '
        f'transform="rotate(-90 20 {MARGIN_TOP + ph / 2:.2f})">{escape(y_label)}</text>'
    )
    drawn = 0
    for name, pts in series.items():
        if not pts:
            continue
        colour = PALETTE[drawn % len(PALETTE)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{coords}"/>')
        ly = MARGIN_TOP + 20 + 20 * drawn
        out.append(f'<text x="{WIDTH - MARGIN_RIGHT + 12}" y="{ly}" font-size="12" fill="{colour}">{escape(name)}</text>')
        drawn += 1
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(csv_path: str | Path, plot_spec: Schema | None = None, out_path: str | Path | None = None) -> Path:
    """Render ``csv_path`` as an 800x600 SVG next to it (or at ``out_path``)."""
    schema, rows = read_csv(csv_path, plot_spec)
    if not rows:
        raise SchemaError(f"{csv_path}: no data rows")
    target = Path(out_path) if out_path is not None else Path(csv_path).with_suffix(".svg")
    target.write_text(render_svg(schema, rows))
    return target
