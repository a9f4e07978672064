"""Minimal SVG emitters for histograms and line charts.

Output is plain XML text with deterministic number formatting so repeated
runs produce byte-identical files. Each data series lives in its own <g>
element (rect bars for histograms, a polyline for charts).
"""

from __future__ import annotations

from typing import Sequence

from attrex.analysis import Histogram
from attrex.errors import InputError

WIDTH = 640
HEIGHT = 400
MARGIN_LEFT = 56
MARGIN_RIGHT = 16
MARGIN_TOP = 36
MARGIN_BOTTOM = 48

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(value: float) -> str:
    return f"{value:.2f}".rstrip("0").rstrip(".")


def _axis_and_title(title: str, x_label: str, y_label: str, y_max: float) -> list[str]:
    x0, y0 = MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM
    x1, y1 = WIDTH - MARGIN_RIGHT, MARGIN_TOP
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) // 2}" y="20" text-anchor="middle" '
        f'font-size="14">{title}</text>',
        f'<text x="{(x0 + x1) // 2}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>',
        f'<text x="14" y="{(y0 + y1) // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {(y0 + y1) // 2})">{y_label}</text>',
        f'<text x="{x0 - 6}" y="{y1 + 4}" text-anchor="end" '
        f'font-size="10">{_fmt(y_max)}</text>',
        f'<text x="{x0 - 6}" y="{y0 + 4}" text-anchor="end" font-size="10">0</text>',
    ]


def _legend(labels: Sequence[str]) -> list[str]:
    parts = []
    x = WIDTH - MARGIN_RIGHT - 110
    for i, label in enumerate(labels):
        y = MARGIN_TOP + 14 * i
        color = PALETTE[i % len(PALETTE)]
        parts.append(
            f'<rect x="{x}" y="{y}" width="10" height="10" fill="{color}" '
            f'fill-opacity="0.6"/>'
        )
        parts.append(
            f'<text x="{x + 14}" y="{y + 9}" font-size="11">{label}</text>'
        )
    return parts


def histogram_svg(
    hist: Histogram,
    title: str,
    series_labels: tuple[str, str] = ("d1", "d2"),
) -> str:
    """Two overlaid translucent bar series sharing the histogram's bin edges."""
    edges = hist.bin_edges
    series = (hist.counts_d1, hist.counts_d2)
    y_max = max(1, int(max(counts.max() for counts in series)))
    span = float(edges[-1] - edges[0])
    if span <= 0:
        raise InputError("histogram_svg: degenerate bin edges")
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(value: float) -> float:
        return MARGIN_LEFT + plot_w * (value - edges[0]) / span

    def sy(count: float) -> float:
        return HEIGHT - MARGIN_BOTTOM - plot_h * count / y_max

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    parts += _axis_and_title(title, "distance", "count", y_max)
    for s, counts in enumerate(series):
        color = PALETTE[s % len(PALETTE)]
        parts.append(f'<g class="series-{series_labels[s]}" fill="{color}" '
                     f'fill-opacity="0.55">')
        for i, count in enumerate(counts):
            if count == 0:
                continue
            x = sx(float(edges[i]))
            w = sx(float(edges[i + 1])) - x
            y = sy(float(count))
            h = HEIGHT - MARGIN_BOTTOM - y
            parts.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
                f'height="{_fmt(h)}"/>'
            )
        parts.append("</g>")
    parts += _legend(series_labels)
    parts.append(f'<text x="{MARGIN_LEFT}" y="{HEIGHT - 30}" font-size="10">'
                 f'{_fmt(float(edges[0]))}</text>')
    parts.append(f'<text x="{WIDTH - MARGIN_RIGHT}" y="{HEIGHT - 30}" '
                 f'text-anchor="end" font-size="10">{_fmt(float(edges[-1]))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def line_chart_svg(
    x_values: Sequence[float],
    series: Sequence[tuple[str, Sequence[float]]],
    title: str,
    x_label: str,
    y_label: str,
    y_range: tuple[float, float] | None = None,
) -> str:
    """One polyline group per series over a shared x axis."""
    if not series or not x_values:
        raise InputError("line_chart_svg: nothing to plot")
    xs = [float(v) for v in x_values]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_range is None:
        flat = [float(v) for _, ys in series for v in ys]
        y_lo, y_hi = min(flat + [0.0]), max(flat + [1e-9])
    else:
        y_lo, y_hi = y_range
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(value: float) -> float:
        return MARGIN_LEFT + plot_w * (value - x_lo) / (x_hi - x_lo)

    def sy(value: float) -> float:
        return HEIGHT - MARGIN_BOTTOM - plot_h * (value - y_lo) / (y_hi - y_lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    parts += _axis_and_title(title, x_label, y_label, y_hi)
    for s, (label, ys) in enumerate(series):
        if len(ys) != len(xs):
            raise InputError(
                f"line_chart_svg: series {label!r} has {len(ys)} points for "
                f"{len(xs)} x values"
            )
        color = PALETTE[s % len(PALETTE)]
        points = " ".join(f"{_fmt(sx(x))},{_fmt(sy(float(y)))}" for x, y in zip(xs, ys))
        parts.append(f'<g class="series-{s}">')
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" '
            f'points="{points}"/>'
        )
        parts.append("</g>")
    parts += _legend([label for label, _ in series])
    parts.append(f'<text x="{MARGIN_LEFT}" y="{HEIGHT - 30}" font-size="10">'
                 f'{_fmt(x_lo)}</text>')
    parts.append(f'<text x="{WIDTH - MARGIN_RIGHT}" y="{HEIGHT - 30}" '
                 f'text-anchor="end" font-size="10">{_fmt(x_hi)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
