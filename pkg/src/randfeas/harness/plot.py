"""Static SVG line plots with optional +-1 std bands; no plotting library needed."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..exceptions import OutputError, ParameterError
from .runner import AggregateTrace

__all__ = ["LOG_FLOOR", "emit_plot_svg"]

LOG_FLOOR = 1e-16
WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 170, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _series(trace, column):
    if isinstance(trace, AggregateTrace):
        trace = {c: trace.column(c) for c in AggregateTrace.COLUMNS}
    key = column if column in trace else f"mean_{column}"
    if key not in trace or "k" not in trace:
        raise ParameterError(f"trace has no column {column!r}")
    std_key = key.replace("mean_", "std_", 1)
    std = np.asarray(trace[std_key], float) if std_key != key and std_key in trace else None
    return np.asarray(trace["k"], float), np.asarray(trace[key], float), std


def _fmt(v):
    return f"{v:.2f}"


def _tick_label(v, log_y):
    return f"1e{int(round(v))}" if log_y else f"{v:.3g}"


def emit_plot_svg(traces, path, log_y=False, column="gap", title=""):
    """Write one polyline per ``(name, trace)`` pair.

    ``trace`` is an :class:`AggregateTrace` or a mapping read back from a
    trace CSV. A shaded band of +-1 standard deviation is drawn whenever the
    trace carries a nonzero std column. Under ``log_y`` nonpositive means are
    clipped to ``1e-16`` and the figure carries a warning line; band edges are
    clipped the same way without a warning.
    """
    traces = list(traces)
    if not traces:
        raise ParameterError("nothing to plot")
    series = [(str(name), *_series(tr, column)) for name, tr in traces]

    clipped = 0
    prepared = []
    for name, x, y, std in series:
        lo = hi = None
        if std is not None and np.any(std > 0):
            lo, hi = y - std, y + std
        if log_y:
            clipped += int(np.sum(~(y > 0)))
            y = np.log10(np.maximum(np.where(np.isfinite(y), y, LOG_FLOOR), LOG_FLOOR))
            if lo is not None:
                lo = np.log10(np.maximum(lo, LOG_FLOOR))
                hi = np.log10(np.maximum(hi, LOG_FLOOR))
        prepared.append((name, x, y, lo, hi))

    xs = np.concatenate([p[1] for p in prepared])
    ys = np.concatenate([np.concatenate([p[2]] + [b for b in p[3:] if b is not None]) for p in prepared])
    ys = ys[np.isfinite(ys)]
    if xs.size == 0 or ys.size == 0:
        raise ParameterError("traces contain no finite points")
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    if log_y:
        y0, y1 = math.floor(y0), math.ceil(y1)

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{LEFT}" y="{TOP - 10}">{escape(title)}</text>')

    if log_y:
        yticks = np.arange(y0, y1 + 1)
        if len(yticks) > 9:
            yticks = yticks[:: math.ceil(len(yticks) / 9)]
    else:
        yticks = np.linspace(y0, y1, 5)
    for t in yticks:
        out.append(f'<line x1="{LEFT - 4}" y1="{_fmt(py(t))}" x2="{LEFT}" y2="{_fmt(py(t))}" stroke="black"/>')
        out.append(
            f'<text x="{LEFT - 8}" y="{_fmt(py(t) + 4)}" text-anchor="end">{_tick_label(t, log_y)}</text>'
        )
    for t in np.linspace(x0, x1, 5):
        out.append(f'<line x1="{_fmt(px(t))}" y1="{TOP + ph}" x2="{_fmt(px(t))}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{TOP + ph + 18}" text-anchor="middle">{t:.4g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 8}" text-anchor="middle">k</text>')
    ylabel = escape(column) + (" (log10)" if log_y else "")
    out.append(
        f'<text x="16" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + ph / 2:.2f})">{ylabel}</text>'
    )

    for idx, (name, x, y, lo, hi) in enumerate(prepared):
        color = COLORS[idx % len(COLORS)]
        if lo is not None:
            upper = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, hi))
            lower = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x[::-1], lo[::-1]))
            out.append(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = TOP + 16 + 18 * idx
        out.append(f'<line x1="{LEFT + pw + 10}" y1="{ly}" x2="{LEFT + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw + 36}" y="{ly + 4}">{escape(name)}</text>')

    if clipped:
        out.append(
            f'<text class="warning" x="{LEFT + 6}" y="{TOP + ph - 8}" fill="#b00000">'
            f"warning: {clipped} nonpositive value(s) clipped to 1e-16</text>"
        )
    out.append("</svg>")
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(out) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from None
