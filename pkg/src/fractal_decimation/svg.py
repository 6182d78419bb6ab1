"""Minimal static SVG plots: line, step, scatter and bar charts."""

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 640
HEIGHT = 420
MARGIN = (60, 20, 30, 50)  # left, right, top, bottom
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
KINDS = ("line", "step", "scatter", "bar")


def _fmt(v):
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def _label(v, log):
    if log:
        return f"1e{v:.1f}" if not float(v).is_integer() else f"1e{int(v)}"
    return f"{v:.4g}"


def emit_plot_svg(series, kind, path, title="", xlabel="", ylabel="", logx=False, logy=False):
    """Write a plot of ``series`` to ``path``.

    ``series`` is a mapping with ``x`` and ``y`` arrays, or a list of such
    mappings (each may carry a ``label``). Log axes drop nonpositive points.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if isinstance(series, dict):
        series = [series]
    prepared = []
    for s in series:
        x = np.asarray(s["x"], dtype=float)
        y = np.asarray(s["y"], dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logx:
            keep &= x > 0
        if logy:
            keep &= y > 0
        x, y = x[keep], y[keep]
        if logx:
            x = np.log10(x)
        if logy:
            y = np.log10(y)
        prepared.append((x, y, s.get("label", "")))
    if not any(len(x) for x, _, _ in prepared):
        raise ValueError("nothing to plot")
    xs = np.concatenate([x for x, _, _ in prepared])
    ys = np.concatenate([y for _, y, _ in prepared])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if kind == "bar":
        y0 = min(y0, 0.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    left, right, top, bottom = MARGIN
    pw = WIDTH - left - right
    ph = HEIGHT - top - bottom

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for v in _ticks(x0, x1):
        out.append(f'<text x="{_fmt(px(v))}" y="{top + ph + 16}" font-size="10" '
                   f'text-anchor="middle">{escape(_label(v, logx))}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<text x="{left - 6}" y="{_fmt(py(v) + 3)}" font-size="10" '
                   f'text-anchor="end">{escape(_label(v, logy))}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="{top - 8}" font-size="13" '
                   f'text-anchor="middle">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 10}" font-size="11" '
                   f'text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{top + ph / 2}" font-size="11" text-anchor="middle" '
                   f'transform="rotate(-90 14 {top + ph / 2})">{escape(ylabel)}</text>')
    for k, (x, y, label) in enumerate(prepared):
        color = COLORS[k % len(COLORS)]
        if not len(x):
            continue
        if kind == "scatter":
            for a, b in zip(x, y):
                out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="1.5" fill="{color}"/>')
        elif kind == "bar":
            width = pw / max(len(x), 1) * 0.8 if len(x) > 1 else pw * 0.1
            base = py(max(y0, 0.0))
            for a, b in zip(x, y):
                h = base - py(b)
                out.append(f'<rect x="{_fmt(px(a) - width / 2)}" y="{_fmt(min(base, base - h))}" '
                           f'width="{_fmt(width)}" height="{_fmt(abs(h))}" fill="{color}"/>')
        else:
            pts = []
            for i, (a, b) in enumerate(zip(x, y)):
                if kind == "step" and i:
                    pts.append(f"{_fmt(px(a))},{_fmt(py(y[i - 1]))}")
                pts.append(f"{_fmt(px(a))},{_fmt(py(b))}")
            out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
                       f'stroke-width="1"/>')
        if label:
            out.append(f'<text x="{left + pw - 4}" y="{top + 14 + 14 * k}" font-size="10" '
                       f'text-anchor="end" fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
    return path


def polyline_points(path):
    """Coordinates of every polyline in an SVG file written by this module."""
    import xml.etree.ElementTree as ET

    tree = ET.parse(path)
    pts = []
    for el in tree.iter("{http://www.w3.org/2000/svg}polyline"):
        pairs = [tuple(float(v) for v in p.split(",")) for p in el.get("points").split()]
        pts.append(pairs)
    return pts


def is_finite_plot(path):
    return all(math.isfinite(a) and math.isfinite(b)
               for line in polyline_points(path) for a, b in line)
