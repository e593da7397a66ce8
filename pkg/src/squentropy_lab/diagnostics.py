"""Decision-boundary rasters and standalone SVG figures.

The SVG writers emit plain SVG 1.1 text with fixed number formatting so that
identical inputs always give identical bytes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from . import mlp
from .calibration import CalibrationReport, histogram_data

SVG_NS = "http://www.w3.org/2000/svg"

DEFAULT_STYLE = {
    "width": 480,
    "height": 400,
    "margin": 50,
    "acc_color": "#1f5fbf",
    "gap_color": "#f08a24",
    "low_color": (190, 30, 45),  # p -> 0
    "high_color": (30, 80, 190),  # p -> 1
    "mid_color": (255, 255, 255),
    "boundary_band": 0.02,
    "font": "sans-serif",
}

_PALETTE = ("#1f5fbf", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


@dataclass(frozen=True)
class BoundaryRaster:
    x_range: tuple
    y_range: tuple
    resolution: int
    probs: np.ndarray  # (resolution, resolution); row i is the i-th y value, ascending

    def cell_centers(self):
        return _centers(self.x_range, self.resolution), _centers(self.y_range, self.resolution)

    def to_csv(self):
        xs, ys = self.cell_centers()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["y\\x"] + [repr(float(x)) for x in xs])
        for y, row in zip(ys, self.probs):
            w.writerow([repr(float(y))] + [repr(float(p)) for p in row])
        return buf.getvalue()


def _centers(bounds, resolution):
    lo, hi = bounds
    step = (hi - lo) / resolution
    return lo + step * (np.arange(resolution) + 0.5)


def data_bounds(features, pad=0.1):
    """Bounding box of 2-D points, padded by ``pad`` times its extent on each side."""
    lo = features.min(axis=0)
    hi = features.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    lo, hi = lo - pad * span, hi + pad * span
    return (float(lo[0]), float(hi[0])), (float(lo[1]), float(hi[1]))


def boundary_raster(params, bounds, resolution=200):
    """Probability of class 0, ``1 / (1 + exp(f_1 - f_0))``, at every cell center.

    ``bounds`` is ``((xmin, xmax), (ymin, ymax))`` in the model's input space.
    """
    if params.architecture.class_count != 2:
        raise ValueError("boundary raster needs a 2-class model")
    if params.architecture.input_dim != 2:
        raise ValueError("boundary raster needs 2-D inputs")
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    (x0, x1), (y0, y1) = bounds
    if not (x0 < x1 and y0 < y1):
        raise ValueError(f"empty bounds {bounds}")
    xs, ys = _centers((x0, x1), resolution), _centers((y0, y1), resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    logits = mlp.predict_logits(params, pts)
    diff = logits[:, 1] - logits[:, 0]
    # split by sign so exp never overflows; diff == 0 gives exactly 0.5
    p = np.empty_like(diff)
    pos = diff >= 0
    e = np.exp(-diff[pos])
    p[pos] = e / (1.0 + e)
    p[~pos] = 1.0 / (1.0 + np.exp(diff[~pos]))
    return BoundaryRaster((x0, x1), (y0, y1), resolution, p.reshape(resolution, resolution))


def weight_norm_series(histories):
    """Long-form rows ``(epoch, name, norm)``, ordered by epoch then name.

    ``histories`` maps a series name to a TrainHistory (or a sequence of
    ``(name, history)`` pairs).
    """
    items = list(histories.items()) if isinstance(histories, dict) else list(histories)
    if not items:
        return []
    lengths = {len(h.weight_norm) for _, h in items}
    if len(lengths) != 1:
        raise ValueError(f"histories have different epoch counts: {sorted(lengths)}")
    items.sort(key=lambda kv: kv[0])
    rows = []
    for e in range(lengths.pop()):
        for name, h in items:
            rows.append((e + 1, name, float(h.weight_norm[e])))
    return rows


def series_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "name", "norm"])
    for epoch, name, norm in rows:
        w.writerow([epoch, name, repr(norm)])
    return buf.getvalue()


# ---------------------------------------------------------------- SVG


def _f(x):
    return f"{x:.3f}".rstrip("0").rstrip(".") if x == x else "0"


class _Svg:
    def __init__(self, style):
        self.s = style
        self.parts = []

    def add(self, text):
        self.parts.append(text)

    def text(self, x, y, body, size=12, anchor="middle", rotate=None):
        extra = f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else ""
        self.add(
            f'<text x="{_f(x)}" y="{_f(y)}" font-family="{self.s["font"]}" font-size="{size}" '
            f'text-anchor="{anchor}"{extra}>{escape(str(body))}</text>'
        )

    def render(self):
        w, h = self.s["width"], self.s["height"]
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="{SVG_NS}" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">\n'
            f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>\n'
        )
        return (head + "\n".join(self.parts) + "\n</svg>\n").encode("utf-8")


def _frame(svg, title, xlabel, ylabel, ymax=1.0):
    s = svg.s
    m, w, h = s["margin"], s["width"], s["height"]
    pw, ph = w - 2 * m, h - 2 * m
    svg.add(f'<rect x="{m}" y="{m}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    svg.text(w / 2, m / 2, title, size=14)
    svg.text(w / 2, h - m / 4, xlabel)
    svg.text(m / 3, h / 2, ylabel, rotate=-90)
    for i in range(6):
        frac = i / 5
        x = m + frac * pw
        y = m + ph - frac * ph
        svg.text(x, m + ph + 15, _f(frac), size=10)
        svg.text(m - 5, y + 4, _f(frac * ymax), size=10, anchor="end")
    return m, pw, ph


def _reliability_svg(report, style, title):
    svg = _Svg(style)
    m, pw, ph = _frame(svg, title, "confidence", "accuracy")
    bw = pw / report.k
    # identity line
    svg.add(
        f'<line x1="{m}" y1="{_f(m + ph)}" x2="{_f(m + pw)}" y2="{m}" '
        'stroke="gray" stroke-dasharray="4 3"/>'
    )
    for b in report.bins:
        x = m + (b.index - 1) * bw
        if b.count == 0:
            continue
        acc_h = b.accuracy * ph
        svg.add(
            f'<rect class="acc" x="{_f(x)}" y="{_f(m + ph - acc_h)}" width="{_f(bw)}" '
            f'height="{_f(acc_h)}" fill="{style["acc_color"]}" stroke="black" stroke-width="0.5"/>'
        )
        # gap bar starts at the top of the accuracy bar and spans to the mean confidence
        gap = b.confidence - b.accuracy
        top = m + ph - max(b.accuracy, b.confidence) * ph
        svg.add(
            f'<rect class="gap" x="{_f(x)}" y="{_f(top)}" width="{_f(bw)}" height="{_f(abs(gap) * ph)}" '
            f'fill="{style["gap_color"]}" fill-opacity="0.6" data-gap="{_f(gap)}"/>'
        )
    svg.text(m + pw - 5, m + ph - 10, f"ECE = {100 * report.ece:.2f}%", anchor="end")
    return svg.render()


def _histogram_svg(report, style, title):
    svg = _Svg(style)
    m, pw, ph = _frame(svg, title, "confidence", "fraction of samples")
    bw = pw / report.k
    for b, frac in zip(report.bins, histogram_data(report)):
        hgt = frac * ph
        svg.add(
            f'<rect class="frac" x="{_f(m + (b.index - 1) * bw)}" y="{_f(m + ph - hgt)}" width="{_f(bw)}" '
            f'height="{_f(hgt)}" fill="{style["acc_color"]}" stroke="black" stroke-width="0.5"/>'
        )
    return svg.render()


def _lerp(c0, c1, t):
    return tuple(int(round(a + (b - a) * t)) for a, b in zip(c0, c1))


def _color(p, style):
    if p < 0.5:
        rgb = _lerp(style["low_color"], style["mid_color"], p / 0.5)
    else:
        rgb = _lerp(style["mid_color"], style["high_color"], (p - 0.5) / 0.5)
    return "#%02x%02x%02x" % rgb


def _raster_svg(raster, style, title, points=None):
    svg = _Svg(style)
    s = style
    m = s["margin"]
    pw, ph = s["width"] - 2 * m, s["height"] - 2 * m
    res = raster.resolution
    cw, chh = pw / res, ph / res
    band = s["boundary_band"]
    svg.text(s["width"] / 2, m / 2, title, size=14)
    for i in range(res):  # row i holds the i-th y value, drawn bottom-up
        y = m + ph - (i + 1) * chh
        for j in range(res):
            p = float(raster.probs[i, j])
            fill = "#000000" if abs(p - 0.5) < band else _color(p, s)
            svg.add(
                f'<rect x="{_f(m + j * cw)}" y="{_f(y)}" width="{_f(cw + 0.02)}" '
                f'height="{_f(chh + 0.02)}" fill="{fill}"/>'
            )
    if points is not None:
        feats, labels = points
        (x0, x1), (y0, y1) = raster.x_range, raster.y_range
        for (px, py), lab in zip(feats, labels):
            cx = m + (px - x0) / (x1 - x0) * pw
            cy = m + ph - (py - y0) / (y1 - y0) * ph
            svg.add(
                f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="1.5" fill="{"#ffffff" if lab == 0 else "#202020"}" '
                'stroke="black" stroke-width="0.3"/>'
            )
    svg.add(f'<rect x="{m}" y="{m}" width="{_f(pw)}" height="{_f(ph)}" fill="none" stroke="black"/>')
    return svg.render()


def _series_svg(rows, style, title, ylabel="last-layer weight norm"):
    svg = _Svg(style)
    s = style
    m = s["margin"]
    pw, ph = s["width"] - 2 * m, s["height"] - 2 * m
    names = sorted({name for _, name, _ in rows})
    epochs = max(e for e, _, _ in rows)
    ymax = max(v for _, _, v in rows) or 1.0
    svg.add(f'<rect x="{m}" y="{m}" width="{_f(pw)}" height="{_f(ph)}" fill="none" stroke="black"/>')
    svg.text(s["width"] / 2, m / 2, title, size=14)
    svg.text(s["width"] / 2, s["height"] - m / 4, "epoch")
    svg.text(m / 3, s["height"] / 2, ylabel, rotate=-90)
    svg.text(m, m + ph + 15, "1", size=10)
    svg.text(m + pw, m + ph + 15, str(epochs), size=10)
    svg.text(m - 5, m + 4, _f(ymax), size=10, anchor="end")
    svg.text(m - 5, m + ph + 4, "0", size=10, anchor="end")
    for k, name in enumerate(names):
        color = _PALETTE[k % len(_PALETTE)]
        pts = []
        for e, n, v in rows:
            if n != name:
                continue
            x = m + (0.0 if epochs == 1 else (e - 1) / (epochs - 1)) * pw
            y = m + ph - v / ymax * ph
            pts.append(f"{_f(x)},{_f(y)}")
        svg.add(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        svg.text(m + 10, m + 18 + 16 * k, name, anchor="start")
        svg.add(f'<line x1="{m + 2}" y1="{m + 14 + 16 * k}" x2="{m + 8}" y2="{m + 14 + 16 * k}" stroke="{color}" stroke-width="3"/>')
    return svg.render()


def emit_svg(obj, kind=None, title=None, style=None, points=None):
    """Render a figure as SVG bytes.

    ``obj`` is a CalibrationReport (``kind`` "reliability" or "histogram"), a
    BoundaryRaster, or weight-norm rows from ``weight_norm_series``.
    """
    st = {**DEFAULT_STYLE, **(style or {})}
    if isinstance(obj, CalibrationReport):
        kind = kind or "reliability"
        if kind == "reliability":
            return _reliability_svg(obj, st, title or "Reliability diagram")
        if kind == "histogram":
            return _histogram_svg(obj, st, title or "Confidence histogram")
        raise ValueError(f"unknown figure kind {kind!r} for a calibration report")
    if isinstance(obj, BoundaryRaster):
        return _raster_svg(obj, st, title or "P(class 0)", points)
    rows = list(obj)
    if not rows or any(len(r) != 3 for r in rows):
        raise ValueError("expected non-empty (epoch, name, value) rows")
    return _series_svg(rows, st, title or "Weight norm along training")
