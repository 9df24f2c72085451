"""Two-panel SVG of recovery errors against the number of measurements.

Left panel: every trial's log10 relative error. Right panel: the median per
k. Circles mark the l2,1 baseline, triangles the manifold method.
"""

import math
from pathlib import Path
from xml.sax.saxutils import escape

from ..exceptions import InvalidArgumentError

FLOOR = 1e-17
STYLE = {
    "l21": {"color": "#1f77b4", "marker": "circle", "label": "l2,1 minimization"},
    "manifold": {"color": "#d62728", "marker": "triangle", "label": "manifold CG"},
}
PANEL_W, PANEL_H = 360, 280
MARGIN_L, MARGIN_T, MARGIN_B, GAP = 60, 40, 50, 60


def _log10(x):
    return math.log10(max(float(x), FLOOR))


def _marker(kind, x, y, color, size=3.5):
    if kind == "circle":
        return (f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{size:.2f}" fill="none" '
                f'stroke="{color}" stroke-width="1"/>')
    h = size * 1.2
    pts = f"{x:.2f},{y - h:.2f} {x - h:.2f},{y + h * 0.8:.2f} {x + h:.2f},{y + h * 0.8:.2f}"
    return f'<polygon points="{pts}" fill="none" stroke="{color}" stroke-width="1"/>'


class _Axes:
    def __init__(self, x0, kmin, kmax, ymin, ymax):
        self.x0, self.kmin, self.kmax = x0, kmin, kmax
        self.ymin, self.ymax = ymin, ymax

    def px(self, k):
        span = (self.kmax - self.kmin) or 1
        return self.x0 + (k - self.kmin) / span * PANEL_W

    def py(self, v):
        span = (self.ymax - self.ymin) or 1
        return MARGIN_T + (self.ymax - v) / span * PANEL_H

    def frame(self, title):
        out = [f'<rect x="{self.x0}" y="{MARGIN_T}" width="{PANEL_W}" height="{PANEL_H}" '
               'fill="none" stroke="black"/>',
               f'<text x="{self.x0 + PANEL_W / 2}" y="{MARGIN_T - 12}" '
               f'text-anchor="middle" font-size="13">{escape(title)}</text>']
        for e in range(math.floor(self.ymin), math.ceil(self.ymax) + 1, 2):
            y = self.py(e)
            out.append(f'<line x1="{self.x0 - 4}" y1="{y:.2f}" x2="{self.x0}" y2="{y:.2f}" stroke="black"/>')
            out.append(f'<text x="{self.x0 - 7}" y="{y + 4:.2f}" text-anchor="end" '
                       f'font-size="10">1e{e}</text>')
        step = max(1, round((self.kmax - self.kmin) / 8 / 2) * 2)
        for k in range(self.kmin, self.kmax + 1, step):
            x = self.px(k)
            bottom = MARGIN_T + PANEL_H
            out.append(f'<line x1="{x:.2f}" y1="{bottom}" x2="{x:.2f}" y2="{bottom + 4}" stroke="black"/>')
            out.append(f'<text x="{x:.2f}" y="{bottom + 16}" text-anchor="middle" font-size="10">{k}</text>')
        out.append(f'<text x="{self.x0 + PANEL_W / 2}" y="{MARGIN_T + PANEL_H + 36}" '
                   'text-anchor="middle" font-size="11">number of measurements k</text>')
        return out


def render_svg(summary, records):
    """Return the SVG document as a string."""
    if not summary:
        raise InvalidArgumentError("empty summary: nothing to plot")
    methods = [m for m in ("l21", "manifold") if any(r.method == m for r in summary)]
    ks = [r.k for r in summary] + [r.k for r in records]
    logs = [_log10(r.median_rel_error) for r in summary] + [_log10(r.rel_error) for r in records]
    kmin, kmax = min(ks), max(ks)
    ymin, ymax = math.floor(min(logs)) - 0.5, max(1.0, math.ceil(max(logs)) + 0.5)
    left = _Axes(MARGIN_L, kmin, kmax, ymin, ymax)
    right = _Axes(MARGIN_L + PANEL_W + GAP, kmin, kmax, ymin, ymax)
    width = MARGIN_L + 2 * PANEL_W + GAP + 20
    height = MARGIN_T + PANEL_H + MARGIN_B + 20 * len(methods)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">',
             '<rect width="100%" height="100%" fill="white"/>']
    parts += left.frame("relative error per trial")
    parts += right.frame("median relative error")
    for m in methods:
        st = STYLE[m]
        parts.append(f'<g class="scatter" data-method="{m}">')
        for r in records:
            if r.method == m:
                parts.append(_marker(st["marker"], left.px(r.k), left.py(_log10(r.rel_error)), st["color"]))
        parts.append("</g>")
        rows = sorted((r for r in summary if r.method == m), key=lambda r: r.k)
        pts = " ".join(f"{right.px(r.k):.2f},{right.py(_log10(r.median_rel_error)):.2f}" for r in rows)
        parts.append(f'<g class="median" data-method="{m}">')
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{st["color"]}" stroke-width="1.5"/>')
        for r in rows:
            parts.append(_marker(st["marker"], right.px(r.k), right.py(_log10(r.median_rel_error)),
                                 st["color"], 4.0))
        parts.append("</g>")
    for i, m in enumerate(methods):
        st = STYLE[m]
        y = MARGIN_T + PANEL_H + MARGIN_B + 12 + 20 * i
        parts.append(_marker(st["marker"], MARGIN_L + 10, y - 4, st["color"]))
        parts.append(f'<text x="{MARGIN_L + 22}" y="{y}" font-size="11">{escape(st["label"])}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot(summary, records, path):
    """Write :func:`render_svg` output to ``path`` (nothing is written on error)."""
    text = render_svg(summary, records)
    Path(path).write_text(text)
    return Path(path)
