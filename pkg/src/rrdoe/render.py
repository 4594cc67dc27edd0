"""Self-contained SVG charts (plus the plotted data as CSV) for diagnostics.

Output depends only on the input numbers: coordinates are printed with a
fixed precision and there are no timestamps or generated ids.
"""

from __future__ import annotations

import csv
import io
import math
from html import escape
from typing import Sequence

from .diagnostics import DiagnosticsReport

KINDS = ("histogram", "fitted_vs_residual", "qq", "pareto")

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 50


class RenderError(ValueError):
    pass


def _fmt(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _label(v: float) -> str:
    return f"{v:.4g}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12) + 0.0)
        t += step
    return ticks


def _pad(lo: float, hi: float) -> tuple[float, float]:
    if hi == lo:
        return lo - 1.0, hi + 1.0
    d = (hi - lo) * 0.05
    return lo - d, hi + d


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str, xlim, ylim):
        self.xlo, self.xhi = xlim
        self.ylo, self.yhi = ylim
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
            f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="16" y="{HEIGHT / 2:.0f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {HEIGHT / 2:.0f})">{escape(ylabel)}</text>',
        ]

    def px(self, x: float) -> float:
        return LEFT + (x - self.xlo) / (self.xhi - self.xlo) * (WIDTH - LEFT - RIGHT)

    def py(self, y: float) -> float:
        return HEIGHT - BOTTOM - (y - self.ylo) / (self.yhi - self.ylo) * (HEIGHT - TOP - BOTTOM)

    def axes(self, xticks=True):
        x0, x1 = LEFT, WIDTH - RIGHT
        y0, y1 = HEIGHT - BOTTOM, TOP
        self.parts.append(f'<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>')
        for t in _nice_ticks(self.ylo, self.yhi):
            y = _fmt(self.py(t))
            self.parts.append(f'<line x1="{x0 - 4}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/>')
            self.parts.append(f'<text x="{x0 - 6}" y="{y}" text-anchor="end" '
                              f'dominant-baseline="middle">{_label(t)}</text>')
        if xticks:
            for t in _nice_ticks(self.xlo, self.xhi):
                x = _fmt(self.px(t))
                self.parts.append(f'<line x1="{x}" y1="{y0}" x2="{x}" y2="{y0 + 4}" stroke="black"/>')
                self.parts.append(f'<text x="{x}" y="{y0 + 16}" text-anchor="middle">{_label(t)}</text>')

    def hline(self, y: float, **style):
        attrs = " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in style.items())
        yy = _fmt(self.py(y))
        self.parts.append(f'<line class="hline" x1="{LEFT}" y1="{yy}" x2="{WIDTH - RIGHT}" '
                          f'y2="{yy}" {attrs}/>')

    def polyline(self, pts, cls: str, **style):
        attrs = " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in style.items())
        coords = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in pts)
        self.parts.append(f'<polyline class="{cls}" points="{coords}" fill="none" {attrs}/>')

    def circle(self, x: float, y: float, r: float = 3.0):
        self.parts.append(f'<circle class="point" cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" '
                          f'r="{r}" fill="none" stroke="#1f4e79"/>')

    def rect(self, x0, y0, x1, y1, fill="#4a7ebb"):
        a, b = self.px(min(x0, x1)), self.px(max(x0, x1))
        c, d = self.py(max(y0, y1)), self.py(min(y0, y1))
        self.parts.append(f'<rect class="bar" x="{_fmt(a)}" y="{_fmt(c)}" width="{_fmt(b - a)}" '
                          f'height="{_fmt(d - c)}" fill="{fill}" stroke="black" stroke-width="0.5"/>')

    def raw(self, s: str):
        self.parts.append(s)

    def svg(self) -> bytes:
        return ("\n".join(self.parts + ["</svg>"]) + "\n").encode("utf-8")


def _csv(header: Sequence[str], rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])
    return buf.getvalue().encode("utf-8")


def _histogram(report: DiagnosticsReport):
    bins = report.histogram
    xlo = bins[0].lower
    xhi = bins[-1].lower + bins[-1].width
    c = _Canvas("Histogram of residuals", "residual", "count",
                (xlo, xhi), (0.0, max(b.count for b in bins) * 1.1 or 1.0))
    c.axes()
    for b in bins:
        c.rect(b.lower, 0.0, b.lower + b.width, b.count)
    rows = [(b.lower, b.width, b.count) for b in bins]
    return c.svg(), _csv(["lower", "width", "count"], rows)


def _fitted_vs_residual(report: DiagnosticsReport):
    rs = report.residual_set
    xs, ys = rs.fitted.tolist(), rs.residuals.tolist()
    ycurve = [y for _, y in report.lowess_curve]
    c = _Canvas("Residuals vs fitted", "fitted value", "residual",
                _pad(min(xs), max(xs)), _pad(min(ys + ycurve + [0.0]), max(ys + ycurve + [0.0])))
    c.axes()
    c.hline(0.0, stroke="gray", stroke_dasharray="4 3")
    for x, y in zip(xs, ys):
        c.circle(x, y)
    if report.lowess_curve:
        c.polyline(report.lowess_curve, "lowess", stroke="red", stroke_width="1.5")
    smooth = dict(report.lowess_curve)
    rows = [(x, y, smooth.get(x, float("nan"))) for x, y in sorted(zip(xs, ys))]
    return c.svg(), _csv(["fitted", "residual", "lowess"], rows)


def _qq(report: DiagnosticsReport):
    q = report.qq
    th, sa = q.theoretical.tolist(), q.sample.tolist()
    c = _Canvas("Normal Q-Q", "theoretical quantile", "sample quantile",
                _pad(min(th), max(th)), _pad(min(sa), max(sa)))
    c.axes()
    for x, y in zip(th, sa):
        c.circle(x, y)
    lo, hi = c.xlo, c.xhi
    c.polyline([(lo, q.intercept + q.slope * lo), (hi, q.intercept + q.slope * hi)], "qqline",
               stroke="red")
    return c.svg(), _csv(["theoretical", "sample"], zip(th, sa))


def _pareto(report: DiagnosticsReport):
    effects = report.pareto
    n = max(len(effects), 1)
    top = max((e.magnitude for e in effects), default=1.0) or 1.0
    c = _Canvas("Pareto plot of effects", "|effect|", "", (0.0, top * 1.1), (0.0, float(n)))
    c.axes(xticks=True)
    for i, e in enumerate(effects):
        y0 = n - i - 0.85
        c.rect(0.0, y0, e.magnitude, y0 + 0.7, fill="#4a7ebb" if e.coefficient >= 0 else "#c0504d")
        c.raw(f'<text x="{_fmt(c.px(0.0) + 4)}" y="{_fmt(c.py(y0 + 0.35))}" '
              f'dominant-baseline="middle" font-size="10">{escape(e.term)} ({e.sign})</text>')
    rows = [(e.term, e.coefficient, e.magnitude) for e in effects]
    return c.svg(), _csv(["term", "coefficient", "magnitude"], rows)


_RENDERERS = {
    "histogram": _histogram,
    "fitted_vs_residual": _fitted_vs_residual,
    "qq": _qq,
    "pareto": _pareto,
}


def render_report(report: DiagnosticsReport, kind: str) -> tuple[bytes, bytes]:
    """Return ``(svg_bytes, csv_bytes)`` for one diagnostic chart."""
    try:
        fn = _RENDERERS[kind]
    except KeyError:
        raise RenderError(f"unknown chart kind {kind!r}; expected one of {KINDS}") from None
    return fn(report)
