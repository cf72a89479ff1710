"""Minimal path-based SVG plotting: axes, polylines, band polygons, h-lines.

Deliberately dependency-free; figures are static result displays written
once per run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, target: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


@dataclass
class SvgFigure:
    """Accumulates plot elements in data coordinates, then renders to SVG."""

    width: int = 720
    height: int = 480
    margin: int = 56
    title: str = ""
    xlabel: str = "t (generations)"
    ylabel: str = "mean fitness"
    _elements: list = field(default_factory=list)
    _xlim: list = field(default_factory=lambda: [math.inf, -math.inf])
    _ylim: list = field(default_factory=lambda: [math.inf, -math.inf])
    _legend: list = field(default_factory=list)

    def _track(self, xs, ys):
        for x in xs:
            if math.isfinite(x):
                self._xlim[0] = min(self._xlim[0], x)
                self._xlim[1] = max(self._xlim[1], x)
        for y in ys:
            if math.isfinite(y):
                self._ylim[0] = min(self._ylim[0], y)
                self._ylim[1] = max(self._ylim[1], y)

    def polyline(self, xs, ys, color: str, width: float = 1.6, dash: str | None = None,
                 label: str | None = None):
        xs, ys = list(map(float, xs)), list(map(float, ys))
        self._track(xs, ys)
        self._elements.append(("line", xs, ys, color, width, dash))
        if label:
            self._legend.append((label, color, dash))

    def band(self, xs, y_lo, y_hi, color: str, opacity: float = 0.35,
             label: str | None = None):
        xs = list(map(float, xs))
        y_lo, y_hi = list(map(float, y_lo)), list(map(float, y_hi))
        self._track(xs, y_lo)
        self._track(xs, y_hi)
        self._elements.append(("band", xs, y_lo, y_hi, color, opacity))
        if label:
            self._legend.append((label, color, None))

    def hline(self, y: float, color: str, width: float = 1.0, dash: str = "4,3",
              label: str | None = None):
        self._track([], [float(y)])
        self._elements.append(("hline", float(y), color, width, dash))
        if label:
            self._legend.append((label, color, dash))

    def markers(self, xs, ys, color: str, radius: float = 2.2, label: str | None = None):
        xs, ys = list(map(float, xs)), list(map(float, ys))
        self._track(xs, ys)
        self._elements.append(("markers", xs, ys, color, radius))
        if label:
            self._legend.append((label, color, None))

    # ------------------------------------------------------------------

    def _scales(self):
        x0, x1 = self._xlim
        y0, y1 = self._ylim
        if not math.isfinite(x0):
            x0, x1 = 0.0, 1.0
        if not math.isfinite(y0):
            y0, y1 = 0.0, 1.0
        if x1 == x0:
            x1 = x0 + 1.0
        pad = 0.06 * (y1 - y0) if y1 > y0 else max(abs(y0), 1.0) * 0.1
        y0, y1 = y0 - pad, y1 + pad
        m, w, h = self.margin, self.width, self.height

        def sx(x):
            return m + (x - x0) / (x1 - x0) * (w - 2 * m)

        def sy(y):
            return h - m - (y - y0) / (y1 - y0) * (h - 2 * m)

        return sx, sy, (x0, x1, y0, y1)

    def render(self) -> str:
        sx, sy, (x0, x1, y0, y1) = self._scales()
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
        ]
        m, w, h = self.margin, self.width, self.height
        # axes box and ticks
        out.append(
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" '
            'fill="none" stroke="#333" stroke-width="1"/>'
        )
        for tx in _nice_ticks(x0, x1):
            X = sx(tx)
            out.append(f'<line x1="{_fmt(X)}" y1="{h - m}" x2="{_fmt(X)}" y2="{h - m + 4}" stroke="#333"/>')
            out.append(
                f'<text x="{_fmt(X)}" y="{h - m + 16}" font-size="11" text-anchor="middle" '
                f'fill="#333" font-family="sans-serif">{tx:g}</text>'
            )
        for ty in _nice_ticks(y0, y1):
            Y = sy(ty)
            out.append(f'<line x1="{m - 4}" y1="{_fmt(Y)}" x2="{m}" y2="{_fmt(Y)}" stroke="#333"/>')
            out.append(
                f'<text x="{m - 7}" y="{_fmt(Y)}" font-size="11" text-anchor="end" '
                f'dominant-baseline="middle" fill="#333" font-family="sans-serif">{ty:g}</text>'
            )
        if self.title:
            out.append(
                f'<text x="{w / 2}" y="{m - 14}" font-size="14" text-anchor="middle" '
                f'fill="#111" font-family="sans-serif">{self.title}</text>'
            )
        out.append(
            f'<text x="{w / 2}" y="{h - 10}" font-size="12" text-anchor="middle" '
            f'fill="#111" font-family="sans-serif">{self.xlabel}</text>'
        )
        out.append(
            f'<text x="14" y="{h / 2}" font-size="12" text-anchor="middle" fill="#111" '
            f'font-family="sans-serif" transform="rotate(-90 14 {h / 2})">{self.ylabel}</text>'
        )

        clip = f'<clipPath id="plot"><rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}"/></clipPath>'
        out.append(f"<defs>{clip}</defs>")
        out.append('<g clip-path="url(#plot)">')
        for el in self._elements:
            if el[0] == "band":
                _, xs, lo, hi, color, op = el
                pts = [f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(xs, hi)]
                pts += [f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(reversed(xs), reversed(lo))]
                out.append(f'<polygon points="{" ".join(pts)}" fill="{color}" opacity="{op}" stroke="none"/>')
        for el in self._elements:
            if el[0] == "hline":
                _, y, color, width, dash = el
                out.append(
                    f'<line x1="{m}" y1="{_fmt(sy(y))}" x2="{w - m}" y2="{_fmt(sy(y))}" '
                    f'stroke="{color}" stroke-width="{width}" stroke-dasharray="{dash}"/>'
                )
            elif el[0] == "line":
                _, xs, ys, color, width, dash = el
                pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(xs, ys) if math.isfinite(y))
                dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
                out.append(
                    f'<polyline points="{pts}" fill="none" stroke="{color}" '
                    f'stroke-width="{width}"{dash_attr}/>'
                )
            elif el[0] == "markers":
                _, xs, ys, color, r = el
                for x, y in zip(xs, ys):
                    if math.isfinite(y):
                        out.append(
                            f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="{r}" '
                            f'fill="none" stroke="{color}" stroke-width="1.2"/>'
                        )
        out.append("</g>")

        lx, ly = m + 10, m + 12
        for label, color, dash in self._legend:
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(
                f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="2"{dash_attr}/>'
            )
            out.append(
                f'<text x="{lx + 28}" y="{ly}" font-size="11" fill="#111" '
                f'font-family="sans-serif">{label}</text>'
            )
            ly += 15
        out.append("</svg>")
        return "\n".join(out)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.render())
