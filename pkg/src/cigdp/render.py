"""SVG output: layered drawings and simple step-line charts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from .errors import InvalidStateError
from .graph import Drawing, count_crossings

__all__ = ["RenderOptions", "render_svg", "step_chart_svg"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


@dataclass(frozen=True)
class RenderOptions:
    layer_gap: float = 140.0
    row_gap: float = 28.0
    margin: float = 40.0
    radius: float = 7.0
    labels: bool = False
    title: str = ""


def render_svg(drawing: Drawing, options: RenderOptions = RenderOptions()) -> bytes:
    """One column per layer, rank 1 at the top, straight arcs.  Incremental
    vertices and arcs carry the ``inc`` class and a distinct colour."""
    if not drawing.is_complete:
        raise InvalidStateError("only complete drawings can be rendered")
    g, o = drawing.graph, options
    tallest = max((len(layer) for layer in drawing.order), default=1)
    width = 2 * o.margin + max(g.num_layers - 1, 0) * o.layer_gap
    height = 2 * o.margin + max(tallest - 1, 0) * o.row_gap + 20

    def xy(v):
        return o.margin + int(g.layer_of[v]) * o.layer_gap, o.margin + 20 + (int(drawing.pos[v]) - 1) * o.row_gap

    crossings = count_crossings(drawing)
    heading = f"{o.title + ' - ' if o.title else ''}crossings: {crossings}"
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
        f"<title>{escape(heading)}</title>",
        "<style>.arc{stroke:#888;stroke-width:1}.arc.inc{stroke:#d62728;stroke-dasharray:4 2}"
        ".v{fill:#1f77b4}.v.inc{fill:#d62728}text{font:11px sans-serif}</style>",
        f'<text x="{o.margin:g}" y="16">{escape(heading)}</text>',
    ]
    inc = g.is_incremental
    for tail, head in sorted(g.arcs):
        (x1, y1), (x2, y2) = xy(tail), xy(head)
        cls = "arc inc" if inc[tail] or inc[head] else "arc"
        out.append(f'<line class="{cls}" x1="{x1:g}" y1="{y1:g}" x2="{x2:g}" y2="{y2:g}"/>')
    for v in range(1, g.n + 1):
        x, y = xy(v)
        cls = "v inc" if inc[v] else "v"
        out.append(f'<circle class="{cls}" id="v{v}" cx="{x:g}" cy="{y:g}" r="{o.radius:g}"/>')
        if o.labels:
            out.append(f'<text x="{x + o.radius + 2:g}" y="{y + 4:g}">{v}</text>')
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


def step_chart_svg(series: Mapping[str, tuple[Sequence[float], Sequence[float]]], title: str = "",
                   xlabel: str = "", ylabel: str = "", width: float = 480, height: float = 320) -> str:
    """Step-line chart of ``{name: (xs, ys)}`` with a legend."""
    left, right, top, bottom = 50.0, 130.0, 30.0, 40.0
    xs = [x for pts in series.values() for x in pts[0] if x == x and abs(x) != float("inf")]
    ys = [y for pts in series.values() for y in pts[1] if y == y and abs(y) != float("inf")]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(min(ys), 0.0), max(ys)) if ys else (0.0, 1.0)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:g}" height="{height:g}">',
        f"<title>{escape(title)}</title>",
        f'<text x="{left:g}" y="18" font-family="sans-serif" font-size="13">{escape(title)}</text>',
        f'<rect x="{left:g}" y="{top:g}" width="{pw:g}" height="{ph:g}" fill="none" stroke="#333"/>',
        f'<text x="{left:g}" y="{height - 8:g}" font-family="sans-serif" font-size="11">'
        f"{escape(xlabel)} [{x0:g}, {x1:g}]</text>",
        f'<text x="4" y="{top - 4:g}" font-family="sans-serif" font-size="11">{escape(ylabel)} [{y0:g}, {y1:g}]</text>',
    ]
    for k, (name, (px, py)) in enumerate(series.items()):
        colour = PALETTE[k % len(PALETTE)]
        pts = []
        for i, (x, y) in enumerate(zip(px, py)):
            if i:
                pts.append(f"{sx(x):.2f},{sy(py[i - 1]):.2f}")
            pts.append(f"{sx(x):.2f},{sy(y):.2f}")
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        ly = top + 14 * (k + 1)
        out.append(f'<text x="{width - right + 8:g}" y="{ly:g}" fill="{colour}" font-family="sans-serif" '
                   f'font-size="11">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
