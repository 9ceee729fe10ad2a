"""Static SVG renderers: layout, thermal map, Pareto overlay.

Everything is written by hand into plain SVG text so outputs are
bytewise-stable and need no display server.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .analysis import MethodPoints
from .model import BenchmarkConfig, Orientation

# plasma-like stops for the heat map
_COLOR_STOPS = [
    (0.00, (13, 8, 135)),
    (0.25, (126, 3, 168)),
    (0.50, (204, 71, 120)),
    (0.75, (248, 149, 64)),
    (1.00, (240, 249, 33)),
]

_SERIES_COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def heat_color(t: float) -> str:
    """Map t in [0, 1] to a hex color along the gradient stops."""
    t = min(1.0, max(0.0, t))
    for (t0, c0), (t1, c1) in zip(_COLOR_STOPS, _COLOR_STOPS[1:]):
        if t <= t1:
            f = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            rgb = tuple(round(a + f * (b - a)) for a, b in zip(c0, c1))
            return "#%02x%02x%02x" % rgb
    return "#%02x%02x%02x" % _COLOR_STOPS[-1][1]


def _svg_doc(width: float, height: float, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
            f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def layout_svg(config: BenchmarkConfig, layout: dict, path, px_per_mm: float = 12.0) -> Path:
    """Labeled to-scale rectangles of a (possibly partial) placement."""
    w = config.canvas_width * px_per_mm
    h = config.canvas_height * px_per_mm
    margin = 30.0
    body = [f'<rect x="{margin}" y="{margin}" width="{w:.2f}" height="{h:.2f}" '
            'fill="#f5f5f5" stroke="#333" stroke-width="1.5"/>']
    for cid, (row, col, orientation) in sorted(layout.items()):
        orientation = Orientation(orientation) if isinstance(orientation, str) else orientation
        chiplet = config.chiplet(cid)
        cw, ch = chiplet.dims(orientation)
        x = margin + col * config.cell_width * px_per_mm
        y = margin + row * config.cell_height * px_per_mm
        body.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw * px_per_mm:.2f}" '
            f'height="{ch * px_per_mm:.2f}" fill="#9ecae1" fill-opacity="0.85" '
            'stroke="#08519c" stroke-width="1"/>')
        body.append(
            f'<text x="{x + cw * px_per_mm / 2:.2f}" y="{y + ch * px_per_mm / 2:.2f}" '
            'font-size="11" font-family="sans-serif" text-anchor="middle" '
            f'dominant-baseline="middle">{cid}</text>')
    body.append(f'<text x="{margin}" y="{margin - 10:.2f}" font-size="12" '
                f'font-family="sans-serif">{config.name} '
                f'({config.canvas_width:.1f} x {config.canvas_height:.1f} mm)</text>')
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(_svg_doc(w + 2 * margin, h + 2 * margin, body))
    return out


def thermal_svg(temps: np.ndarray, config: BenchmarkConfig, path,
                cell_px: float = 8.0) -> Path:
    """Color-mapped temperature grid with a numeric scale bar and the
    hotspot cell annotated."""
    n = temps.shape[0]
    margin = 30.0
    bar_w = 70.0
    lo, hi = float(temps.min()), float(temps.max())
    spread = hi - lo
    body = []
    for r in range(n):
        for c in range(n):
            t = 0.0 if spread <= 0 else (float(temps[r, c]) - lo) / spread
            body.append(f'<rect x="{margin + c * cell_px:.2f}" y="{margin + r * cell_px:.2f}" '
                        f'width="{cell_px:.2f}" height="{cell_px:.2f}" '
                        f'fill="{heat_color(t)}"/>')
    hot = np.unravel_index(int(np.argmax(temps)), temps.shape)
    hx = margin + (hot[1] + 0.5) * cell_px
    hy = margin + (hot[0] + 0.5) * cell_px
    body.append(f'<circle cx="{hx:.2f}" cy="{hy:.2f}" r="{cell_px:.2f}" fill="none" '
                'stroke="#ffffff" stroke-width="2"/>')
    body.append(f'<text x="{margin}" y="{margin - 10:.2f}" font-size="12" '
                f'font-family="sans-serif">hotspot {hi:.1f} C at '
                f'({hot[0]}, {hot[1]})</text>')
    # scale bar: discrete swatches with min/mid/max labels
    bar_x = margin + n * cell_px + 15.0
    bar_h = n * cell_px
    steps = 24
    for i in range(steps):
        t = 1.0 - i / (steps - 1)
        body.append(f'<rect x="{bar_x:.2f}" y="{margin + i * bar_h / steps:.2f}" width="16" '
                    f'height="{bar_h / steps + 0.5:.2f}" fill="{heat_color(t)}"/>')
    for frac, label in ((0.0, hi), (0.5, lo + spread / 2), (1.0, lo)):
        body.append(f'<text x="{bar_x + 22:.2f}" y="{margin + frac * bar_h + 4:.2f}" '
                    f'font-size="10" font-family="sans-serif">{label:.1f} C</text>')
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(_svg_doc(margin * 2 + n * cell_px + bar_w, margin * 2 + n * cell_px, body))
    return out


def pareto_svg(methods: dict[str, MethodPoints], path, ref_point=None,
               width: float = 640.0, height: float = 480.0) -> Path:
    """Scatter of every method's cloud with its front drawn as a staircase."""
    margin = 55.0
    pts = [p for mp in methods.values() for p in mp.cloud]
    if not pts:
        raise ValueError("nothing to plot")
    wl_lo, wl_hi = min(p.wl for p in pts), max(p.wl for p in pts)
    t_lo, t_hi = min(p.temp for p in pts), max(p.temp for p in pts)
    if ref_point is not None:
        wl_hi = max(wl_hi, ref_point[0])
        t_hi = max(t_hi, ref_point[1])
    wl_pad = 0.05 * (wl_hi - wl_lo) or 1.0
    t_pad = 0.05 * (t_hi - t_lo) or 1.0
    wl_lo, wl_hi = wl_lo - wl_pad, wl_hi + wl_pad
    t_lo, t_hi = t_lo - t_pad, t_hi + t_pad

    def sx(wl):
        return margin + (wl - wl_lo) / (wl_hi - wl_lo) * (width - 2 * margin)

    def sy(temp):
        return height - margin - (temp - t_lo) / (t_hi - t_lo) * (height - 2 * margin)

    body = [f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin:.2f}" '
            f'height="{height - 2 * margin:.2f}" fill="none" stroke="#333"/>',
            f'<text x="{width / 2:.2f}" y="{height - 12:.2f}" font-size="12" '
            'font-family="sans-serif" text-anchor="middle">wirelength (mm)</text>',
            f'<text x="14" y="{height / 2:.2f}" font-size="12" font-family="sans-serif" '
            f'text-anchor="middle" transform="rotate(-90 14 {height / 2:.2f})">'
            'hotspot temperature (C)</text>']
    for i, (name, mp) in enumerate(sorted(methods.items())):
        color = _SERIES_COLORS[i % len(_SERIES_COLORS)]
        for p in mp.cloud:
            body.append(f'<circle cx="{sx(p.wl):.2f}" cy="{sy(p.temp):.2f}" r="2.4" '
                        f'fill="{color}" fill-opacity="0.35"/>')
        if mp.front:
            steps = []
            prev = None
            for p in mp.front:
                if prev is not None:
                    steps.append(f"L {sx(p.wl):.2f} {sy(prev.temp):.2f}")
                steps.append(f"{'M' if prev is None else 'L'} {sx(p.wl):.2f} {sy(p.temp):.2f}")
                prev = p
            body.append(f'<path d="{" ".join(steps)}" fill="none" stroke="{color}" '
                        'stroke-width="2"/>')
            for p in mp.front:
                body.append(f'<circle cx="{sx(p.wl):.2f}" cy="{sy(p.temp):.2f}" r="3.5" '
                            f'fill="{color}"/>')
        ly = margin + 16 + 16 * i
        body.append(f'<rect x="{width - margin - 130:.2f}" y="{ly - 9:.2f}" width="10" '
                    f'height="10" fill="{color}"/>')
        body.append(f'<text x="{width - margin - 114:.2f}" y="{ly:.2f}" font-size="11" '
                    f'font-family="sans-serif">{name} ({len(mp.cloud)} pts)</text>')
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(_svg_doc(width, height, body))
    return out


FIELD_HEADER = "# chipletplace thermal field v1"


def field_to_text(temps: np.ndarray) -> str:
    """Dense text grid: a header comment, then one whitespace-separated row
    of cell temperatures per grid row."""
    lines = [FIELD_HEADER, f"# rows={temps.shape[0]} cols={temps.shape[1]}"]
    for row in temps:
        lines.append(" ".join(f"{v:.6f}" for v in row))
    return "\n".join(lines) + "\n"


def field_from_text(text: str) -> np.ndarray:
    rows = [line for line in text.splitlines() if line and not line.startswith("#")]
    return np.array([[float(v) for v in line.split()] for line in rows])
