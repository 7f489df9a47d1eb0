"""Scatter plots of 2-d projections as standalone SVG.

Domains keep a fixed visual identity: Health is a purple circle,
Entertainment a beige x, Energy a teal diamond, Safety a cherry plus,
Other an orange square. Every marker is its own SVG element inside a
per-domain <g data-domain="..."> group, so files are machine-checkable
with any XML parser, and the legend always lists all five domains.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

DOMAIN_STYLE = {
    "Health": ("#800080", "circle"),
    "Entertainment": ("#F5F5DC", "cross"),
    "Energy": ("#008080", "diamond"),
    "Safety": ("#DE3163", "plus"),
    "Other": ("#FFA500", "square"),
}

_LEGEND_WIDTH = 170


def _marker(shape: str, x: float, y: float, r: float, color: str) -> str:
    if shape == "circle":
        return (f'<circle class="marker" cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" '
                f'fill="none" stroke="{color}" stroke-width="1.2"/>')
    if shape == "cross":
        return (f'<path class="marker" d="M {x - r:.2f} {y - r:.2f} L {x + r:.2f} {y + r:.2f} '
                f'M {x - r:.2f} {y + r:.2f} L {x + r:.2f} {y - r:.2f}" '
                f'stroke="{color}" stroke-width="1.2" fill="none"/>')
    if shape == "diamond":
        pts = f"{x:.2f},{y - r:.2f} {x + r:.2f},{y:.2f} {x:.2f},{y + r:.2f} {x - r:.2f},{y:.2f}"
        return (f'<polygon class="marker" points="{pts}" fill="none" '
                f'stroke="{color}" stroke-width="1.2"/>')
    if shape == "plus":
        return (f'<path class="marker" d="M {x - r:.2f} {y:.2f} L {x + r:.2f} {y:.2f} '
                f'M {x:.2f} {y - r:.2f} L {x:.2f} {y + r:.2f}" '
                f'stroke="{color}" stroke-width="1.2" fill="none"/>')
    if shape == "square":
        return (f'<rect class="marker" x="{x - r:.2f}" y="{y - r:.2f}" '
                f'width="{2 * r:.2f}" height="{2 * r:.2f}" fill="none" '
                f'stroke="{color}" stroke-width="1.2"/>')
    raise ValueError(f"unknown marker shape {shape!r}")


def scatter_svg(projection, width=960, height=720, margin=48, marker_size=4.0,
                title=None) -> str:
    """Render a Projection2D (or anything with coords/labels) to SVG text."""
    coords = np.asarray(projection.coords, dtype=np.float64)
    labels = [str(x) for x in projection.labels]
    plot_right = width - _LEGEND_WIDTH
    if coords.size:
        finite = np.all(np.isfinite(coords), axis=1)
        box = coords[finite] if finite.any() else np.zeros((1, 2))
        lo = box.min(axis=0)
        hi = box.max(axis=0)
        span = np.where(hi - lo > 0, hi - lo, 1.0)
        lo = lo - 0.05 * span
        hi = hi + 0.05 * span
        span = hi - lo
    else:
        lo = np.array([0.0, 0.0])
        span = np.array([1.0, 1.0])

    def to_px(pt):
        px = margin + (pt[0] - lo[0]) / span[0] * (plot_right - 2 * margin)
        py = height - margin - (pt[1] - lo[1]) / span[1] * (height - 2 * margin)
        return px, py

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect class="frame" x="{margin}" y="{margin}" '
        f'width="{plot_right - 2 * margin}" height="{height - 2 * margin}" '
        f'fill="none" stroke="#444444" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{plot_right / 2:.1f}" y="{margin - 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{escape(str(title))}</text>'
        )

    for domain, (color, shape) in DOMAIN_STYLE.items():
        group = [f'<g class="series" data-domain="{domain}">']
        for i, label in enumerate(labels):
            if label != domain or not np.all(np.isfinite(coords[i])):
                continue
            px, py = to_px(coords[i])
            group.append(_marker(shape, px, py, marker_size, color))
        group.append("</g>")
        parts.extend(group)

    legend_x = plot_right + 16
    legend_y = margin + 8
    parts.append('<g class="legend">')
    for row, (domain, (color, shape)) in enumerate(DOMAIN_STYLE.items()):
        cy = legend_y + row * 24
        parts.append(_marker(shape, legend_x + 8, cy, marker_size + 1, color))
        parts.append(
            f'<text x="{legend_x + 24}" y="{cy + 4}" font-family="sans-serif" '
            f'font-size="13">{escape(domain)}</text>'
        )
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts)


def save_svg(projection, path: str | Path, **kwargs) -> None:
    Path(path).write_text(scatter_svg(projection, **kwargs), encoding="utf-8")
