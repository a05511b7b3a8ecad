"""Minimal standalone SVG scatter plots (no plotting dependency)."""
from __future__ import annotations

import numpy as np

_WIDTH, _HEIGHT, _PAD = 480, 360, 42
_COLORS = {1: "#1f5fbf", -1: "#c03028"}
_NAMES = {1: "class +1", -1: "class -1"}


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def emit_svg_scatter(points, labels, path, title: str = "") -> None:
    """Write a two-class scatter plot with axes and a legend.

    Deterministic for fixed input; an empty point list still produces a
    valid document with axes.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    labels = np.asarray(labels).reshape(-1)
    if len(points) != len(labels):
        raise ValueError("points and labels length mismatch")
    if len(points):
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        span = np.where(hi - lo > 0, hi - lo, 1.0)
    else:
        lo, span = np.zeros(2), np.ones(2)

    def sx(v):
        return _PAD + (v - lo[0]) / span[0] * (_WIDTH - 2 * _PAD)

    def sy(v):
        return _HEIGHT - _PAD - (v - lo[1]) / span[1] * (_HEIGHT - 2 * _PAD)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<line x1="{_PAD}" y1="{_HEIGHT - _PAD}" x2="{_WIDTH - _PAD}" '
        f'y2="{_HEIGHT - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_HEIGHT - _PAD}" '
        f'stroke="black"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_WIDTH // 2}" y="20" text-anchor="middle" '
            f'font-size="14">{title}</text>'
        )
    for (x, y), lbl in zip(points, labels):
        color = _COLORS.get(int(lbl), "#555555")
        parts.append(
            f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3" '
            f'fill="{color}" fill-opacity="0.65"/>'
        )
    for k, (lbl, color) in enumerate(_COLORS.items()):
        y0 = _PAD + 16 * k
        parts.append(
            f'<rect x="{_WIDTH - _PAD - 86}" y="{y0 - 9}" width="10" height="10" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_WIDTH - _PAD - 72}" y="{y0}" font-size="11">'
            f"{_NAMES[lbl]}</text>"
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
