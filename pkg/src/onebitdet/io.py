"""CSV, SVG and manifest writers."""

from __future__ import annotations

import hashlib
import json
import math
from html import escape
from pathlib import Path
from typing import Sequence

import numpy as np


def format_value(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.9g}"


def write_csv(curve, path) -> None:
    """Write a curve's rows (``curve.COLUMNS`` header) as UTF-8 CSV with ``\\n`` newlines."""
    lines = [",".join(curve.COLUMNS)]
    for row in curve.rows():
        lines.append(",".join(format_value(v) for v in row))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def read_csv(path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    header = text[0].split(",")
    rows = [[float(x) for x in line.split(",")] for line in text[1:] if line]
    return header, np.array(rows).reshape(len(rows), len(header))


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
            "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

WIDTH, HEIGHT = 640, 480
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 60


def plot_transform(xlim, ylim):
    """Map data coordinates to SVG pixel coordinates."""
    (x0, x1), (y0, y1) = xlim, ylim
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def to_px(x, y):
        return (LEFT + (x - x0) / (x1 - x0) * pw, TOP + ph - (y - y0) / (y1 - y0) * ph)

    return to_px


def write_svg_plot(curves: Sequence[tuple[str, Sequence[float], Sequence[float]]], path,
                   xlabel: str = "p_fa", ylabel: str = "p_d", title: str = "",
                   xlim=(0.0, 1.0), ylim=(0.0, 1.0), chance_line: bool = False) -> None:
    """Standalone SVG line plot, one polyline and one legend entry per ``(label, xs, ys)``."""
    if not curves:
        raise ValueError("need at least one curve to plot")
    to_px = plot_transform(xlim, ylim)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    (ax0, ay0), (ax1, ay1) = to_px(xlim[0], ylim[0]), to_px(xlim[1], ylim[1])
    out.append(f'<g class="axes" stroke="black" stroke-width="1">'
               f'<line x1="{ax0:.2f}" y1="{ay0:.2f}" x2="{ax1:.2f}" y2="{ay0:.2f}"/>'
               f'<line x1="{ax0:.2f}" y1="{ay0:.2f}" x2="{ax0:.2f}" y2="{ay1:.2f}"/></g>')
    for k in range(6):
        fx = xlim[0] + k * (xlim[1] - xlim[0]) / 5
        fy = ylim[0] + k * (ylim[1] - ylim[0]) / 5
        px, _ = to_px(fx, ylim[0])
        _, py = to_px(xlim[0], fy)
        out.append(f'<text x="{px:.2f}" y="{ay0 + 18:.2f}" font-size="11" '
                   f'text-anchor="middle">{fx:g}</text>')
        out.append(f'<text x="{ax0 - 8:.2f}" y="{py + 4:.2f}" font-size="11" '
                   f'text-anchor="end">{fy:g}</text>')
    out.append(f'<text x="{(ax0 + ax1) / 2:.2f}" y="{HEIGHT - 15}" font-size="13" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{(ay0 + ay1) / 2:.2f}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 18 {(ay0 + ay1) / 2:.2f})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="22" font-size="14" '
                   f'text-anchor="middle">{escape(title)}</text>')
    if chance_line:
        out.append(f'<line class="chance" x1="{ax0:.2f}" y1="{ay0:.2f}" x2="{ax1:.2f}" '
                   f'y2="{ay1:.2f}" stroke="#999" stroke-dasharray="4 4"/>')
    for k, (label, xs, ys) in enumerate(curves):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join("{:.3f},{:.3f}".format(*to_px(float(x), float(y)))
                       for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y))
        out.append(f'<polyline data-label="{escape(str(label))}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5" points="{pts}"/>')
        ly = TOP + 10 + 16 * k
        lx = ax1 - 170
        out.append(f'<line x1="{lx:.2f}" y1="{ly:.2f}" x2="{lx + 20:.2f}" y2="{ly:.2f}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{lx + 26:.2f}" y="{ly + 4:.2f}" '
                   f'font-size="11">{escape(str(label))}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
