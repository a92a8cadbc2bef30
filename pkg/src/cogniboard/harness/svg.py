"""Minimal deterministic SVG chart emission (display-only output).

Hand-rolled so report bundles hash identically across runs; no library
metadata, timestamps, or generated ids end up in the files.
"""

from __future__ import annotations

from pathlib import Path

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 70, 20, 40, 60
_COLORS = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed", "#0891b2", "#be185d"]


def _scale(v, lo, hi, out_lo, out_hi):
    if hi == lo:
        return (out_lo + out_hi) / 2
    return out_lo + (v - lo) * (out_hi - out_lo) / (hi - lo)


def _frame(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>',
    ]


def bar_chart(labels: list[str], values: list[float], path: str | Path, title: str = "", y_label: str = "") -> None:
    parts = _frame(title)
    lo, hi = 0.0, max(max(values), 1e-9) * 1.1
    n = len(values)
    plot_w = _W - _ML - _MR
    bar_w = plot_w / max(n, 1) * 0.7
    for i, (label, v) in enumerate(zip(labels, values)):
        x = _ML + plot_w * (i + 0.15) / n
        y = _scale(v, lo, hi, _H - _MB, _MT)
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{_H - _MB - y:.1f}" '
            f'fill="{_COLORS[i % len(_COLORS)]}"/>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{_H - _MB + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{y - 4:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{v:.3f}</text>'
        )
    parts.append(f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>')
    if y_label:
        parts.append(
            f'<text x="16" y="{_H / 2:.1f}" font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 16 {_H / 2:.1f})" text-anchor="middle">{y_label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def line_chart(
    xs: list[float],
    series: dict[str, list[float]],
    path: str | Path,
    title: str = "",
    y_label: str = "",
    step: bool = False,
) -> None:
    parts = _frame(title)
    all_y = [v for ys in series.values() for v in ys]
    lo_x, hi_x = min(xs), max(xs)
    lo_y, hi_y = min(all_y + [0.0]), max(all_y) * 1.05 + 1e-9
    for k, (name, ys) in enumerate(sorted(series.items())):
        pts = []
        prev = None
        for x, y in zip(xs, ys):
            px = _scale(x, lo_x, hi_x, _ML, _W - _MR)
            py = _scale(y, lo_y, hi_y, _H - _MB, _MT)
            if step and prev is not None:
                pts.append(f"{px:.1f},{prev:.1f}")
            pts.append(f"{px:.1f},{py:.1f}")
            prev = py
        parts.append(
            f'<polyline points="{" ".join(pts)}" fill="none" stroke="{_COLORS[k % len(_COLORS)]}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{_W - _MR - 4}" y="{_MT + 16 * (k + 1)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="{_COLORS[k % len(_COLORS)]}">{name}</text>'
        )
    parts.append(f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>')
    for x in (lo_x, hi_x):
        px = _scale(x, lo_x, hi_x, _ML, _W - _MR)
        parts.append(
            f'<text x="{px:.1f}" y="{_H - _MB + 16}" text-anchor="middle" font-family="sans-serif" font-size="11">{x:g}</text>'
        )
    for y in (lo_y, hi_y):
        py = _scale(y, lo_y, hi_y, _H - _MB, _MT)
        parts.append(
            f'<text x="{_ML - 6}" y="{py:.1f}" text-anchor="end" font-family="sans-serif" font-size="11">{y:.2f}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="16" y="{_H / 2:.1f}" font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 16 {_H / 2:.1f})" text-anchor="middle">{y_label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
