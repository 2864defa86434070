"""Dependency-free SVG line chart for regret curves: mean line + std band."""

from __future__ import annotations

import numpy as np

__all__ = ["curves_svg"]

WIDTH, HEIGHT = 800, 600
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 160, 40, 50

PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    return [lo + i * (hi - lo) / (n - 1) for i in range(n)]


def curves_svg(
    series: list[tuple[str, np.ndarray, np.ndarray]],
    title: str,
    y_label: str,
) -> str:
    """Render (name, mean, std) series as an 800x600 SVG chart string."""
    if not series:
        raise ValueError("no series to plot")
    n_iter = max(len(mean) for _, mean, _ in series)
    y_lo = min(float(np.min(m - s)) for _, m, s in series)
    y_hi = max(float(np.max(m + s)) for _, m, s in series)
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(i: float) -> float:
        return MARGIN_L + (i / max(n_iter - 1, 1)) * plot_w

    def sy(v: float) -> float:
        return MARGIN_T + (1.0 - (v - y_lo) / (y_hi - y_lo)) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
    ]
    # axes
    x0, y0 = MARGIN_L, MARGIN_T + plot_h
    out.append(
        f'<line x1="{x0}" y1="{MARGIN_T}" x2="{x0}" y2="{y0}" stroke="black"/>'
    )
    out.append(
        f'<line x1="{x0}" y1="{y0}" x2="{MARGIN_L + plot_w}" y2="{y0}" stroke="black"/>'
    )
    for v in _ticks(y_lo, y_hi):
        yy = sy(v)
        out.append(f'<line x1="{x0 - 4}" y1="{yy:.2f}" x2="{x0}" y2="{yy:.2f}" stroke="black"/>')
        out.append(
            f'<text x="{x0 - 8}" y="{yy + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{v:.2f}</text>'
        )
    for i in _ticks(0, n_iter - 1):
        xx = sx(i)
        out.append(f'<line x1="{xx:.2f}" y1="{y0}" x2="{xx:.2f}" y2="{y0 + 4}" stroke="black"/>')
        out.append(
            f'<text x="{xx:.2f}" y="{y0 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{int(round(i))}</text>'
        )
    out.append(
        f'<text x="{MARGIN_L + plot_w / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">iteration</text>'
    )
    out.append(
        f'<text x="18" y="{MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {MARGIN_T + plot_h / 2:.1f})">{y_label}</text>'
    )

    for k, (name, mean, std) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        xs = [sx(i) for i in range(len(mean))]
        upper = [f"{x:.2f},{sy(m + s):.2f}" for x, m, s in zip(xs, mean, std)]
        lower = [f"{x:.2f},{sy(m - s):.2f}" for x, m, s in zip(xs[::-1], mean[::-1], std[::-1])]
        out.append(
            f'<polygon points="{" ".join(upper + lower)}" fill="{color}" fill-opacity="0.15" '
            f'stroke="none"/>'
        )
        pts = " ".join(f"{x:.2f},{sy(m):.2f}" for x, m in zip(xs, mean))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN_T + 16 + 18 * k
        lx = MARGIN_L + plot_w + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{lx + 24}" y="{ly}" font-family="sans-serif" font-size="12">{name}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
