"""Deterministic SVG line plots for regret summaries.

Writes self-contained SVG with no external toolkit so that plot output
is byte-stable across runs and platforms: fixed canvas geometry, a fixed
palette assigned to series sorted by label, and fixed-precision
coordinate formatting.
"""

import numpy as np

__all__ = ["render_line_plot", "PALETTE"]

# Okabe-Ito colorblind-safe palette, assigned to labels in sorted order.
PALETTE = (
    "#0072b2",
    "#d55e00",
    "#009e73",
    "#cc79a7",
    "#e69f00",
    "#56b4e9",
    "#f0e442",
    "#000000",
)

_WIDTH, _HEIGHT = 820.0, 520.0
_LEFT, _RIGHT, _TOP, _BOTTOM = 72.0, 180.0, 46.0, 58.0


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_line_plot(series, title: str, xlabel: str, ylabel: str) -> str:
    """Render mean curves with +-1 std bands as an SVG document string.

    Parameters
    ----------
    series : list of (label, x, mean, std) tuples
        Arrays must share a common length per series; std may be None.
    title, xlabel, ylabel : str
        Plot annotations.
    """
    if not series:
        raise ValueError("no series to plot")
    ordered = sorted(series, key=lambda s: s[0])

    xs = np.concatenate([np.asarray(s[1], dtype=float) for s in ordered])
    lows, highs = [], []
    for _, x, mean, std in ordered:
        mean = np.asarray(mean, dtype=float)
        band = np.zeros_like(mean) if std is None else np.asarray(std, dtype=float)
        lows.append(mean - band)
        highs.append(mean + band)
    ylo = float(np.min(np.concatenate(lows)))
    yhi = float(np.max(np.concatenate(highs)))
    xlo, xhi = float(np.min(xs)), float(np.max(xs))
    if xhi <= xlo:
        xhi = xlo + 1.0
    pad = 0.05 * (yhi - ylo) if yhi > ylo else 1.0
    ylo, yhi = ylo - pad, yhi + pad

    plot_w = _WIDTH - _LEFT - _RIGHT
    plot_h = _HEIGHT - _TOP - _BOTTOM

    def sx(v: float) -> float:
        return _LEFT + (v - xlo) / (xhi - xlo) * plot_w

    def sy(v: float) -> float:
        return _TOP + (yhi - v) / (yhi - ylo) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_WIDTH)}" '
        f'height="{_fmt(_HEIGHT)}" viewBox="0 0 {_fmt(_WIDTH)} {_fmt(_HEIGHT)}">',
        f'<rect x="0" y="0" width="{_fmt(_WIDTH)}" height="{_fmt(_HEIGHT)}" fill="#ffffff"/>',
        f'<text x="{_fmt(_WIDTH / 2)}" y="26" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{_escape(title)}</text>',
    ]

    # Axes and ticks ======================================================
    axis = f'stroke="#333333" stroke-width="1"'
    out.append(
        f'<line x1="{_fmt(_LEFT)}" y1="{_fmt(_TOP + plot_h)}" '
        f'x2="{_fmt(_LEFT + plot_w)}" y2="{_fmt(_TOP + plot_h)}" {axis}/>'
    )
    out.append(
        f'<line x1="{_fmt(_LEFT)}" y1="{_fmt(_TOP)}" '
        f'x2="{_fmt(_LEFT)}" y2="{_fmt(_TOP + plot_h)}" {axis}/>'
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = xlo + frac * (xhi - xlo)
        yv = ylo + frac * (yhi - ylo)
        px, py = sx(xv), sy(yv)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(_TOP + plot_h)}" '
            f'x2="{_fmt(px)}" y2="{_fmt(_TOP + plot_h + 5)}" {axis}/>'
        )
        out.append(
            f'<text x="{_fmt(px)}" y="{_fmt(_TOP + plot_h + 20)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_tick_label(xv)}</text>'
        )
        out.append(
            f'<line x1="{_fmt(_LEFT - 5)}" y1="{_fmt(py)}" '
            f'x2="{_fmt(_LEFT)}" y2="{_fmt(py)}" {axis}/>'
        )
        out.append(
            f'<text x="{_fmt(_LEFT - 9)}" y="{_fmt(py + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_tick_label(yv)}</text>'
        )
    out.append(
        f'<text x="{_fmt(_LEFT + plot_w / 2)}" y="{_fmt(_HEIGHT - 14)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{_escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="20" y="{_fmt(_TOP + plot_h / 2)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 20 {_fmt(_TOP + plot_h / 2)})">{_escape(ylabel)}</text>'
    )

    # Series bands, curves, legend ========================================
    for idx, (label, x, mean, std) in enumerate(ordered):
        color = PALETTE[idx % len(PALETTE)]
        x = np.asarray(x, dtype=float)
        mean = np.asarray(mean, dtype=float)
        if std is not None:
            std = np.asarray(std, dtype=float)
            upper = [(sx(a), sy(b)) for a, b in zip(x, mean + std)]
            lower = [(sx(a), sy(b)) for a, b in zip(x[::-1], (mean - std)[::-1])]
            pts = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in upper + lower)
            out.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.15"/>')
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, mean))
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>'
        )
        ly = _TOP + 12 + 22 * idx
        lx = _LEFT + plot_w + 16
        out.append(
            f'<line x1="{_fmt(lx)}" y1="{_fmt(ly)}" x2="{_fmt(lx + 26)}" y2="{_fmt(ly)}" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
        out.append(
            f'<text x="{_fmt(lx + 32)}" y="{_fmt(ly + 4)}" font-family="sans-serif" '
            f'font-size="12">{_escape(label)}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"
