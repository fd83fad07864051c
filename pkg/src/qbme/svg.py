"""Dependency-free SVG line and scatter plots for figure data."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

W, H, PAD = 640, 420, 56
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _scale(lo, hi, a, b):
    span = (hi - lo) or 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _frame(xlabel, ylabel, xr, yr, title):
    x0, x1 = xr
    y0, y1 = yr
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">',
             f'<rect x="{PAD}" y="{PAD // 2}" width="{W - 1.5 * PAD}" height="{H - 1.5 * PAD}" fill="none" stroke="black"/>',
             f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle">{escape(xlabel)}</text>',
             f'<text x="14" y="{H / 2}" transform="rotate(-90 14 {H / 2})" text-anchor="middle">{escape(ylabel)}</text>',
             f'<text x="{PAD}" y="{H - PAD + 18}">{x0:.3g}</text>',
             f'<text x="{W - PAD / 2}" y="{H - PAD + 18}" text-anchor="end">{x1:.3g}</text>',
             f'<text x="{PAD - 4}" y="{H - PAD}" text-anchor="end">{y0:.3g}</text>',
             f'<text x="{PAD - 4}" y="{PAD // 2 + 10}" text-anchor="end">{y1:.3g}</text>']
    if title:
        parts.append(f'<text x="{W / 2}" y="16" text-anchor="middle">{escape(title)}</text>')
    return parts


def line_plot(series: dict, path, xlabel="", ylabel="", title="") -> Path:
    """series maps label -> (xs, ys, errs); errs may be None."""
    xs = [x for s in series.values() for x in s[0]]
    ys = [y for s in series.values() for y in s[1]]
    xr, yr = (min(xs), max(xs)), (min(min(ys), 0.0), max(max(ys), 1.0))
    sx = _scale(*xr, PAD, W - PAD / 2)
    sy = _scale(*yr, H - PAD, PAD / 2)
    parts = _frame(xlabel, ylabel, xr, yr, title)
    for k, (label, (x, y, err)) in enumerate(series.items()):
        c = COLORS[k % len(COLORS)]
        pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(x, y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        for i, (a, b) in enumerate(zip(x, y)):
            parts.append(f'<circle cx="{sx(a):.1f}" cy="{sy(b):.1f}" r="3" fill="{c}"/>')
            if err is not None:
                parts.append(f'<line x1="{sx(a):.1f}" x2="{sx(a):.1f}" y1="{sy(b - err[i]):.1f}" '
                             f'y2="{sy(b + err[i]):.1f}" stroke="{c}"/>')
        parts.append(f'<text x="{W - PAD}" y="{PAD + 16 * k}" fill="{c}" text-anchor="end">{escape(str(label))}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
    return Path(path)


def scatter_plot(xs, ys, path, xlabel="", ylabel="", title="") -> Path:
    sx = _scale(0.0, 1.0, PAD, W - PAD / 2)
    sy = _scale(0.0, 1.0, H - PAD, PAD / 2)
    parts = _frame(xlabel, ylabel, (0.0, 1.0), (0.0, 1.0), title)
    parts.append(f'<line x1="{sx(0)}" y1="{sy(0)}" x2="{sx(1)}" y2="{sy(1)}" stroke="#999" stroke-dasharray="4"/>')
    for a, b in zip(xs, ys):
        parts.append(f'<circle cx="{sx(a):.1f}" cy="{sy(b):.1f}" r="1.5" fill="{COLORS[0]}" fill-opacity="0.5"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
    return Path(path)
