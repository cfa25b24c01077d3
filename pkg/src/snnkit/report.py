"""Minimal hand-rolled SVG charts (no plotting dependency)."""

from __future__ import annotations

from typing import List, Sequence, Tuple

W, H = 640, 420
ML, MR, MT, MB = 70, 20, 30, 60  # margins

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"]


def _svg_open() -> List[str]:
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
            f'<rect width="{W}" height="{H}" fill="white"/>']


def _axes(x_label: str, y_label: str) -> List[str]:
    return [
        f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}" stroke="black"/>',
        f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H - MB}" stroke="black"/>',
        f'<text x="{(ML + W - MR) / 2}" y="{H - 15}" text-anchor="middle">{x_label}</text>',
        f'<text x="18" y="{(MT + H - MB) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(MT + H - MB) / 2})">{y_label}</text>',
    ]


def _scale(vals: Sequence[float], lo_px: float, hi_px: float,
           vmin: float = None, vmax: float = None):
    vmin = min(vals) if vmin is None else vmin
    vmax = max(vals) if vmax is None else vmax
    if vmax <= vmin:
        vmax = vmin + 1.0
    span = vmax - vmin

    def to_px(v: float) -> float:
        return lo_px + (v - vmin) / span * (hi_px - lo_px)

    return to_px, vmin, vmax


def line_chart(points: List[Tuple[str, float, float]], x_label: str,
               y_label: str, path: str) -> None:
    """Points are (series_id, x, y); one polyline per series id."""
    parts = _svg_open() + _axes(x_label, y_label)
    xs = [p[1] for p in points] or [0.0]
    ys = [p[2] for p in points] or [0.0]
    sx, *_ = _scale(xs, ML + 10, W - MR - 10)
    sy, ymin, ymax = _scale(ys, H - MB - 10, MT + 10, vmin=0.0, vmax=max(1.0, max(ys)))
    series = {}
    for sid, x, y in points:
        series.setdefault(sid, []).append((x, y))
    for si, (sid, pts) in enumerate(series.items()):
        pts = sorted(pts)
        color = PALETTE[si % len(PALETTE)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>')
        parts.append(f'<text x="{W - MR - 5}" y="{MT + 14 * (si + 1)}" '
                     f'text-anchor="end" fill="{color}">{sid}</text>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = ymin + frac * (ymax - ymin)
        parts.append(f'<text x="{ML - 6}" y="{sy(v):.1f}" text-anchor="end" '
                     f'dominant-baseline="middle">{v:.2f}</text>')
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts))


def bar_chart(values: Sequence[float], labels: Sequence[str], x_label: str,
              y_label: str, path: str) -> None:
    parts = _svg_open() + _axes(x_label, y_label)
    n = len(values)
    vmax = max(max(values, default=0.0), 1.0)
    width = (W - ML - MR) / max(n, 1)
    for i, (v, lab) in enumerate(zip(values, labels)):
        h = (v / vmax) * (H - MT - MB - 10)
        x = ML + i * width + width * 0.15
        y = H - MB - h
        parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{width * 0.7:.1f}" '
                     f'height="{h:.1f}" fill="{PALETTE[0]}"/>')
        parts.append(f'<text x="{x + width * 0.35:.1f}" y="{H - MB + 16}" '
                     f'text-anchor="middle">{lab}</text>')
    parts.append(f'<text x="{ML - 6}" y="{H - MB}" text-anchor="end">0</text>')
    parts.append(f'<text x="{ML - 6}" y="{MT + 10}" text-anchor="end">{vmax:.2f}</text>')
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts))


def heatmap(matrix, x_label: str, y_label: str, path: str) -> None:
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    parts = _svg_open() + _axes(x_label, y_label)
    vmax = max((matrix[r][c] for r in range(rows) for c in range(cols)),
               default=0.0) or 1.0
    cw = (W - ML - MR) / max(cols, 1)
    ch = (H - MT - MB) / max(rows, 1)
    for r in range(rows):
        for c in range(cols):
            frac = matrix[r][c] / vmax
            # white -> dark blue
            shade = int(255 * (1.0 - frac))
            color = f"rgb({shade},{shade},255)"
            x = ML + c * cw
            y = MT + r * ch
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{cw:.1f}" '
                         f'height="{ch:.1f}" fill="{color}" stroke="#ddd"/>')
    for c in range(cols):
        parts.append(f'<text x="{ML + (c + 0.5) * cw:.1f}" y="{H - MB + 16}" '
                     f'text-anchor="middle">{c}</text>')
    for r in range(rows):
        parts.append(f'<text x="{ML - 6}" y="{MT + (r + 0.5) * ch:.1f}" '
                     f'text-anchor="end" dominant-baseline="middle">{r}</text>')
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts))
