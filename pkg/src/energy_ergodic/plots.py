"""Flat SVG renderings of a mission: trajectories and ergodicity against SoC."""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f4fd8", "#d62728", "#006400", "#c000c0")


def _color(agent: int) -> str:
    return PALETTE[agent % len(PALETTE)]


def _svg(width, height, body) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n<rect width="100%" height="100%" fill="white"/>\n'
            + "\n".join(body) + "\n</svg>\n")


def _polyline(points, color, width=1.5, dash=None) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>'


def trajectories_svg(rows, distribution, stations, size: int = 480) -> str:
    """Top view of the workspace with Gaussians, pads and every flown path."""
    lo, hi = distribution.workspace
    lo = max(lo, 0.0)
    pad = 30
    scale = (size - 2 * pad) / (hi - lo)

    def px(x, y):
        return pad + (x - lo) * scale, size - pad - (y - lo) * scale

    body = [f'<rect x="{pad}" y="{pad}" width="{size - 2 * pad}" height="{size - 2 * pad}" '
            f'fill="none" stroke="black"/>']
    for comp in distribution.components:
        vals, vecs = np.linalg.eigh(comp.covariance)
        cx, cy = px(*comp.center)
        angle = -math.degrees(math.atan2(vecs[1, -1], vecs[0, -1]))
        body.append(f'<ellipse cx="{cx:.2f}" cy="{cy:.2f}" rx="{2 * math.sqrt(vals[-1]) * scale:.2f}" '
                    f'ry="{2 * math.sqrt(vals[0]) * scale:.2f}" transform="rotate({angle:.2f} {cx:.2f} {cy:.2f})" '
                    f'fill="#888" fill-opacity="0.25" stroke="#555"/>')
    for s in stations:
        sx, sy = px(*s)
        body.append(f'<rect x="{sx - 6:.2f}" y="{sy - 6:.2f}" width="12" height="12" fill="none" stroke="black"/>')
    paths: dict = {}
    for r in rows:
        if r.active:
            paths.setdefault((r.horizon, r.agent), []).append(px(r.x, r.y))
    for (h, a), pts in sorted(paths.items()):
        body.append(_polyline(pts, _color(a), 1.2))
    for a in sorted({r.agent for r in rows}):
        body.append(f'<text x="{pad + 70 * a}" y="18" fill="{_color(a)}" font-size="12" '
                    f'font-family="sans-serif">agent {a}</text>')
    return _svg(size, size, body)


def ergodicity_svg(rows, gamma: float, width: int = 720, height: int = 480) -> str:
    """Instantaneous ergodicity (log scale, top) and per-agent SoC (bottom) against time."""
    if not rows:
        return _svg(width, height, [])
    pad = 50
    panel = (height - 3 * pad) / 2
    t0 = min(r.t for r in rows)
    t1 = max(r.t for r in rows)
    span = max(t1 - t0, 1e-9)
    first = min(r.agent for r in rows)
    ergo = [(r.horizon, r.t, r.ergodicity) for r in rows if r.agent == first]
    logs = [math.log10(max(e, 1e-300)) for _, _, e in ergo] + [math.log10(gamma)]
    ymin, ymax = math.floor(min(logs)), math.ceil(max(logs))
    ymax = ymax if ymax > ymin else ymin + 1

    def tx(t):
        return pad + (t - t0) / span * (width - 2 * pad)

    def top(v):
        return pad + (ymax - math.log10(max(v, 1e-300))) / (ymax - ymin) * panel

    def bottom(s):
        return 2 * pad + panel + (1.0 - s) * panel

    body = [f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{panel:.2f}" fill="none" stroke="black"/>',
            f'<rect x="{pad}" y="{2 * pad + panel:.2f}" width="{width - 2 * pad}" height="{panel:.2f}" '
            f'fill="none" stroke="black"/>',
            f'<text x="{pad}" y="{pad - 8}" font-size="12" font-family="sans-serif">'
            f'{escape("log10 ergodicity")} ({ymin}..{ymax}); dashed: gamma</text>',
            f'<text x="{pad}" y="{2 * pad + panel - 8:.2f}" font-size="12" font-family="sans-serif">SoC</text>',
            _polyline([(tx(t0), top(gamma)), (tx(t1), top(gamma))], "black", 1.0, "6,4")]
    by_h: dict = {}
    for h, t, e in ergo:
        # lines break between horizons
        by_h.setdefault(h, []).append((tx(t), top(e)))
    for pts in by_h.values():
        body.append(_polyline(pts, "black", 1.2))
    socs: dict = {}
    for r in rows:
        socs.setdefault(r.agent, []).append((tx(r.t), bottom(r.soc)))
    for a, pts in sorted(socs.items()):
        body.append(_polyline(pts, _color(a), 1.2))
    return _svg(width, height, body)


def write_svgs(out_dir, rows, distribution, stations, gamma) -> list[Path]:
    out_dir = Path(out_dir)
    paths = [out_dir / "trajectories.svg", out_dir / "ergodicity.svg"]
    paths[0].write_text(trajectories_svg(rows, distribution, stations), encoding="utf-8", newline="\n")
    paths[1].write_text(ergodicity_svg(rows, gamma), encoding="utf-8", newline="\n")
    return paths
