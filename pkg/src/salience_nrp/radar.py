"""Kiviat chart of per-stakeholder coverage, written as plain SVG.

One axis per demanding stakeholder, clockwise from the top by decreasing
salience. Two shaded bands show (normalised) salience and the number of
requirements each stakeholder voted for; one closed line per front shows the
coverage on a 0-100 % scale.
"""

from __future__ import annotations

import math
from collections import Counter
from html import escape
from typing import Mapping, Sequence

from salience_nrp._io import atomic_write_text
from salience_nrp.coverage import CoverageVector
from salience_nrp.salience import SalienceTable

SIZE = 900
RADIUS = 320
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#bcbd22", "#e377c2")
SALIENCE_FILL = "#f4a6c0"
REQUEST_FILL = "#9e9e9e"


def axis_order(ids, salience: SalienceTable) -> list[str]:
    return sorted(ids, key=lambda sid: (-salience.salience(sid), sid))


def _point(i: int, n: int, frac: float) -> tuple[float, float]:
    theta = -math.pi / 2 + 2 * math.pi * i / n
    c = SIZE / 2
    return c + RADIUS * frac * math.cos(theta), c + RADIUS * frac * math.sin(theta)


def _points_attr(fracs: Sequence[float]) -> str:
    n = len(fracs)
    return " ".join("{:.2f},{:.2f}".format(*_point(i, n, f)) for i, f in enumerate(fracs))


def render_radar(
    coverages: Sequence[CoverageVector],
    salience: SalienceTable,
    votes: Mapping[tuple[str, str], float],
) -> str:
    if not coverages:
        raise ValueError("no coverage vectors to draw")
    ids = axis_order(coverages[0].values, salience)
    n = len(ids)
    requests = Counter(sid for sid, _ in votes)
    max_sal = max((salience.salience(s) for s in ids), default=0.0) or 1.0
    max_req = max((requests[s] for s in ids), default=0) or 1
    c = SIZE / 2

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE + 40 + 18 * len(coverages)}" '
        f'viewBox="0 0 {SIZE} {SIZE + 40 + 18 * len(coverages)}" font-family="sans-serif">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for ring in (0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<circle cx="{c:.2f}" cy="{c:.2f}" r="{RADIUS * ring:.2f}" fill="none" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(f'<text x="{c + 3:.2f}" y="{c - RADIUS * ring - 2:.2f}" font-size="9" fill="#888888">{int(ring * 100)}</text>')
    if n > 1:
        parts.append(
            f'<polygon class="band-salience" points="{_points_attr([salience.salience(s) / max_sal for s in ids])}" '
            f'fill="{SALIENCE_FILL}" fill-opacity="0.35" stroke="none"/>'
        )
        parts.append(
            f'<polygon class="band-requests" points="{_points_attr([requests[s] / max_req for s in ids])}" '
            f'fill="{REQUEST_FILL}" fill-opacity="0.35" stroke="none"/>'
        )
    for i, sid in enumerate(ids):
        x, y = _point(i, n, 1.0)
        lx, ly = _point(i, n, 1.06)
        parts.append(
            f'<line class="axis" data-stakeholder="{escape(sid)}" x1="{c:.2f}" y1="{c:.2f}" '
            f'x2="{x:.2f}" y2="{y:.2f}" stroke="#cccccc" stroke-width="0.8"/>'
        )
        anchor = "start" if lx > c + 1 else ("end" if lx < c - 1 else "middle")
        parts.append(f'<text x="{lx:.2f}" y="{ly:.2f}" font-size="8" text-anchor="{anchor}">{escape(sid)}</text>')
    for j, cov in enumerate(coverages):
        color = PALETTE[j % len(PALETTE)]
        fracs = [cov.values.get(sid, 0.0) for sid in ids]
        shape = "polygon" if n > 2 else "polyline"
        parts.append(
            f'<{shape} class="front" data-front="{escape(cov.front_id)}" points="{_points_attr(fracs)}" '
            f'fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        for i, f in enumerate(fracs):
            x, y = _point(i, n, f)
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.8" fill="{color}"/>')
        ly = SIZE + 20 + 18 * j
        parts.append(f'<rect x="20" y="{ly - 10}" width="14" height="10" fill="{color}"/>')
        parts.append(f'<text x="40" y="{ly}" font-size="12">{escape(cov.front_id)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_radar(
    coverages: Sequence[CoverageVector],
    salience: SalienceTable,
    votes: Mapping[tuple[str, str], float],
    out,
) -> None:
    atomic_write_text(out, render_radar(coverages, salience, votes))
