"""Standalone SVG contour figures of a sampled or solved field."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from skimage.measure import find_contours

from .critical import CriticalClass
from .topology import INTERIOR

WIDTH = 640
MARGIN = 16


def default_levels(values, count: int = 12):
    """``count`` levels from 0 (inclusive) towards the maximum (exclusive)."""
    finite = values[np.isfinite(values)]
    vmax = float(finite.max()) if finite.size else 0.0
    if not vmax > 0:
        return [0.0]
    return list(np.linspace(0.0, vmax, count + 1)[:-1])


def _render_values(fld):
    """Field values for contouring: non-Interior cells are pushed just below zero so that the
    zero level traces the domain boundary also for solved fields (where they hold 0)."""
    v = np.array(fld.values, dtype=float)
    finite = v[np.isfinite(v)]
    floor = float(finite.min()) if finite.size else 0.0
    v = np.where(np.isfinite(v), v, min(floor, -1.0))
    if fld.mask is not None:
        outside = fld.mask != INTERIOR
        v = np.where(outside, np.minimum(v, -1e-12), v)
    return v


def render_svg(fld, points, levels=None, path=None, *, level_count: int = 12) -> str:
    """Write contour polylines, the bold zero level, maxima (dots) and saddles (crosses).

    Returns the SVG text; when ``path`` is given it is also written there.
    Output depends only on the inputs, so repeated runs are byte-identical.
    """
    vals = _render_values(fld)
    ny, nx = vals.shape
    x0, x1, y0, y1 = fld.box
    scale = (WIDTH - 2 * MARGIN) / max(x1 - x0, 1e-300)
    height = int(round((y1 - y0) * scale)) + 2 * MARGIN

    def px(z):
        return MARGIN + (z.real - x0) * scale, height - MARGIN - (z.imag - y0) * scale

    if levels is None:
        levels = default_levels(fld.values, level_count)
    raw = np.asarray(fld.values, dtype=float)
    raw = raw[np.isfinite(raw)]
    const = raw.size == 0 or not np.ptp(raw) > 0

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" height="{height - 2 * MARGIN}" fill="white" stroke="black" stroke-width="1"/>',
    ]
    if not const:
        for lev in levels:
            bold = lev == 0.0
            stroke = 'stroke="black" stroke-width="2.2"' if bold else 'stroke="#3566a8" stroke-width="0.8"'
            for c in find_contours(vals, lev):
                zs = (x0 + c[:, 1] * fld.h) + 1j * (y0 + c[:, 0] * fld.h)
                coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in (px(z) for z in zs))
                out.append(f'<polyline fill="none" {stroke} points="{coords}"/>')
    for pt in points:
        cx, cy = px(pt.location)
        if pt.kind is CriticalClass.MAXIMUM:
            out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="4" fill="#c0282d"/>')
        elif pt.kind is CriticalClass.SADDLE:
            d = 4.5
            out.append(
                f'<path d="M{cx - d:.2f},{cy - d:.2f} L{cx + d:.2f},{cy + d:.2f} M{cx - d:.2f},{cy + d:.2f} L{cx + d:.2f},{cy - d:.2f}" stroke="#1b7a3a" stroke-width="2"/>'
            )
        else:
            out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="4.5" fill="none" stroke="#8a5a00" stroke-width="1.5"/>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
