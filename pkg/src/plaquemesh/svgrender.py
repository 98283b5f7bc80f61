"""Deterministic SVG rendering of unfolded wall-thickness maps.

Each triangle is filled from a fixed perceptual color ramp. The scalar field
is linear over a triangle, so its iso-lines are parallel: a linear gradient
along the in-triangle gradient direction with ramp-sampled stops reproduces
the barycentric interpolation; constant triangles get a flat fill. Output
bytes depend only on the input (no timestamps, fixed float formatting).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ValidationError
from .unfold import UnfoldedPatch

# perceptually uniform ramp (17 evenly spaced anchors), linear between anchors
_RAMP = np.array(
    [
        (0.267004, 0.004874, 0.329415),
        (0.282327, 0.094955, 0.417331),
        (0.278826, 0.175490, 0.483397),
        (0.258965, 0.251537, 0.524736),
        (0.229739, 0.322361, 0.545706),
        (0.199430, 0.387607, 0.554642),
        (0.172719, 0.448791, 0.557885),
        (0.149039, 0.508051, 0.557250),
        (0.127568, 0.566949, 0.550556),
        (0.120638, 0.625828, 0.533488),
        (0.157851, 0.683765, 0.501686),
        (0.246070, 0.738910, 0.452024),
        (0.369214, 0.788888, 0.382914),
        (0.515992, 0.831158, 0.294279),
        (0.678489, 0.863742, 0.189503),
        (0.845561, 0.887322, 0.099702),
        (0.993248, 0.906157, 0.143936),
    ]
)

_SCALE_PX_PER_MM = 20.0
_MARGIN_PX = 30.0
_LEGEND_WIDTH_PX = 90.0
_GRADIENT_STOPS = 9


def ramp_color(t: float) -> str:
    """Hex color of the ramp at t in [0, 1] (clamped)."""
    t = min(max(float(t), 0.0), 1.0)
    pos = t * (len(_RAMP) - 1)
    i = min(int(pos), len(_RAMP) - 2)
    frac = pos - i
    rgb = (1.0 - frac) * _RAMP[i] + frac * _RAMP[i + 1]
    r, g, b = (int(round(255.0 * c)) for c in rgb)
    return f"#{r:02x}{g:02x}{b:02x}"


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def render_svg(patch: UnfoldedPatch, color_map_range) -> str:
    """SVG document (string) of the patch colored by its vwt channel."""
    lo, hi = (float(v) for v in color_map_range)
    if not hi > lo:
        raise ValidationError("color_map_range must satisfy min < max")
    if patch.triangles.size == 0:
        raise ValidationError("patch has no triangles")

    pts = patch.vertices2d
    mins = pts.min(axis=0)
    maxs = pts.max(axis=0)
    span = np.maximum(maxs - mins, 1e-9)

    def to_px(p):
        # flip y so the patch is seen with +y up
        return (
            _MARGIN_PX + (p[0] - mins[0]) * _SCALE_PX_PER_MM,
            _MARGIN_PX + (maxs[1] - p[1]) * _SCALE_PX_PER_MM,
        )

    width = 2 * _MARGIN_PX + span[0] * _SCALE_PX_PER_MM + _LEGEND_WIDTH_PX
    height = 2 * _MARGIN_PX + span[1] * _SCALE_PX_PER_MM + 40.0

    def norm(value):
        return (value - lo) / (hi - lo)

    defs = []
    body = []
    for t, tri in enumerate(patch.triangles):
        p2 = [to_px(pts[v]) for v in tri]
        vals = patch.vwt[tri]
        path = (
            f'M {_fmt(p2[0][0])} {_fmt(p2[0][1])} '
            f'L {_fmt(p2[1][0])} {_fmt(p2[1][1])} '
            f'L {_fmt(p2[2][0])} {_fmt(p2[2][1])} Z'
        )
        vspan = float(vals.max() - vals.min())
        if vspan <= 1e-12 * max(abs(hi), abs(lo), 1.0):
            fill = ramp_color(norm(float(vals.mean())))
            body.append(f'<path d="{path}" fill="{fill}" stroke="none"/>')
            continue
        # scalar field is linear: gradient direction from the 2x2 system
        q = np.array(p2)
        m = np.array([q[1] - q[0], q[2] - q[0]])
        try:
            g = np.linalg.solve(m, np.array([vals[1] - vals[0], vals[2] - vals[0]]))
        except np.linalg.LinAlgError:
            fill = ramp_color(norm(float(vals.mean())))
            body.append(f'<path d="{path}" fill="{fill}" stroke="none"/>')
            continue
        direction = g / float(np.linalg.norm(g))
        proj = q @ direction
        i_lo, i_hi = int(np.argmin(proj)), int(np.argmax(proj))
        v_lo = float(vals[i_lo])
        v_hi = float(vals[i_hi])
        x1, y1 = q[i_lo]
        x2, y2 = q[i_lo] + direction * (proj[i_hi] - proj[i_lo])
        gid = f"g{t}"
        stops = []
        for sidx in range(_GRADIENT_STOPS):
            f = sidx / (_GRADIENT_STOPS - 1)
            val = v_lo + f * (v_hi - v_lo)
            stops.append(
                f'<stop offset="{_fmt(f)}" stop-color="{ramp_color(norm(val))}"/>'
            )
        defs.append(
            f'<linearGradient id="{gid}" gradientUnits="userSpaceOnUse" '
            f'x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}">'
            + "".join(stops)
            + "</linearGradient>"
        )
        body.append(f'<path d="{path}" fill="url(#{gid})" stroke="none"/>')

    legend = _legend(width, height, lo, hi)
    scalebar = _scale_bar(span[0], height)

    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">\n'
        f"<defs>{''.join(defs)}</defs>\n"
        f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="white"/>\n'
        + "\n".join(body)
        + "\n"
        + legend
        + scalebar
        + "</svg>\n"
    )


def _legend(width: float, height: float, lo: float, hi: float) -> str:
    bar_x = width - _LEGEND_WIDTH_PX + 10.0
    bar_top = _MARGIN_PX
    bar_h = max(height - 2 * _MARGIN_PX - 40.0, 40.0)
    bar_w = 16.0
    n = 32
    parts = []
    for i in range(n):
        t0 = 1.0 - i / n
        y = bar_top + bar_h * i / n
        parts.append(
            f'<rect x="{_fmt(bar_x)}" y="{_fmt(y)}" width="{_fmt(bar_w)}" '
            f'height="{_fmt(bar_h / n + 0.5)}" fill="{ramp_color(t0 - 0.5 / n)}"/>'
        )
    labels = [
        (bar_top, hi),
        (bar_top + bar_h / 2, (lo + hi) / 2),
        (bar_top + bar_h, lo),
    ]
    for y, val in labels:
        parts.append(
            f'<text x="{_fmt(bar_x + bar_w + 6)}" y="{_fmt(y + 4)}" '
            f'font-family="sans-serif" font-size="12">{val:.2f}</text>'
        )
    parts.append(
        f'<text x="{_fmt(bar_x)}" y="{_fmt(bar_top + bar_h + 24)}" '
        f'font-family="sans-serif" font-size="12">VWT mm</text>'
    )
    return "".join(parts) + "\n"


def _scale_bar(span_x_mm: float, height: float) -> str:
    candidates = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
    length = candidates[0]
    for c in candidates:
        if c <= max(span_x_mm / 3.0, candidates[0]):
            length = c
    x0 = _MARGIN_PX
    y0 = height - 18.0
    x1 = x0 + length * _SCALE_PX_PER_MM
    return (
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y0)}" '
        'stroke="black" stroke-width="2"/>'
        f'<text x="{_fmt(x0)}" y="{_fmt(y0 - 6)}" font-family="sans-serif" '
        f'font-size="12">{length:g} mm</text>\n'
    )


def write_svg(patch: UnfoldedPatch, color_map_range, path) -> None:
    Path(path).write_text(render_svg(patch, color_map_range), encoding="utf-8")
