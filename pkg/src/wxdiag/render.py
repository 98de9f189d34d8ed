"""Deterministic SVG rendering of layered synoptic charts.

Hand-rolled on purpose: the same PlotSpec and fields must produce byte-equal
SVG output run after run, so every float is written with fixed precision
and every element is emitted in a fixed order (shading cells row-major,
contour levels ascending, barbs row-major).
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np
from scipy import ndimage

from .grid import GridError, GridField

PLOT_WIDTH = 720.0
PLOT_HEIGHT = 480.0
MARGIN_LEFT, MARGIN_TOP, MARGIN_RIGHT, MARGIN_BOTTOM = 70.0, 60.0, 95.0, 45.0


class RenderError(ValueError):
    pass


def gaussian_smooth(values: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian smoothing with reflect padding; sigma 0 is the identity."""
    values = np.asarray(values, dtype=np.float64)
    if not np.isfinite(values).all():
        raise RenderError("cannot smooth non-finite values")
    if sigma < 0:
        raise RenderError("sigma must be non-negative")
    if sigma == 0:
        return values.copy()
    return ndimage.gaussian_filter(values, sigma=sigma, mode="reflect")


# ---------------------------------------------------------------------------
# colormaps

_COLORMAPS: dict[str, list[tuple[float, tuple[int, int, int]]]] = {
    "blues": [(0.0, (247, 251, 255)), (0.5, (107, 174, 214)), (1.0, (8, 48, 107))],
    "greens": [(0.0, (247, 252, 245)), (0.5, (116, 196, 118)), (1.0, (0, 68, 27))],
    "coolwarm": [(0.0, (59, 76, 192)), (0.5, (221, 221, 221)), (1.0, (180, 4, 38))],
}


def colormap_rgb(name: str, t: float) -> str:
    try:
        stops = _COLORMAPS[name]
    except KeyError:
        raise RenderError(f"unknown colormap {name!r} (one of {sorted(_COLORMAPS)})")
    t = min(1.0, max(0.0, float(t)))
    for (t0, c0), (t1, c1) in zip(stops, stops[1:]):
        if t <= t1:
            f = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            rgb = tuple(round(a + f * (b - a)) for a, b in zip(c0, c1))
            return "#%02x%02x%02x" % rgb
    return "#%02x%02x%02x" % stops[-1][1]


# ---------------------------------------------------------------------------
# marching squares (data-space coordinates)

def marching_squares(x_axis: np.ndarray, y_axis: np.ndarray, values: np.ndarray,
                     level: float) -> list[list[tuple[float, float]]]:
    """Iso-lines of a 2-D array as polylines in (x, y) data coordinates.

    Linear interpolation along cell edges; saddle cells resolve by the cell
    centre mean.  Segments are chained into polylines deterministically.
    """
    values = np.asarray(values, dtype=np.float64)
    ny, nx = values.shape
    if (nx, ny) != (len(x_axis), len(y_axis)):
        raise RenderError("axis lengths do not match the value grid")
    segments: list[tuple[tuple[float, float], tuple[float, float]]] = []

    def interp(pa, va, pb, vb):
        t = 0.5 if vb == va else (level - va) / (vb - va)
        return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))

    for i in range(ny - 1):
        y0, y1 = float(y_axis[i]), float(y_axis[i + 1])
        for j in range(nx - 1):
            x0, x1 = float(x_axis[j]), float(x_axis[j + 1])
            v_bl, v_br = values[i, j], values[i, j + 1]
            v_tl, v_tr = values[i + 1, j], values[i + 1, j + 1]
            case = (int(v_bl > level) | (int(v_br > level) << 1)
                    | (int(v_tr > level) << 2) | (int(v_tl > level) << 3))
            if case in (0, 15):
                continue
            bottom = lambda: interp((x0, y0), v_bl, (x1, y0), v_br)
            right = lambda: interp((x1, y0), v_br, (x1, y1), v_tr)
            top = lambda: interp((x0, y1), v_tl, (x1, y1), v_tr)
            left = lambda: interp((x0, y0), v_bl, (x0, y1), v_tl)
            if case in (1, 14):
                segments.append((left(), bottom()))
            elif case in (2, 13):
                segments.append((bottom(), right()))
            elif case in (3, 12):
                segments.append((left(), right()))
            elif case in (4, 11):
                segments.append((top(), right()))
            elif case in (6, 9):
                segments.append((bottom(), top()))
            elif case in (7, 8):
                segments.append((left(), top()))
            elif case == 5:
                center = 0.25 * (v_bl + v_br + v_tl + v_tr)
                if center > level:
                    segments.append((left(), top()))
                    segments.append((bottom(), right()))
                else:
                    segments.append((left(), bottom()))
                    segments.append((top(), right()))
            else:   # case 10, the mirrored saddle
                center = 0.25 * (v_bl + v_br + v_tl + v_tr)
                if center > level:
                    segments.append((left(), bottom()))
                    segments.append((top(), right()))
                else:
                    segments.append((left(), top()))
                    segments.append((bottom(), right()))
    return _chain_segments(segments)


def _chain_segments(segments) -> list[list[tuple[float, float]]]:
    def key(p):
        return (round(p[0], 9), round(p[1], 9))

    by_end: dict[tuple[float, float], list[int]] = {}
    for idx, (a, b) in enumerate(segments):
        by_end.setdefault(key(a), []).append(idx)
        by_end.setdefault(key(b), []).append(idx)
    used = [False] * len(segments)
    polylines = []

    def take_next(point):
        for idx in by_end.get(key(point), ()):
            if not used[idx]:
                used[idx] = True
                a, b = segments[idx]
                return b if key(a) == key(point) else a
        return None

    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        a, b = segments[start]
        chain = [a, b]
        while True:                      # extend forward
            nxt = take_next(chain[-1])
            if nxt is None or key(nxt) == key(chain[0]):
                if nxt is not None:
                    chain.append(nxt)
                break
            chain.append(nxt)
        while True:                      # extend backward
            prev = take_next(chain[0])
            if prev is None:
                break
            chain.insert(0, prev)
        polylines.append(chain)
    return polylines


def contour_levels_from_interval(values: np.ndarray, interval: float) -> list[float]:
    if interval <= 0:
        raise RenderError("contour interval must be positive")
    lo, hi = float(np.min(values)), float(np.max(values))
    first = math.ceil(lo / interval) * interval
    levels = []
    level = first
    while level <= hi + 1e-9:
        levels.append(round(level, 9))
        level += interval
    return levels


# ---------------------------------------------------------------------------
# wind barbs

def barb_glyph(x: float, y: float, u: float, v: float, length: float,
               linewidth: float) -> str:
    """One wind barb as SVG markup; 5/10/50-unit half barbs, barbs, pennants."""
    speed = math.hypot(u, v)
    scale = length * 4.0                     # shaft length in px
    if speed < 2.5:
        return (f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.00" fill="none" '
                f'stroke="#000000" stroke-width="{linewidth:.2f}"/>')
    # shaft points upwind (toward where the flow comes from); SVG y grows down
    ux, uy = -u / speed, v / speed
    tip = (x + ux * scale, y + uy * scale)
    # feather direction: rotate the shaft unit vector by +120 degrees
    cos120, sin120 = -0.5, math.sqrt(3.0) / 2.0
    fx = ux * cos120 - uy * sin120
    fy = ux * sin120 + uy * cos120
    parts = [f'<path d="M {x:.2f} {y:.2f} L {tip[0]:.2f} {tip[1]:.2f}" '
             f'stroke="#000000" stroke-width="{linewidth:.2f}" fill="none"/>']
    total = int(round(speed / 5.0)) * 5
    pennants, rem = divmod(total, 50)
    fulls, rem = divmod(rem, 10)
    halves = rem // 5
    pos = 1.0
    step_back = 0.14
    barb_len = scale * 0.45
    for _ in range(pennants):
        p1 = (x + ux * scale * pos, y + uy * scale * pos)
        p2 = (x + ux * scale * (pos - step_back), y + uy * scale * (pos - step_back))
        p3 = (p1[0] + fx * barb_len, p1[1] + fy * barb_len)
        parts.append(f'<polygon points="{p1[0]:.2f},{p1[1]:.2f} {p3[0]:.2f},{p3[1]:.2f} '
                     f'{p2[0]:.2f},{p2[1]:.2f}" fill="#000000"/>')
        pos -= 2.0 * step_back
    for _ in range(fulls):
        p1 = (x + ux * scale * pos, y + uy * scale * pos)
        p2 = (p1[0] + fx * barb_len, p1[1] + fy * barb_len)
        parts.append(f'<path d="M {p1[0]:.2f} {p1[1]:.2f} L {p2[0]:.2f} {p2[1]:.2f}" '
                     f'stroke="#000000" stroke-width="{linewidth:.2f}" fill="none"/>')
        pos -= step_back
    for _ in range(halves):
        if pos >= 0.999:                 # lone half barb sits just below the tip
            pos -= step_back
        p1 = (x + ux * scale * pos, y + uy * scale * pos)
        p2 = (p1[0] + fx * barb_len * 0.5, p1[1] + fy * barb_len * 0.5)
        parts.append(f'<path d="M {p1[0]:.2f} {p1[1]:.2f} L {p2[0]:.2f} {p2[1]:.2f}" '
                     f'stroke="#000000" stroke-width="{linewidth:.2f}" fill="none"/>')
        pos -= step_back
    return "".join(parts)


# ---------------------------------------------------------------------------
# layer slicing helpers

def parse_field_ref(ref: str) -> tuple[str, float | None]:
    """Split 'var@level' into (var, level); bare 'var' has no level pin."""
    if "@" in ref:
        var, _, level = ref.partition("@")
        try:
            return var, float(level)
        except ValueError:
            raise RenderError(f"bad field ref {ref!r}")
    return ref, None


def slice_2d(field: GridField, ref: str) -> np.ndarray:
    """First-time 2-D slice of the field at the level pinned by the ref."""
    _, level = parse_field_ref(ref)
    if level is None:
        if len(field.levels) != 1:
            raise RenderError(f"ref {ref!r} needs an explicit level")
        idx = 0
    else:
        hits = [k for k, lv in enumerate(field.levels) if abs(lv - level) < 1e-9]
        if not hits:
            raise RenderError(f"field {field.name!r} has no level {level}")
        idx = hits[0]
    return field.values[0, idx]


def _resolve(fields: Mapping[str, GridField], ref: str) -> GridField:
    if ref in fields:
        return fields[ref]
    var, _ = parse_field_ref(ref)
    if var in fields:
        return fields[var]
    raise RenderError(f"no field supplied for ref {ref!r}")


# ---------------------------------------------------------------------------
# document assembly

def render_svg(spec, fields: Mapping[str, GridField]) -> str:
    """Render a PlotSpec against its fields as a standalone SVG document."""
    from .plotspec import BarbLayer, ContourLayer, ShadingLayer   # local: avoid cycle

    base = _resolve(fields, _first_ref(spec))
    lats, lons = base.lats, base.lons
    if lats.size < 2 or lons.size < 2:
        raise RenderError("rendering needs at least a 2x2 grid")

    x0, x1 = float(lons[0]), float(lons[-1])
    y0, y1 = float(lats[0]), float(lats[-1])
    sx = PLOT_WIDTH / (x1 - x0)
    sy = PLOT_HEIGHT / (y1 - y0)

    def px(lon: float) -> float:
        return MARGIN_LEFT + (lon - x0) * sx

    def py(lat: float) -> float:
        return MARGIN_TOP + (y1 - lat) * sy

    width = MARGIN_LEFT + PLOT_WIDTH + MARGIN_RIGHT
    height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
           f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}" '
           f'data-scale="{spec.export.scale:.0f}">',
           f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>']

    shading_for_colorbar = None
    for layer in spec.layers:
        if isinstance(layer, ShadingLayer):
            field = _resolve(fields, layer.field_ref)
            values = slice_2d(field, layer.field_ref)
            vmin = layer.vmin if layer.vmin is not None else float(values.min())
            vmax = layer.vmax if layer.vmax is not None else float(values.max())
            span = vmax - vmin
            shading_for_colorbar = (layer, vmin, vmax)
            for i in range(lats.size - 1):
                for j in range(lons.size - 1):
                    cell = 0.25 * (values[i, j] + values[i, j + 1]
                                   + values[i + 1, j] + values[i + 1, j + 1])
                    t = 0.5 if span == 0 else (cell - vmin) / span
                    color = colormap_rgb(layer.colormap, t)
                    out.append(f'<rect x="{px(lons[j]):.2f}" y="{py(lats[i + 1]):.2f}" '
                               f'width="{abs(sx * (lons[j + 1] - lons[j])):.2f}" '
                               f'height="{abs(sy * (lats[i + 1] - lats[i])):.2f}" '
                               f'fill="{color}"/>')

    if spec.gridlines.show:
        for lon in _nice_ticks(x0, x1):
            out.append(f'<line x1="{px(lon):.2f}" y1="{py(y1):.2f}" x2="{px(lon):.2f}" '
                       f'y2="{py(y0):.2f}" stroke="#666666" '
                       f'stroke-width="{spec.gridlines.linewidth:.2f}" '
                       f'opacity="{spec.gridlines.alpha:.2f}"/>')
            out.append(f'<text x="{px(lon):.2f}" y="{py(y0) + 16:.2f}" font-size="10" '
                       f'text-anchor="middle">{lon:g}</text>')
        for lat in _nice_ticks(y0, y1):
            out.append(f'<line x1="{px(x0):.2f}" y1="{py(lat):.2f}" x2="{px(x1):.2f}" '
                       f'y2="{py(lat):.2f}" stroke="#666666" '
                       f'stroke-width="{spec.gridlines.linewidth:.2f}" '
                       f'opacity="{spec.gridlines.alpha:.2f}"/>')
            out.append(f'<text x="{px(x0) - 6:.2f}" y="{py(lat) + 3:.2f}" font-size="10" '
                       f'text-anchor="end">{lat:g}</text>')

    for layer in spec.layers:
        if isinstance(layer, ContourLayer):
            field = _resolve(fields, layer.field_ref)
            values = gaussian_smooth(slice_2d(field, layer.field_ref), layer.smoothing_sigma)
            levels = (list(layer.levels) if layer.levels
                      else contour_levels_from_interval(values, layer.interval))
            for level in levels:
                for line in marching_squares(lons, lats, values, level):
                    points = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in line)
                    out.append(f'<polyline points="{points}" fill="none" '
                               f'stroke="{layer.color}" '
                               f'stroke-width="{layer.linewidth:.2f}"/>')
                    mid = line[len(line) // 2]
                    out.append(f'<text x="{px(mid[0]):.2f}" y="{py(mid[1]) - 2:.2f}" '
                               f'font-size="9" text-anchor="middle">{level:g}</text>')

    for layer in spec.layers:
        if isinstance(layer, BarbLayer):
            fu = _resolve(fields, layer.u_ref)
            fv = _resolve(fields, layer.v_ref)
            u2 = gaussian_smooth(slice_2d(fu, layer.u_ref), layer.smoothing_sigma)
            v2 = gaussian_smooth(slice_2d(fv, layer.v_ref), layer.smoothing_sigma)
            step = max(1, int(layer.step))
            for i in range(0, lats.size, step):
                for j in range(0, lons.size, step):
                    out.append(barb_glyph(px(lons[j]), py(lats[i]),
                                          float(u2[i, j]), float(v2[i, j]),
                                          layer.length, layer.linewidth))

    if spec.colorbar.present and shading_for_colorbar is not None:
        layer, vmin, vmax = shading_for_colorbar
        bar_x = MARGIN_LEFT + PLOT_WIDTH + 25.0
        steps = 24
        seg_h = PLOT_HEIGHT / steps
        for k in range(steps):
            t = (steps - 1 - k) / (steps - 1)
            out.append(f'<rect x="{bar_x:.2f}" y="{MARGIN_TOP + k * seg_h:.2f}" '
                       f'width="16.00" height="{seg_h + 0.5:.2f}" '
                       f'fill="{colormap_rgb(layer.colormap, t)}"/>')
        out.append(f'<text x="{bar_x + 8:.2f}" y="{MARGIN_TOP + PLOT_HEIGHT + 16:.2f}" '
                   f'font-size="10" text-anchor="middle">{_esc(spec.colorbar.label)}</text>')
        out.append(f'<text x="{bar_x + 24:.2f}" y="{MARGIN_TOP + 8:.2f}" '
                   f'font-size="9">{vmax:.6g}</text>')
        out.append(f'<text x="{bar_x + 24:.2f}" y="{MARGIN_TOP + PLOT_HEIGHT:.2f}" '
                   f'font-size="9">{vmin:.6g}</text>')

    out.append(f'<text x="{width / 2:.2f}" y="26" font-size="{spec.title.size:g}" '
               f'text-anchor="middle" font-weight="bold">{_esc(spec.title.text)}</text>')
    if spec.title.subtitle:
        out.append(f'<text x="{width / 2:.2f}" y="44" '
                   f'font-size="{spec.title.subtitle_size:g}" '
                   f'text-anchor="middle">{_esc(spec.title.subtitle)}</text>')
    out.append("</svg>")
    return "\n".join(out)


def _first_ref(spec) -> str:
    from .plotspec import BarbLayer
    for layer in spec.layers:
        if isinstance(layer, BarbLayer):
            return layer.u_ref
        return layer.field_ref
    raise RenderError("plot spec has no layers")


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    step = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= step * mult:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9:
        ticks.append(round(t, 9))
        t += step
    return ticks


def _esc(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))
