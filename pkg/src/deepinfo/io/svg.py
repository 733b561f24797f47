"""SVG 1.1 heatmaps of feature maps."""
from xml.sax.saxutils import escape

import numpy as np

from ..errors import InvalidConfigError, InvalidGeometryError
from .imat import atomic_write_bytes

# (position, (r, g, b)) stops; colours are interpolated linearly between them
COLORMAPS = {
    "sequential": ((0.0, (255, 255, 255)), (0.5, (0, 188, 212)), (1.0, (13, 42, 94))),
    "diverging": ((0.0, (33, 102, 172)), (0.5, (255, 255, 255)), (1.0, (178, 24, 43))),
}
CELL = 10
LEGEND_HEIGHT = 48


def colormap_rgb(positions, colormap):
    """RGB integer triples for positions in [0, 1]."""
    if colormap not in COLORMAPS:
        raise InvalidConfigError(f"colormap must be one of {sorted(COLORMAPS)}")
    stops = COLORMAPS[colormap]
    xs = [s[0] for s in stops]
    t = np.clip(np.asarray(positions, dtype=np.float64), 0.0, 1.0)
    channels = [np.interp(t, xs, [s[1][c] for s in stops]) for c in range(3)]
    return np.rint(np.stack(channels, axis=-1)).astype(int)


def _hex(rgb):
    return "#{:02x}{:02x}{:02x}".format(*(int(c) for c in rgb))


def _fmt(x):
    return "none" if x is None else f"{x:.4g}"


def _positions(values, colormap):
    if colormap == "sequential":
        top = max(float(values.max()), 0.0)
        return np.clip(values, 0.0, None) / top if top > 0 else np.zeros_like(values)
    extent = float(np.abs(values).max())
    return 0.5 + 0.5 * values / extent if extent > 0 else np.full_like(values, 0.5)


def svg_heatmap(feature_map, colormap="sequential", thresholded=True, title=None):
    """SVG text for a map: one ``rect`` per feature cell plus a legend.

    The sequential colormap runs from 0 (white) to the map maximum and shows
    negative values as 0; the diverging one is symmetric about 0. With
    ``thresholded``, values at or below the map's threshold are drawn as 0.
    """
    rows_cols = tuple(feature_map.grid_shape)
    values = np.asarray(feature_map.values, dtype=np.float64).ravel()
    if len(rows_cols) != 2 or min(rows_cols) < 1 or rows_cols[0] * rows_cols[1] != values.size:
        raise InvalidGeometryError(f"grid {rows_cols} cannot hold {values.size} features",
                                   grid_shape=list(rows_cols), n_features=int(values.size))
    if thresholded:
        values = np.asarray(feature_map.thresholded(), dtype=np.float64).ravel()
    rows, cols = rows_cols
    colors = colormap_rgb(_positions(values, colormap), colormap)
    background = _hex(colormap_rgb([_positions(np.zeros(1), colormap)[0]], colormap)[0])
    width, height = cols * CELL, rows * CELL + LEGEND_HEIGHT
    label = title or feature_map.label()

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{escape(label)}</title>",
        "<defs>",
        '<linearGradient id="scale" x1="0" y1="0" x2="1" y2="0">',
    ]
    for pos, rgb in COLORMAPS[colormap]:
        out.append(f'<stop offset="{pos:g}" stop-color="{_hex(rgb)}"/>')
    out += ["</linearGradient>", "</defs>",
            f'<rect class="background" x="0" y="0" width="{width}" height="{rows * CELL}" fill="{background}"/>',
            '<g class="cells" shape-rendering="crispEdges">']
    for i in range(rows):
        for j in range(cols):
            out.append(f'<rect class="cell" x="{j * CELL}" y="{i * CELL}" width="{CELL}" height="{CELL}" '
                       f'fill="{_hex(colors[i * cols + j])}"/>')
    raw = np.asarray(feature_map.values, dtype=np.float64)
    legend_y = rows * CELL + 4
    out += [
        "</g>",
        '<g class="legend" font-family="sans-serif" font-size="8">',
        f'<rect class="colorbar" x="0" y="{legend_y}" width="{width}" height="8" fill="url(#scale)"/>',
        f'<text x="0" y="{legend_y + 18}">min {_fmt(float(raw.min()))} bits</text>',
        f'<text x="{width}" y="{legend_y + 18}" text-anchor="end">max {_fmt(float(raw.max()))} bits</text>',
        f'<text x="0" y="{legend_y + 30}">threshold {_fmt(feature_map.threshold)}</text>',
        f'<text x="0" y="{legend_y + 42}">{escape(label)} ({colormap})</text>',
        "</g>",
        "</svg>",
    ]
    return "\n".join(out) + "\n"


def write_svg_heatmap(feature_map, path, colormap="sequential", thresholded=True, title=None):
    """Write :func:`svg_heatmap` output atomically; returns the SVG text."""
    text = svg_heatmap(feature_map, colormap, thresholded, title)
    atomic_write_bytes(path, text.encode("utf-8"))
    return text
