"""SVG rendering of probability grids as blurred Gaussian spots."""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import matplotlib
import numpy as np

from .evolution import ProbabilityGrid
from .lattice import Lattice


@dataclass(frozen=True)
class HeatmapStyle:
    spot_sigma_px: float = 4.0
    canvas_px: int = 480
    colormap: str = "inferno"

    def __post_init__(self):
        if not self.spot_sigma_px > 0:
            raise ValueError("spot_sigma_px must be > 0")
        if not (isinstance(self.canvas_px, int) and self.canvas_px > 0):
            raise ValueError("canvas_px must be a positive integer")
        matplotlib.colormaps[self.colormap]  # KeyError for unknown names


MARGIN = 24
BAR_WIDTH = 16
BAR_GAP = 20
LABEL_SPACE = 64


def _hex(cmap, t: float) -> str:
    r, g, b, _ = cmap(float(t))
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def site_canvas_positions(lattice: Lattice, style: HeatmapStyle) -> tuple[np.ndarray, int, int]:
    """Pixel centres ``(N, 2)`` of every site plus the plot width/height.

    Row 0 is drawn at the top, as in a camera image.
    """
    w_um, h_um = lattice.extent_um
    span = max(w_um, h_um)
    side = style.canvas_px - 2 * MARGIN
    scale = side / span if span > 0 else 0.0
    pos = lattice.positions
    px = MARGIN + pos[:, 0] * scale + (side - w_um * scale) / 2
    py = MARGIN + pos[:, 1] * scale + (side - h_um * scale) / 2
    return np.column_stack([px, py]), side, side


def render_heatmap(grid: ProbabilityGrid, lattice: Lattice, style: HeatmapStyle | None = None) -> str:
    """SVG 1.1 document with one blurred spot per visibly populated site.

    Spot colour and opacity scale linearly with probability; the most
    probable site sits at the top of the colour scale.
    """
    style = style or HeatmapStyle()
    p = np.asarray(grid.values, dtype=float)
    if p.shape != lattice.shape:
        raise ValueError(f"grid shape {p.shape} does not match lattice {lattice.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("grid values must be finite and non-negative")
    cmap = matplotlib.colormaps[style.colormap]
    pmax = float(p.max())
    centres, _, _ = site_canvas_positions(lattice, style)

    width = style.canvas_px + BAR_GAP + BAR_WIDTH + LABEL_SPACE
    height = style.canvas_px
    radius = 3.0 * style.spot_sigma_px
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        "<defs>",
        f'<filter id="spot" x="-100%" y="-100%" width="300%" height="300%">'
        f'<feGaussianBlur stdDeviation="{style.spot_sigma_px:g}"/></filter>',
        '<linearGradient id="scale" x1="0" y1="1" x2="0" y2="0">',
    ]
    for t in np.linspace(0.0, 1.0, 11):
        out.append(f'<stop offset="{t:.1f}" stop-color="{_hex(cmap, t)}"/>')
    out += [
        "</linearGradient>",
        "</defs>",
        f'<rect x="0" y="0" width="{style.canvas_px}" height="{height}" fill="{_hex(cmap, 0.0)}"/>',
        '<g id="spots" filter="url(#spot)">',
    ]
    if pmax > 0:
        flat = p.ravel()
        # spots below the printed opacity resolution are invisible
        for idx in np.nonzero(flat >= 1e-6 * pmax)[0]:
            t = flat[idx] / pmax
            r, c = divmod(int(idx), lattice.cols)
            x, y = centres[idx]
            out.append(
                f'<circle id="site-{r}-{c}" cx="{x:.2f}" cy="{y:.2f}" r="{radius:g}" '
                f'fill="{_hex(cmap, t)}" fill-opacity="{t:.6f}"/>'
            )
    out.append("</g>")
    bx = style.canvas_px + BAR_GAP
    out += [
        f'<rect id="colour-scale" x="{bx}" y="{MARGIN}" width="{BAR_WIDTH}" '
        f'height="{style.canvas_px - 2 * MARGIN}" fill="url(#scale)" stroke="#000000"/>',
        f'<text x="{bx + BAR_WIDTH + 4}" y="{MARGIN + 10}" font-size="11" font-family="sans-serif">'
        f"{escape(f'{pmax:.3g}')}</text>",
        f'<text x="{bx + BAR_WIDTH + 4}" y="{style.canvas_px - MARGIN}" font-size="11" '
        f'font-family="sans-serif">0</text>',
        "</svg>",
    ]
    return "\n".join(out) + "\n"
