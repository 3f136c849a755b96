"""SVG snapshots of simulation runs and experiment tables.

Plots are written as plain SVG via the stdlib XML tree, so they are
well-formed by construction and need no plotting stack. Run plots show the
grid frame, the remaining particle clouds, the true target positions, and
the UAV trajectory with recently visited cells drawn in dark red fading to
light for older ones.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .engine import RunRecord
from .environment import GridWorld

_OLD_RGB = (249, 214, 189)
_NEW_RGB = (139, 0, 0)
_CLOUD_COLORS = ("#4a6fa5", "#5a9367", "#9467bd", "#b5651d")
_MAX_CLOUD_DOTS = 1500


def _recency_color(f: float) -> str:
    r = int(_OLD_RGB[0] + (_NEW_RGB[0] - _OLD_RGB[0]) * f)
    g = int(_OLD_RGB[1] + (_NEW_RGB[1] - _OLD_RGB[1]) * f)
    b = int(_OLD_RGB[2] + (_NEW_RGB[2] - _OLD_RGB[2]) * f)
    return f"#{r:02x}{g:02x}{b:02x}"


def emit_run_svg(record: RunRecord, world: GridWorld, path,
                 size_px: int = 800) -> None:
    """Write one SVG for a finished run (requires the run to carry a trace)."""
    pts = []
    if record.trace_cells is not None and len(record.trace_cells):
        cs = world.cell_size
        ox, oy = world.origin
        pts.append(np.stack([ox + (record.trace_cells[:, 0] + 0.5) * cs,
                             oy + (record.trace_cells[:, 1] + 0.5) * cs], axis=1))
    if record.final_particles:
        pts.extend(p for p in record.final_particles if len(p))
    if record.final_truths is not None and len(record.final_truths):
        pts.append(record.final_truths)

    if pts:
        allp = np.concatenate(pts, axis=0)
        xmin, ymin = allp.min(axis=0) - 2.0 * world.cell_size
        xmax, ymax = allp.max(axis=0) + 2.0 * world.cell_size
    else:
        xmin, ymin, xmax, ymax = world.extent
    span = max(xmax - xmin, ymax - ymin, world.cell_size)
    scale = size_px / span

    def sx(x):
        return (x - xmin) * scale

    def sy(y):
        return (ymax - y) * scale

    width = (xmax - xmin) * scale
    height = (ymax - ymin) * scale
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=f"{width:.0f}", height=f"{height + 70:.0f}",
                     viewBox=f"0 0 {width:.0f} {height + 70:.0f}")
    ET.SubElement(svg, "rect", x="0", y="0", width=f"{width:.0f}",
                  height=f"{height:.0f}", fill="#f7fbff", stroke="#333",
                  **{"stroke-width": "1"})

    # Light grid lines, thinned so huge grids stay light-weight.
    step = max(1, int(span / world.cell_size / 40))
    gx0 = int(np.floor((xmin - world.origin[0]) / world.cell_size))
    gx1 = int(np.ceil((xmax - world.origin[0]) / world.cell_size))
    for gi in range(gx0 - gx0 % step, gx1 + 1, step):
        x = world.origin[0] + gi * world.cell_size
        if xmin <= x <= xmax:
            ET.SubElement(svg, "line", x1=f"{sx(x):.1f}", y1="0",
                          x2=f"{sx(x):.1f}", y2=f"{height:.1f}",
                          stroke="#dde5ee", **{"stroke-width": "0.5"})
    gy0 = int(np.floor((ymin - world.origin[1]) / world.cell_size))
    gy1 = int(np.ceil((ymax - world.origin[1]) / world.cell_size))
    for gj in range(gy0 - gy0 % step, gy1 + 1, step):
        y = world.origin[1] + gj * world.cell_size
        if ymin <= y <= ymax:
            ET.SubElement(svg, "line", x1="0", y1=f"{sy(y):.1f}",
                          x2=f"{width:.1f}", y2=f"{sy(y):.1f}",
                          stroke="#dde5ee", **{"stroke-width": "0.5"})

    if record.final_particles:
        for k, cloud in enumerate(record.final_particles):
            if not len(cloud):
                continue
            stride = max(1, len(cloud) // _MAX_CLOUD_DOTS)
            color = _CLOUD_COLORS[k % len(_CLOUD_COLORS)]
            for x, y in cloud[::stride]:
                ET.SubElement(svg, "circle", cx=f"{sx(x):.1f}", cy=f"{sy(y):.1f}",
                              r="1.2", fill=color, opacity="0.45")

    if record.trace_cells is not None and len(record.trace_cells):
        cs = world.cell_size
        ox, oy = world.origin
        xs = sx(ox + (record.trace_cells[:, 0] + 0.5) * cs)
        ys = sy(oy + (record.trace_cells[:, 1] + 0.5) * cs)
        n = len(xs)
        for a in range(n - 1):
            color = _recency_color(a / max(n - 2, 1))
            ET.SubElement(svg, "line", x1=f"{xs[a]:.1f}", y1=f"{ys[a]:.1f}",
                          x2=f"{xs[a + 1]:.1f}", y2=f"{ys[a + 1]:.1f}",
                          stroke=color, **{"stroke-width": "1.6"})
        ET.SubElement(svg, "rect", x=f"{xs[-1] - 4:.1f}", y=f"{ys[-1] - 4:.1f}",
                      width="8", height="8", fill="#d62728", stroke="white")

    if record.final_truths is not None:
        for k, (x, y) in enumerate(record.final_truths):
            found = record.outcomes[k].found if k < len(record.outcomes) else False
            ET.SubElement(svg, "circle", cx=f"{sx(x):.1f}", cy=f"{sy(y):.1f}", r="6",
                          fill="none", stroke="#d62728" if found else "#555",
                          **{"stroke-width": "1.5"})

    legend = [
        f"t = {record.n_ticks * record.dt_s / 60.0:.1f} min "
        f"({record.n_ticks} ticks)",
        (f"uav cell = {tuple(int(c) for c in record.trace_cells[-1])}"
         if record.trace_cells is not None and len(record.trace_cells) else "uav cell = n/a"),
        f"found {record.found_count}/{record.n_targets} targets, {record.termination}",
    ]
    for li, text in enumerate(legend):
        el = ET.SubElement(svg, "text", x="8", y=f"{height + 18 + 17 * li:.0f}",
                           **{"font-size": "13", "font-family": "sans-serif",
                              "fill": "#222"})
        el.text = text

    ET.ElementTree(svg).write(path, xml_declaration=True, encoding="unicode")


def emit_metrics_svg(table, path, size_px: int = 640) -> None:
    """Bar chart of per-planner success rates for one distance table."""
    rows = list(table.rows.items())
    bar_h = 26
    height = 60 + bar_h * max(len(rows), 1) + 20
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=str(size_px), height=str(height),
                     viewBox=f"0 0 {size_px} {height}")
    title = ET.SubElement(svg, "text", x="10", y="24",
                          **{"font-size": "15", "font-family": "sans-serif"})
    title.text = f"Success rate, targets at {table.distance_km:g} km ({table.runs} runs)"
    x0, bar_w = 130, size_px - 200
    for li, (label, m) in enumerate(rows):
        y = 46 + li * bar_h
        name = ET.SubElement(svg, "text", x="10", y=f"{y + 13}",
                             **{"font-size": "12", "font-family": "sans-serif"})
        name.text = label
        ET.SubElement(svg, "rect", x=str(x0), y=str(y), height=str(bar_h - 8),
                      width=f"{bar_w * m.success_rate:.1f}", fill="#4a6fa5")
        val = ET.SubElement(svg, "text", x=f"{x0 + bar_w * m.success_rate + 6:.1f}",
                            y=f"{y + 13}", **{"font-size": "12",
                                              "font-family": "sans-serif"})
        val.text = f"{m.success_rate:.2f}"
    ET.ElementTree(svg).write(path, xml_declaration=True, encoding="unicode")
