"""Static top-down SVG of a scene with flown trajectories."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .geometry import Disc, polygon_vertices
from .scene import Scene

PX_PER_M = 30.0
MARGIN = 10.0
COLORS = ("#7b2cbf", "#2a9d8f", "#e76f51", "#264653", "#f4a261")


def render_svg(scene: Scene, trajectories: list[np.ndarray]) -> str:
    """SVG text: bounds, obstacles, dashed route, one polyline per trajectory, start/goal."""
    b = scene.bounds
    w, h = b.size
    W, H = w * PX_PER_M + 2 * MARGIN, h * PX_PER_M + 2 * MARGIN

    def xy(p):
        # y axis points up in the world, down in SVG
        return (MARGIN + (p[0] - b.xmin) * PX_PER_M, MARGIN + (b.ymax - p[1]) * PX_PER_M)

    def pts(arr):
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in (xy(p) for p in arr))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" '
        f'viewBox="0 0 {W:.2f} {H:.2f}">',
        f"<title>{escape(scene.name)}</title>",
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{w * PX_PER_M:.2f}" height="{h * PX_PER_M:.2f}" '
        'fill="white" stroke="black" stroke-width="2"/>',
    ]
    for shape in scene.obstacles:
        if isinstance(shape, Disc):
            cx, cy = xy(shape.center)
            out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{shape.radius * PX_PER_M:.2f}" '
                       'fill="#999" stroke="#444"/>')
        else:
            out.append(f'<polygon points="{pts(polygon_vertices(shape))}" fill="#999" stroke="#444"/>')
    (sx, sy), (gx, gy) = xy(scene.start), xy(scene.goal)
    out.append(f'<line x1="{sx:.2f}" y1="{sy:.2f}" x2="{gx:.2f}" y2="{gy:.2f}" '
               'stroke="red" stroke-width="2" stroke-dasharray="8,6"/>')
    for i, traj in enumerate(trajectories):
        out.append(f'<polyline points="{pts(traj)}" fill="none" '
                   f'stroke="{COLORS[i % len(COLORS)]}" stroke-width="2"/>')
    out.append(f'<circle cx="{sx:.2f}" cy="{sy:.2f}" r="6" fill="green"/>')
    out.append(f'<circle cx="{gx:.2f}" cy="{gy:.2f}" r="6" fill="orange"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, scene: Scene, trajectories: list[np.ndarray]) -> None:
    Path(path).write_text(render_svg(scene, trajectories))
