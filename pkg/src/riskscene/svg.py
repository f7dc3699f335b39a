"""Dependency-free SVG emission for heatmaps, scene graphs and forecasts.

All numbers are formatted with fixed precision and elements are written in a
deterministic order, so identical inputs produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

_KIND_COLORS = {
    "pedestrian": "#d62728",
    "car": "#1f77b4",
    "rider": "#9467bd",
    "road_segment": "#bbbbbb",
    "drivable_area": "#d9d9d9",
    "zebra_region": "#ffd92f",
    "carpark": "#a6d854",
    "sidewalk": "#fcc5c0",
    "road_block": "#8c564b",
    "road_lanes": "#cccc99",
    "stop_lines": "#e41a1c",
    "padding": "#eeeeee",
}


def _fmt(v: float) -> str:
    return f"{float(v):.3f}"


def _document(width, height, body, comment: str) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f"<!-- {comment} -->\n"
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">\n'
    )
    return head + body + "</svg>\n"


def _heat_color(value: float) -> str:
    """White -> red ramp over a clipped [0, 1] value."""
    v = min(max(float(value), 0.0), 1.0)
    g = int(round(255 * (1.0 - v)))
    return f"#ff{g:02x}{g:02x}"


def heatmap_svg(matrix: np.ndarray, row_labels, col_labels, comment: str,
                cell: float = 24.0, vmax: float | None = None) -> str:
    """Grid heatmap (rows x cols) with labels, values clipped to [0, vmax]."""
    matrix = np.asarray(matrix, dtype=np.float64)
    rows, cols = matrix.shape
    label_w, label_h = 110.0, 22.0
    width = label_w + cols * cell + 10
    height = label_h + rows * cell + 10
    if vmax is None:
        vmax = float(matrix.max()) if matrix.size and matrix.max() > 0 else 1.0
    parts = []
    for c, lab in enumerate(col_labels):
        x = label_w + c * cell + cell / 2
        parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(label_h - 8)}" font-size="11" '
            f'text-anchor="middle">{lab}</text>\n'
        )
    for r in range(rows):
        y = label_h + r * cell
        parts.append(
            f'<text x="{_fmt(label_w - 6)}" y="{_fmt(y + cell / 2 + 4)}" font-size="11" '
            f'text-anchor="end">{row_labels[r]}</text>\n'
        )
        for c in range(cols):
            x = label_w + c * cell
            color = _heat_color(matrix[r, c] / vmax if vmax > 0 else 0.0)
            parts.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(cell)}" '
                f'height="{_fmt(cell)}" fill="{color}" stroke="#666" stroke-width="0.5"/>\n'
            )
    return _document(width, height, "".join(parts), comment)


class _Projector:
    def __init__(self, points, size=640.0, margin=30.0):
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        span = np.maximum(hi - lo, 1e-6)
        self.scale = (size - 2 * margin) / span.max()
        self.lo = lo
        self.margin = margin
        self.width = span[0] * self.scale + 2 * margin
        self.height = span[1] * self.scale + 2 * margin

    def __call__(self, p):
        x = self.margin + (p[0] - self.lo[0]) * self.scale
        y = self.height - (self.margin + (p[1] - self.lo[1]) * self.scale)
        return x, y


def _polyline(points, proj, color, width, dash=None, opacity=1.0):
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (proj(p) for p in points))
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline points="{pts}" fill="none" stroke="{color}" '
        f'stroke-width="{width}" stroke-opacity="{_fmt(opacity)}"{dash_attr}/>\n'
    )


def scene_graph_svg(graph, smap, comment: str) -> str:
    """Nodes colored by kind, solid lines for activated edges, map underlay."""
    all_pts = [graph.nodes]
    for region in smap.regions:
        all_pts.append(region.polygon)
    proj = _Projector(np.vstack(all_pts))
    parts = []
    for region in smap.regions:
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (proj(p) for p in region.polygon))
        color = _KIND_COLORS.get(region.kind.value, "#dddddd")
        parts.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.35" stroke="#999"/>\n')
    v = len(graph.nodes)
    for i in range(v):
        for j in range(i + 1, v):
            if graph.edges[i, j]:
                xi, yi = proj(graph.nodes[i])
                xj, yj = proj(graph.nodes[j])
                parts.append(
                    f'<line x1="{_fmt(xi)}" y1="{_fmt(yi)}" x2="{_fmt(xj)}" y2="{_fmt(yj)}" '
                    f'stroke="#333333" stroke-width="1.2"/>\n'
                )
    for i in range(v):
        kind = graph.node_kinds[i]
        if kind == "padding":
            continue
        x, y = proj(graph.nodes[i])
        color = _KIND_COLORS.get(kind, "#000000")
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="5" fill="{color}" stroke="#222"/>\n')
        parts.append(
            f'<text x="{_fmt(x + 7)}" y="{_fmt(y - 5)}" font-size="10">{kind}</text>\n'
        )
    return _document(proj.width, proj.height, "".join(parts), comment)


def forecast_svg(observed, truth, samples, smap, comment: str) -> str:
    """Observation solid, ground-truth future dashed, samples translucent.

    observed: (T_obs, N, 2); truth: (N, T_pred, 2); samples: (h, N, T_pred, 2).
    """
    pts = [observed.reshape(-1, 2), truth.reshape(-1, 2), samples.reshape(-1, 2)]
    for region in smap.regions:
        pts.append(region.polygon)
    proj = _Projector(np.vstack(pts))
    parts = []
    for region in smap.regions:
        poly = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (proj(p) for p in region.polygon))
        color = _KIND_COLORS.get(region.kind.value, "#dddddd")
        parts.append(f'<polygon points="{poly}" fill="{color}" fill-opacity="0.3" stroke="#aaa"/>\n')
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    n = observed.shape[1]
    for i in range(n):
        color = palette[i % len(palette)]
        for draw in range(samples.shape[0]):
            parts.append(_polyline(samples[draw, i], proj, color, 1.0, opacity=0.18))
        parts.append(_polyline(observed[:, i], proj, color, 2.0))
        start = observed[-1, i][None, :]
        parts.append(
            _polyline(np.vstack([start, truth[i]]), proj, color, 1.5, dash="6,4")
        )
    return _document(proj.width, proj.height, "".join(parts), comment)


def write_svg(path, content: str):
    Path(path).write_text(content, encoding="utf-8")
