"""Planar polygon primitives used by map handling and scene-graph construction.

All polygons are (V, 2) float arrays of ordered vertices over the ground
plane, in meters. Closing edges are implicit (last vertex connects back to
the first). Containment is inclusive: points on a polygon edge count as
inside, so that agents sitting exactly on a region border still resolve to
that region.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


def polygon_signed_area(poly: np.ndarray) -> float:
    """Shoelace signed area; positive for counter-clockwise vertex order."""
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    """Area-weighted centroid of a simple polygon.

    Degenerate (zero-area) polygons fall back to the vertex mean so the
    result is always finite.
    """
    poly = np.asarray(poly, dtype=np.float64)
    x = poly[:, 0]
    y = poly[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * np.sum(cross)
    if abs(area) < _EPS:
        return poly.mean(axis=0)
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    return np.array([cx, cy])


def _on_segment(p, a, b, tol=1e-9):
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if abs(cross) > tol:
        return False
    dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])
    if dot < -tol:
        return False
    sq_len = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
    return dot <= sq_len + tol


def point_in_polygon(point, poly: np.ndarray) -> bool:
    """Inclusive containment test (crossing number plus on-edge check)."""
    px, py = float(point[0]), float(point[1])
    n = len(poly)
    inside = False
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        if _on_segment((px, py), a, b):
            return True
        # crossing-number rule with half-open vertex handling
        if (a[1] > py) != (b[1] > py):
            x_cross = a[0] + (py - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if px < x_cross:
                inside = not inside
    return inside


def _orient(a, b, c):
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if v > _EPS:
        return 1
    if v < -_EPS:
        return -1
    return 0


def segments_intersect(p1, p2, q1, q2) -> bool:
    """True when segments p1p2 and q1q2 share at least one point."""
    o1 = _orient(p1, p2, q1)
    o2 = _orient(p1, p2, q2)
    o3 = _orient(q1, q2, p1)
    o4 = _orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(q1, p1, p2):
        return True
    if o2 == 0 and _on_segment(q2, p1, p2):
        return True
    if o3 == 0 and _on_segment(p1, q1, q2):
        return True
    if o4 == 0 and _on_segment(p2, q1, q2):
        return True
    return False


def polygon_is_simple(poly: np.ndarray) -> bool:
    """Check that no two non-adjacent edges intersect (O(V^2) scan)."""
    n = len(poly)
    if n < 3:
        return False
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # shared-vertex neighbors always touch
            if segments_intersect(edges[i][0], edges[i][1], edges[j][0], edges[j][1]):
                return False
    return True


def polygon_intersects_rect(poly: np.ndarray, rect) -> bool:
    """True when the polygon and the axis-aligned rect share any point.

    rect is (xmin, ymin, xmax, ymax). Used to drop regions fully outside a
    region-of-interest crop.
    """
    xmin, ymin, xmax, ymax = (float(v) for v in rect)
    # fast reject on bounding boxes
    if poly[:, 0].max() < xmin or poly[:, 0].min() > xmax:
        return False
    if poly[:, 1].max() < ymin or poly[:, 1].min() > ymax:
        return False
    corners = [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)]
    for v in poly:
        if xmin <= v[0] <= xmax and ymin <= v[1] <= ymax:
            return True
    for c in corners:
        if point_in_polygon(c, poly):
            return True
    n = len(poly)
    rect_edges = [(corners[k], corners[(k + 1) % 4]) for k in range(4)]
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        for q1, q2 in rect_edges:
            if segments_intersect(a, b, q1, q2):
                return True
    return False
