"""Segment and polygon clipping against axis-aligned rectangles."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ._kernels import clip_endpoints
from .geometry import Rect


class Segment(NamedTuple):
    a: tuple[float, float]
    b: tuple[float, float]


def liang_barsky_clip(seg, rect: Rect) -> Segment | None:
    """Part of ``seg`` inside ``rect``, keeping the a->b direction.

    Returns None when the overlap is empty or a single point.
    """
    (x0, y0), (x1, y1) = seg
    hit, ax, ay, bx, by = clip_endpoints(float(x0), float(y0), float(x1), float(y1), *map(float, rect))
    if not hit:
        return None
    return Segment((ax, ay), (bx, by))


def _clip_half(poly, inside, intersect):
    out = []
    n = len(poly)
    for k in range(n):
        cur = poly[k]
        prev = poly[k - 1]
        cur_in = inside(cur)
        prev_in = inside(prev)
        if cur_in:
            if not prev_in:
                out.append(intersect(prev, cur))
            out.append(cur)
        elif prev_in:
            out.append(intersect(prev, cur))
    return out


def _x_cut(x):
    def cut(p, q):
        t = (x - p[0]) / (q[0] - p[0])
        return (x, p[1] + t * (q[1] - p[1]))
    return cut


def _y_cut(y):
    def cut(p, q):
        t = (y - p[1]) / (q[1] - p[1])
        return (p[0] + t * (q[0] - p[0]), y)
    return cut


def clip_polygon_to_rect(polygon, rect: Rect) -> list[tuple[float, float]]:
    """Sutherland-Hodgman clip of a simple polygon to ``rect``."""
    poly = [(float(x), float(y)) for x, y in polygon]
    xmin, ymin, xmax, ymax = rect
    for inside, cut in (
        (lambda p: p[0] >= xmin, _x_cut(xmin)),
        (lambda p: p[0] <= xmax, _x_cut(xmax)),
        (lambda p: p[1] >= ymin, _y_cut(ymin)),
        (lambda p: p[1] <= ymax, _y_cut(ymax)),
    ):
        if not poly:
            break
        poly = _clip_half(poly, inside, cut)
    return poly


def polygon_area(polygon) -> float:
    """Absolute shoelace area."""
    if len(polygon) < 3:
        return 0.0
    p = np.asarray(polygon, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
