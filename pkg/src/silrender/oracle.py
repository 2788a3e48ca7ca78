"""Reference implementations used to check the renderer.

Nothing here is used by the forward or backward pass: coverage comes from
Sutherland-Hodgman polygon clipping rather than Liang-Barsky segment
clipping or point sampling, and gradients from central differences.
"""
from __future__ import annotations

import math

import numpy as np

from .clip import clip_polygon_to_rect, polygon_area
from .forward import SilhouetteImage
from .geometry import Rect


def exact_pixel_coverage(triangle, pixel: Rect, p0: float = 0.0, p1: float = 1.0) -> float:
    tri = np.asarray(triangle, dtype=np.float64).reshape(3, 2)
    twice = (tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1]) - (tri[1, 1] - tri[0, 1]) * (tri[2, 0] - tri[0, 0])
    if twice == 0.0:
        raise ValueError("degenerate triangle")
    covered = polygon_area(clip_polygon_to_rect(tri, pixel))
    return p0 + (p1 - p0) * covered / Rect(*pixel).area


def exact_image(triangles, H: int, W: int, p0: float = 0.0, p1: float = 1.0) -> SilhouetteImage:
    """Exact box-filtered image of one triangle or of pairwise-disjoint triangles."""
    tris = np.asarray(triangles, dtype=np.float64).reshape(-1, 3, 2)
    frac = np.zeros((H, W))
    for tri in tris:
        lo = np.floor(tri.min(axis=0)).astype(int)
        hi = np.floor(tri.max(axis=0)).astype(int)
        for i in range(max(lo[1], 0), min(hi[1], H - 1) + 1):
            for j in range(max(lo[0], 0), min(hi[0], W - 1) + 1):
                frac[i, j] += exact_pixel_coverage(tri, Rect.pixel(i, j))
    return SilhouetteImage(p0 + (p1 - p0) * frac, p0, p1)


def finite_difference(loss_fn, params, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of a parameter vector."""
    p = np.array(params, dtype=np.float64)
    shape = p.shape
    p = p.reshape(-1)
    grad = np.zeros_like(p)
    for k in range(p.size):
        up = p.copy()
        dn = p.copy()
        up[k] += h
        dn[k] -= h
        grad[k] = (loss_fn(up.reshape(shape)) - loss_fn(dn.reshape(shape))) / (2.0 * h)
    return grad.reshape(shape)


def relative_error(analytic, reference, floor: float = 0.0) -> float:
    """max |a - r| / max(max |r|, floor)."""
    a = np.asarray(analytic, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    scale = max(float(np.max(np.abs(r))) if r.size else 0.0, floor)
    diff = float(np.max(np.abs(a - r))) if a.size else 0.0
    if scale == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / scale
