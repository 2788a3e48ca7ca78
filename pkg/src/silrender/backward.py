"""Analytic backward pass of the silhouette rasterizer.

Each silhouette edge that crosses a boundary pixel contributes the exact
derivative of the box-filtered pixel value with respect to its endpoint
coordinates; contributions of all edges crossing a pixel are summed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .clip import liang_barsky_clip
from .forward import RenderSettings, SilhouetteImage, rasterize
from .geometry import Rect, ScreenMesh


class EdgeCoefficients(NamedTuple):
    A: float
    B: float
    C: float


class EdgePixelPartials(NamedTuple):
    d_x0: float
    d_y0: float
    d_x1: float
    d_y1: float


@dataclass
class ScreenGradients:
    """dL/dv per screen vertex plus bookkeeping from the pass that made it."""

    grad: np.ndarray
    touched: np.ndarray | None = None
    evaluations: int = 0

    @classmethod
    def zeros(cls, n: int) -> "ScreenGradients":
        return cls(np.zeros((n, 2)))

    @property
    def touched_count(self) -> int:
        return 0 if self.touched is None else int(self.touched.sum())


def edge_coefficients(v_a, v_b) -> EdgeCoefficients:
    x0, y0 = float(v_a[0]), float(v_a[1])
    x1, y1 = float(v_b[0]), float(v_b[1])
    return EdgeCoefficients(y1 - y0, x0 - x1, x1 * y0 - x0 * y1)


def edge_pixel_partials(v_a, v_b, pixel: Rect, p0: float = 0.0, p1: float = 1.0) -> EdgePixelPartials:
    """Closed-form dI/d(x0, y0, x1, y1) for the edge v_a -> v_b over ``pixel``.

    The foreground must lie on the side where ``A x + B y + C < 0``.
    """
    A, B, _ = edge_coefficients(v_a, v_b)
    if A * A + B * B <= _kernels.DEGENERATE_EDGE:
        raise ValueError("degenerate edge: endpoints coincide")
    d = _kernels.edge_partials(float(v_a[0]), float(v_a[1]), float(v_b[0]), float(v_b[1]),
                               *map(float, pixel), float(p0), float(p1))
    return EdgePixelPartials(*d.tolist())


def edge_intersects_pixel(seg, pixel: Rect) -> bool:
    return liang_barsky_clip(seg, pixel) is not None


def detect_boundary_pixels(img: SilhouetteImage) -> np.ndarray:
    """Fractional pixels and pixels differing from a 4-neighbour."""
    d = img.data
    lo, hi = min(img.p0, img.p1), max(img.p0, img.p1)
    mask = (d > lo) & (d < hi)
    horiz = d[:, 1:] != d[:, :-1]
    vert = d[1:, :] != d[:-1, :]
    mask[:, 1:] |= horiz
    mask[:, :-1] |= horiz
    mask[1:, :] |= vert
    mask[:-1, :] |= vert
    return mask


@dataclass
class EdgeAdjacency:
    """Undirected edges of a face list and the faces incident to each."""

    edges: np.ndarray        # (E, 2) sorted vertex pairs
    inc_edge: np.ndarray     # (K,) edge id per incidence
    inc_face: np.ndarray     # (K,) face id per incidence
    inc_forward: np.ndarray  # (K,) True if the face walks the edge low -> high
    num_faces_per_edge: np.ndarray = field(init=False)

    def __post_init__(self):
        self.num_faces_per_edge = np.bincount(self.inc_edge, minlength=len(self.edges))

    @classmethod
    def from_faces(cls, faces) -> "EdgeAdjacency":
        f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        start = f.reshape(-1)
        end = f[:, [1, 2, 0]].reshape(-1)
        lo = np.minimum(start, end)
        hi = np.maximum(start, end)
        pairs = np.stack([lo, hi], axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        return cls(edges.reshape(-1, 2), inverse.reshape(-1),
                   np.repeat(np.arange(len(f)), 3), start == lo)


def silhouette_edges(screen: ScreenMesh, adjacency: EdgeAdjacency | None = None) -> np.ndarray:
    """Directed edges that can lie on the silhouette outline, shape (E, 2).

    Kept: open-boundary edges of non-degenerate faces, edges joining a
    front-facing and a back-facing face, and edges joining a front-facing
    face to edge-on (zero-area) faces only. Each edge is oriented so the
    foreground lies on its negative side.
    """
    if len(screen.faces) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    adj = adjacency if adjacency is not None else EdgeAdjacency.from_faces(screen.faces)
    area = screen.face_areas()
    front = area > _kernels.DEGENERATE_AREA
    back = area < -_kernels.DEGENERATE_AREA
    n_edges = len(adj.edges)
    fr = front[adj.inc_face]
    bk = back[adj.inc_face]
    n_front = np.bincount(adj.inc_edge, weights=fr, minlength=n_edges)
    n_back = np.bincount(adj.inc_edge, weights=bk, minlength=n_edges)
    n_total = adj.num_faces_per_edge
    n_deg = n_total - n_front - n_back

    open_edge = (n_total == 1) & (n_front + n_back == 1)
    fold = (n_total > 1) & (n_front > 0) & ((n_back > 0) | (n_deg > 0))
    keep = open_edge | fold

    # orientation from the first front face, else (open back face) reversed
    pick = fr | (bk & (n_total[adj.inc_edge] == 1))
    order = np.flatnonzero(pick)
    first = np.full(n_edges, -1, dtype=np.int64)
    seen, at = np.unique(adj.inc_edge[order], return_index=True)
    first[seen] = order[at]
    keep &= first >= 0
    ids = np.flatnonzero(keep)
    inc = first[ids]
    walks_forward = adj.inc_forward[inc] == fr[inc]
    lo, hi = adj.edges[ids, 0], adj.edges[ids, 1]
    out = np.where(walks_forward[:, None], np.stack([lo, hi], 1), np.stack([hi, lo], 1))
    return np.ascontiguousarray(out, dtype=np.int64)


def _probe_offset(settings: RenderSettings | None) -> float:
    F = 4 if settings is None else settings.F
    return 0.5 / F


def _run(img, loss_grads, screen, direction, settings, edges, occlusion):
    H, W = img.shape
    if edges is None:
        edges = silhouette_edges(screen)
    mask = detect_boundary_pixels(img)
    return _kernels.backward_kernel(
        screen.vertices, screen.faces, np.ascontiguousarray(edges, dtype=np.int64), mask,
        np.ascontiguousarray(loss_grads, dtype=np.float64), direction,
        float(img.p0), float(img.p1), _probe_offset(settings), bool(occlusion))


def backward(img: SilhouetteImage, loss_grads, screen: ScreenMesh, settings: RenderSettings | None = None,
             edges: np.ndarray | None = None, occlusion: bool = True) -> ScreenGradients:
    """Chain per-pixel loss gradients dL/dI into per-vertex dL/dv.

    Only pixels flagged by :func:`detect_boundary_pixels` are visited. An
    edge crossing a pixel is skipped there when a probe just off its
    background side falls inside another face (the edge is hidden).
    """
    loss_grads = np.asarray(loss_grads, dtype=np.float64)
    if loss_grads.shape != img.shape:
        raise ValueError(f"loss gradient shape {loss_grads.shape} does not match image {img.shape}")
    direction = np.zeros((screen.num_vertices, 2))
    grad, _, touched, n_eval = _run(img, loss_grads, screen, direction, settings, edges, occlusion)
    return ScreenGradients(grad, touched, int(n_eval))


def parameter_gradient_image(screen: ScreenMesh, dvertex_dparam, H: int, W: int,
                             settings: RenderSettings = RenderSettings(), img: SilhouetteImage | None = None,
                             edges: np.ndarray | None = None) -> np.ndarray:
    """Per-pixel dI(i, j)/dparam for screen-vertex velocities ``dvertex_dparam``."""
    direction = np.ascontiguousarray(dvertex_dparam, dtype=np.float64)
    if direction.shape != (screen.num_vertices, 2):
        raise ValueError(f"expected one 2D direction per vertex, got shape {direction.shape}")
    if img is None:
        img = rasterize(screen, H, W, settings)
    _, dimage, _, _ = _run(img, np.zeros(img.shape), screen, direction, settings, edges, True)
    return dimage

