"""Multi-view silhouette objective and the per-vertex error metric."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .backward import EdgeAdjacency, backward, silhouette_edges
from .forward import RenderSettings, SilhouetteImage, rasterize
from .geometry import TriangleMesh
from .projection import Camera, backproject_gradients, project

Regularizer = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


@dataclass
class MultiViewTargets:
    images: list
    cameras: list

    def __post_init__(self):
        if len(self.images) < 1 or len(self.images) != len(self.cameras):
            raise ValueError("need one camera per target silhouette and at least one view")
        shape = self.images[0].shape
        levels = (self.images[0].p0, self.images[0].p1)
        for img in self.images[1:]:
            if img.shape != shape or (img.p0, img.p1) != levels:
                raise ValueError("all target silhouettes must share size and intensity levels")

    def __len__(self) -> int:
        return len(self.images)

    @property
    def shape(self) -> tuple[int, int]:
        return self.images[0].shape


def zero_regularizer(vertices: np.ndarray) -> tuple[float, np.ndarray]:
    return 0.0, np.zeros_like(vertices)


@dataclass
class Objective:
    """``E = E_sl + lam * E_reg``; the regularizer returns (value, dE/dvertex)."""

    lam: float = 0.001
    regularizer: Regularizer = field(default=zero_regularizer)

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("regularizer weight must be non-negative")


def silhouette_loss(rendered: Sequence[SilhouetteImage], targets: MultiViewTargets):
    """Sum of squared pixel differences over views, and dE/dI per view."""
    if len(rendered) != len(targets):
        raise ValueError(f"{len(rendered)} renders for {len(targets)} targets")
    total = 0.0
    grads = []
    for img, tgt in zip(rendered, targets.images):
        if img.shape != tgt.shape:
            raise ValueError(f"render shape {img.shape} does not match target {tgt.shape}")
        diff = img.data - tgt.data
        total += float(np.sum(diff * diff))
        grads.append(2.0 * diff)
    return total, grads


def per_vertex_error(estimated, truth) -> float:
    """Mean Euclidean distance between corresponding vertices."""
    a = np.asarray(estimated, dtype=np.float64)
    b = np.asarray(truth, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"vertex sets differ in shape: {a.shape} vs {b.shape}")
    return float(np.mean(np.linalg.norm(a - b, axis=-1)))


@dataclass
class ObjectiveValue:
    E: float
    E_sl: float
    E_reg: float
    grad: np.ndarray                 # dE/dvertex, (N_v, 3)
    renders: list
    touched: int = 0                 # boundary pixels evaluated, all views


def render_views(mesh: TriangleMesh, cameras: Sequence[Camera], H: int, W: int,
                 settings: RenderSettings) -> list[SilhouetteImage]:
    return [rasterize(project(mesh, cam)[0], H, W, settings) for cam in cameras]


def _view_pass(mesh, camera, target, settings, adjacency):
    screen, jac = project(mesh, camera)
    H, W = target.shape
    img = rasterize(screen, H, W, settings)
    diff = img.data - target.data
    edges = silhouette_edges(screen, adjacency)
    sg = backward(img, 2.0 * diff, screen, settings, edges=edges)
    return img, float(np.sum(diff * diff)), backproject_gradients(sg, jac), sg.touched_count


def evaluate_objective(mesh: TriangleMesh, targets: MultiViewTargets, objective: Objective,
                       settings: RenderSettings = RenderSettings(), adjacency: EdgeAdjacency | None = None,
                       threads: int = 1) -> ObjectiveValue:
    """Render every view, score it against its target and chain the gradient to 3D."""
    adjacency = adjacency or EdgeAdjacency.from_faces(mesh.faces[:, [0, 2, 1]])
    jobs = list(zip(targets.cameras, targets.images))
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda ct: _view_pass(mesh, ct[0], ct[1], settings, adjacency), jobs))
    else:
        results = [_view_pass(mesh, cam, tgt, settings, adjacency) for cam, tgt in jobs]
    E_sl = 0.0
    grad = np.zeros_like(mesh.vertices)
    for _, e, g, _ in results:          # fixed view order
        E_sl += e
        grad += g
    E_reg, g_reg = objective.regularizer(mesh.vertices)
    E = E_sl + objective.lam * float(E_reg)
    grad = grad + objective.lam * np.asarray(g_reg)
    return ObjectiveValue(E, E_sl, float(E_reg), grad, [r[0] for r in results], sum(r[3] for r in results))
