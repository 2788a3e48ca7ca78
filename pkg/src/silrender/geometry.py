"""Core geometric records and mesh utilities.

Screen coordinates: x to the right, y downward, origin at the top-left of
the image. Pixel (i, j) covers ``Rect(j, i, j + 1, i + 1)``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Rect(NamedTuple):
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @property
    def area(self) -> float:
        return max(self.x_max - self.x_min, 0.0) * max(self.y_max - self.y_min, 0.0)

    @property
    def is_empty(self) -> bool:
        return not (self.x_min < self.x_max and self.y_min < self.y_max)

    @classmethod
    def pixel(cls, i: int, j: int) -> "Rect":
        """Footprint of the pixel in row ``i`` and column ``j``."""
        return cls(float(j), float(i), float(j + 1), float(i + 1))


def _as_faces(faces) -> np.ndarray:
    f = np.asarray(faces, dtype=np.int64)
    if f.ndim != 2 or f.shape[1] != 3:
        raise ValueError(f"faces must have shape (N_f, 3), got {f.shape}")
    return np.ascontiguousarray(f)


@dataclass(frozen=True)
class TriangleMesh:
    """Object-space triangle mesh.

    Faces are counterclockwise when seen from outside (the usual OBJ
    convention); :func:`silrender.projection.project` handles the flip to the
    screen-space winding used by the rasterizer.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must have shape (N_v, 3), got {v.shape}")
        f = _as_faces(self.faces)
        _check_topology(f, len(v))
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    def with_vertices(self, vertices) -> "TriangleMesh":
        return TriangleMesh(vertices, self.faces)


def _check_topology(faces: np.ndarray, num_vertices: int) -> None:
    if num_vertices < 3:
        raise ValueError(f"a mesh needs at least 3 vertices, got {num_vertices}")
    if len(faces) < 1:
        raise ValueError("a mesh needs at least one face")
    if faces.min() < 0 or faces.max() >= num_vertices:
        bad = int(np.flatnonzero((faces < 0).any(1) | (faces >= num_vertices).any(1))[0])
        raise IndexError(f"face {bad} references a vertex outside [0, {num_vertices})")
    repeats = (faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])
    if repeats.any():
        raise ValueError(f"face {int(np.flatnonzero(repeats)[0])} repeats a vertex index")


@dataclass(frozen=True)
class ScreenMesh:
    """Projected mesh: 2D vertices, shared faces and per-vertex camera depth.

    Faces are wound so that a front-facing triangle has positive
    :func:`signed_area`, i.e. its interior lies on the negative side of the
    edge function of each directed edge.
    """

    vertices: np.ndarray
    faces: np.ndarray
    depths: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError(f"screen vertices must have shape (N_v, 2), got {v.shape}")
        f = _as_faces(self.faces) if len(self.faces) else np.zeros((0, 3), dtype=np.int64)
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise IndexError("face index out of range")
        d = np.zeros(len(v)) if self.depths is None else np.asarray(self.depths, dtype=np.float64)
        if d.shape != (len(v),) or not np.all(np.isfinite(d)):
            raise ValueError("depths must be finite, one per vertex")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "depths", d)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def triangles(self) -> np.ndarray:
        """Face corner positions, shape (N_f, 3, 2)."""
        return self.vertices[self.faces]

    def face_areas(self) -> np.ndarray:
        t = self.triangles()
        return signed_area(t[:, 0], t[:, 1], t[:, 2])


def signed_area(a, b, c):
    """Half the cross product ``(b - a) x (c - a)``.

    Positive means the triangle interior is on the negative side of the edge
    function ``A x + B y + C`` of every directed edge a->b, b->c, c->a.
    Works elementwise on arrays of shape (..., 2).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    cross = (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])
    return 0.5 * cross


def face_bounding_box(a, b, c) -> Rect:
    pts = np.array([a, b, c], dtype=np.float64)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    return Rect(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


class ObjParseError(ValueError):
    pass


def load_obj(path) -> TriangleMesh:
    """Read ``v`` and ``f`` records of a Wavefront OBJ file.

    Polygons are fan-triangulated around their first corner. Texture and
    normal references (``f 1/2/3 ...``) are accepted and dropped; negative
    (relative) indices are resolved against the vertices read so far.
    """
    vertices = []
    faces = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tag, *rest = line.split()
            if tag == "v":
                if len(rest) < 3:
                    raise ObjParseError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    vertices.append([float(x) for x in rest[:3]])
                except ValueError as exc:
                    raise ObjParseError(f"{path}:{lineno}: {exc}") from None
            elif tag == "f":
                if len(rest) < 3:
                    raise ObjParseError(f"{path}:{lineno}: face needs at least 3 corners")
                idx = []
                for tok in rest:
                    try:
                        k = int(tok.split("/")[0])
                    except ValueError:
                        raise ObjParseError(f"{path}:{lineno}: bad face index {tok!r}") from None
                    if k == 0:
                        raise ObjParseError(f"{path}:{lineno}: OBJ indices are 1-based")
                    idx.append(k - 1 if k > 0 else len(vertices) + k)
                for n in range(1, len(idx) - 1):
                    faces.append((idx[0], idx[n], idx[n + 1], lineno))
    n_v = len(vertices)
    for *tri, lineno in faces:
        if any(k < 0 or k >= n_v for k in tri):
            raise IndexError(f"{path}:{lineno}: face index out of range for {n_v} vertices")
    return TriangleMesh(np.array(vertices, dtype=np.float64).reshape(-1, 3),
                        np.array([f[:3] for f in faces], dtype=np.int64).reshape(-1, 3))


def format_obj(mesh: TriangleMesh) -> str:
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    return "\n".join(lines) + "\n"


def save_obj(mesh: TriangleMesh, path) -> None:
    from .io import atomic_write_text

    atomic_write_text(os.fspath(path), format_obj(mesh))


def edge_face_map(faces: np.ndarray) -> dict[tuple[int, int], list[int]]:
    """Undirected edge ``(min, max)`` -> indices of the faces using it."""
    table: dict[tuple[int, int], list[int]] = {}
    for fi, (a, b, c) in enumerate(np.asarray(faces).tolist()):
        for u, v in ((a, b), (b, c), (c, a)):
            table.setdefault((min(u, v), max(u, v)), []).append(fi)
    return table


def euler_characteristic(mesh: TriangleMesh) -> int:
    n_edges = len(edge_face_map(mesh.faces))
    return mesh.num_vertices - n_edges + mesh.num_faces


def connected_components(faces: np.ndarray, num_vertices: int) -> np.ndarray:
    """Component label per vertex (vertices joined by faces)."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components as cc

    f = np.asarray(faces)
    rows = np.concatenate([f[:, 0], f[:, 1], f[:, 2]])
    cols = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(num_vertices, num_vertices))
    _, labels = cc(graph, directed=False)
    return labels
