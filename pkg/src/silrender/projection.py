"""Cameras: 3D -> screen projection with analytic Jacobians."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import ScreenMesh, TriangleMesh

DEPTH_EPSILON = 1e-6


@dataclass(frozen=True)
class Camera:
    """World-to-camera rigid pose plus intrinsics.

    Camera frame: x right, y down, z forward (looking direction), so camera
    x/y map straight onto screen x/y. ``focal`` is in pixels for the
    perspective kind; for the orthographic kind it is pixels per world unit.
    """

    kind: str = "perspective"
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    focal: float = 1.0
    principal_point: tuple[float, float] = (0.0, 0.0)
    image_size: tuple[int, int] = (64, 64)

    def __post_init__(self):
        if self.kind not in ("perspective", "orthographic"):
            raise ValueError(f"unknown camera kind {self.kind!r}")
        if not self.focal > 0:
            raise ValueError("focal / scale must be positive")
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        if np.max(np.abs(R @ R.T - np.eye(3))) > 1e-9 or np.linalg.det(R) < 0:
            raise ValueError("rotation must be a proper orthonormal matrix")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))
        object.__setattr__(self, "principal_point", tuple(float(c) for c in self.principal_point))
        object.__setattr__(self, "image_size", tuple(int(c) for c in self.image_size))

    @property
    def center(self) -> np.ndarray:
        """Camera position in world coordinates."""
        return -self.rotation.T @ self.translation

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
            "focal": self.focal,
            "principal_point": list(self.principal_point),
            "image_size": list(self.image_size),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Camera":
        return cls(kind=d.get("kind", "perspective"), rotation=d["rotation"], translation=d["translation"],
                   focal=float(d["focal"]), principal_point=tuple(d["principal_point"]),
                   image_size=tuple(d["image_size"]))


def look_at(eye, target, up=(0.0, 1.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """World-to-camera (R, t) for a camera at ``eye`` looking at ``target``."""
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(up, dtype=np.float64))
    if np.linalg.norm(right) < 1e-12:
        # looking straight along up; any perpendicular will do
        right = np.cross(forward, [0.0, 0.0, 1.0])
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    return R, -R @ eye


def project_points(points, camera: Camera):
    """Screen positions (N, 2), depths (N,) and Jacobians (N, 2, 3)."""
    X = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    R = camera.rotation
    Xc = X @ R.T + camera.translation
    cx, cy = camera.principal_point
    f = camera.focal
    depth = Xc[:, 2]
    if camera.kind == "orthographic":
        screen = f * Xc[:, :2] + (cx, cy)
        jac = np.broadcast_to(f * R[:2], (len(X), 2, 3)).copy()
        return screen, depth, jac
    bad = np.flatnonzero(~(depth > DEPTH_EPSILON))
    if bad.size:
        k = int(bad[0])
        raise ValueError(f"vertex {k} is at or behind the camera plane (depth {depth[k]:.3g})")
    inv_z = 1.0 / depth
    u = Xc[:, 0] * inv_z
    v = Xc[:, 1] * inv_z
    screen = np.stack([f * u + cx, f * v + cy], axis=1)
    dproj = np.zeros((len(X), 2, 3))
    dproj[:, 0, 0] = f * inv_z
    dproj[:, 0, 2] = -f * u * inv_z
    dproj[:, 1, 1] = f * inv_z
    dproj[:, 1, 2] = -f * v * inv_z
    return screen, depth, dproj @ R


def project(mesh: TriangleMesh, camera: Camera) -> tuple[ScreenMesh, np.ndarray]:
    """Project a mesh; returns the screen mesh and per-vertex 2x3 Jacobians.

    Outward counterclockwise faces come out with positive screen area when
    they face the camera (the y-down flip reverses apparent winding, so the
    face corners are reordered here).
    """
    screen, depth, jac = project_points(mesh.vertices, camera)
    faces = mesh.faces[:, [0, 2, 1]]
    return ScreenMesh(screen, faces, depth), jac


def backproject_gradients(screen_grads, jac) -> np.ndarray:
    """g3_k = J_k^T g2_k for each vertex."""
    g = np.asarray(getattr(screen_grads, "grad", screen_grads), dtype=np.float64)
    J = np.asarray(jac, dtype=np.float64)
    if g.shape != (len(J), 2) or J.shape[1:] != (2, 3):
        raise ValueError(f"gradient shape {g.shape} does not match Jacobians {J.shape}")
    return np.einsum("kij,ki->kj", J, g)


def make_turntable_cameras(n: int, radius: float, elevation: float = 0.0, look_at_point=(0.0, 0.0, 0.0),
                           template: Camera | None = None) -> list[Camera]:
    """``n`` cameras at azimuths ``k * 360 / n`` degrees around ``look_at_point``.

    Azimuth 0 sits on the +z side of the target; azimuth grows towards +x.
    """
    if n < 1:
        raise ValueError("need at least one camera")
    if not radius > 0:
        raise ValueError("radius must be positive")
    template = template or Camera()
    target = np.asarray(look_at_point, dtype=np.float64)
    el = math.radians(elevation)
    cams = []
    for k in range(n):
        az = math.radians(360.0 * k / n)
        eye = target + radius * np.array([math.sin(az) * math.cos(el), math.sin(el), math.cos(az) * math.cos(el)])
        R, t = look_at(eye, target)
        cams.append(replace(template, rotation=R, translation=t))
    return cams


def default_camera(image_size=(64, 64), radius: float = 3.0, extent: float = 1.0, fill: float = 0.8,
                   kind: str = "perspective") -> Camera:
    """Camera whose view spans ``extent`` world units over ``fill`` of the frame."""
    H, W = image_size
    pixels = fill * min(H, W)
    focal = pixels * radius / extent if kind == "perspective" else pixels / extent
    return Camera(kind=kind, focal=focal, principal_point=(W / 2.0, H / 2.0), image_size=(H, W))
