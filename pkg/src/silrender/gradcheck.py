"""Analytic-versus-finite-difference checks for every differentiable stage."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backward import backward, edge_pixel_partials
from .clip import liang_barsky_clip
from .geometry import Rect, ScreenMesh, TriangleMesh, signed_area
from .model import (PoseParams, RigidParams, Skeleton, apply_rigid, arm_spec, axis_angle_to_matrix,
                    make_toy_body, pose_mesh)
from .oracle import exact_image, exact_pixel_coverage, finite_difference, relative_error
from .projection import Camera, look_at, project_points


@dataclass
class CheckResult:
    name: str
    max_error: float
    tolerance: float
    cases: int

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<28s} max err {self.max_error:.3e}  (tol {self.tolerance:.0e}, {self.cases} cases)"


def partial_error(analytic, fd, floor: float = 1e-3) -> float:
    """|a - fd| / max(|fd|, floor): relative error, absolute near zero."""
    a = np.asarray(analytic, dtype=np.float64)
    f = np.asarray(fd, dtype=np.float64)
    return float(np.max(np.abs(a - f) / np.maximum(np.abs(f), floor)))


def _clipped_length(a, b, rect) -> float:
    seg = liang_barsky_clip((a, b), rect)
    if seg is None:
        return 0.0
    return float(np.hypot(seg.b[0] - seg.a[0], seg.b[1] - seg.a[1]))


def _near_boundary(points, rect, margin) -> bool:
    p = np.asarray(points)
    return bool(np.any(np.abs(p[:, 0, None] - np.array([rect.x_min, rect.x_max])) < margin)
                or np.any(np.abs(p[:, 1, None] - np.array([rect.y_min, rect.y_max])) < margin))


def random_edge_config(rng: np.random.Generator, min_length: float = 1e-3):
    """Edge crossing a pixel with both endpoints outside it, plus a far third
    vertex on the foreground side whose edges stay clear of the pixel."""
    while True:
        i, j = rng.integers(0, 4, size=2)
        pixel = Rect.pixel(int(i), int(j))
        centre = np.array([j, i]) + rng.uniform(0.0, 1.0, 2)
        ang = rng.uniform(0.0, 2.0 * np.pi)
        d = np.array([np.cos(ang), np.sin(ang)])
        a = centre - rng.uniform(0.8, 3.0) * d
        b = centre + rng.uniform(0.8, 3.0) * d
        inside = lambda p: pixel.x_min <= p[0] <= pixel.x_max and pixel.y_min <= p[1] <= pixel.y_max
        if inside(a) or inside(b) or _clipped_length(a, b, pixel) <= min_length:
            continue
        if _near_boundary([a, b], pixel, 1e-4):
            continue
        n_fg = -np.array([b[1] - a[1], a[0] - b[0]])
        n_fg /= np.linalg.norm(n_fg)
        c = 0.5 * (a + b) + rng.uniform(5.0, 20.0) * n_fg + rng.uniform(-3.0, 3.0) * d
        grown = Rect(pixel.x_min - 0.01, pixel.y_min - 0.01, pixel.x_max + 0.01, pixel.y_max + 0.01)
        if liang_barsky_clip((b, c), grown) or liang_barsky_clip((c, a), grown):
            continue
        return a, b, c, pixel


def check_edge_partials(n: int = 1000, seed: int = 0, h: float = 1e-5, tol: float = 1e-6) -> CheckResult:
    """Each closed-form edge partial against central differences of exact coverage."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        a, b, c, pixel = random_edge_config(rng)
        analytic = edge_pixel_partials(a, b, pixel)
        tri = np.array([a, b, c])
        fd = []
        for vert, coord in ((0, 0), (0, 1), (1, 0), (1, 1)):
            up = tri.copy()
            dn = tri.copy()
            up[vert, coord] += h
            dn[vert, coord] -= h
            fd.append((exact_pixel_coverage(up, pixel) - exact_pixel_coverage(dn, pixel)) / (2 * h))
        worst = max(worst, partial_error(analytic, fd))
    return CheckResult("edge partials (isolated)", worst, tol, n)


def triangle_pixel_gradient(tri, pixel, p0: float = 0.0, p1: float = 1.0) -> np.ndarray:
    """dI/d(vertex) for one triangle and one pixel from summed edge partials."""
    tri = np.asarray(tri, dtype=np.float64)
    order = [0, 1, 2]
    area2 = (tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1]) - (tri[1, 1] - tri[0, 1]) * (tri[2, 0] - tri[0, 0])
    if area2 < 0:
        order = [0, 2, 1]
    g = np.zeros((3, 2))
    for k in range(3):
        u, v = order[k], order[(k + 1) % 3]
        d = edge_pixel_partials(tri[u], tri[v], pixel, p0, p1)
        g[u] += (d.d_x0, d.d_y0)
        g[v] += (d.d_x1, d.d_y1)
    return g


def check_vertex_partials(n: int = 1000, seed: int = 1, h: float = 1e-5, tol: float = 1e-6) -> CheckResult:
    """Triangles with corners inside or around a pixel: summed edge partials per vertex."""
    rng = np.random.default_rng(seed)
    pixel = Rect(0.0, 0.0, 1.0, 1.0)
    worst = 0.0
    done = 0
    while done < n:
        tri = rng.uniform(-0.6, 1.6, (3, 2))
        if abs(2.0 * signed_area(*tri)) < 0.05 or _near_boundary(tri, pixel, 1e-4):
            continue
        lengths = [_clipped_length(tri[k], tri[(k + 1) % 3], pixel) for k in range(3)]
        if max(lengths) == 0.0 or any(0.0 < x <= 1e-3 for x in lengths):
            continue
        analytic = triangle_pixel_gradient(tri, pixel)
        fd = finite_difference(lambda p: exact_pixel_coverage(p.reshape(3, 2), pixel), tri.reshape(-1), h)
        worst = max(worst, partial_error(analytic.reshape(-1), fd))
        done += 1
    return CheckResult("vertex partials (triangles)", worst, tol, n)


def check_triangle_loss(n: int = 100, seed: int = 2, size: int = 12, h: float = 1e-5, tol: float = 1e-5) -> CheckResult:
    """L = sum I^2 of one random triangle: backward pass against FD of the exact loss."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        while True:
            v = rng.uniform(1.0, size - 1.0, (3, 2))
            if abs(2.0 * signed_area(*v)) > 2.0:
                break
        img = exact_image(v, size, size)
        g = backward(img, 2.0 * img.data, ScreenMesh(v, [[0, 1, 2]])).grad
        fd = finite_difference(lambda p: float(np.sum(exact_image(p.reshape(3, 2), size, size).data ** 2)),
                               v.reshape(-1), h)
        worst = max(worst, relative_error(g.reshape(-1), fd))
    return CheckResult("triangle loss end-to-end", worst, tol, n)


def check_projection(n: int = 100, seed: int = 3, h: float = 1e-5, tol: float = 1e-5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    R, t = look_at([1.0, 0.5, 3.0], [0.0, 0.0, 0.0])
    for kind in ("perspective", "orthographic"):
        cam = Camera(kind=kind, rotation=R, translation=t, focal=120.0 if kind == "perspective" else 30.0,
                     principal_point=(32.0, 32.0))
        pts = rng.uniform(-1.0, 1.0, (n, 3))
        _, _, jac = project_points(pts, cam)
        for k in range(n):
            fd = np.empty((2, 3))
            for c in range(3):
                up = pts[k].copy()
                dn = pts[k].copy()
                up[c] += h
                dn[c] -= h
                fd[:, c] = (project_points(up, cam)[0][0] - project_points(dn, cam)[0][0]) / (2 * h)
            worst = max(worst, relative_error(jac[k], fd))
    return CheckResult("projection Jacobian", worst, tol, 2 * n)


def check_rodrigues(n: int = 100, seed: int = 4, h: float = 1e-6, tol: float = 1e-6) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    samples = [rng.normal(size=3) * rng.uniform(0.05, 3.0) for _ in range(n)] + [np.zeros(3), np.full(3, 1e-9)]
    for aa in samples:
        _, dR = axis_angle_to_matrix(aa)
        fd = np.stack([(axis_angle_to_matrix(aa + h * e)[0] - axis_angle_to_matrix(aa - h * e)[0]) / (2 * h)
                       for e in np.eye(3)])
        worst = max(worst, relative_error(dR, fd))
    return CheckResult("axis-angle derivative", worst, tol, len(samples))


def check_rigid_jacobian(seed: int = 5, h: float = 1e-6, tol: float = 1e-6) -> CheckResult:
    rng = np.random.default_rng(seed)
    template = TriangleMesh(rng.normal(size=(20, 3)), [[0, 1, 2]])
    p = np.concatenate([rng.normal(size=3), rng.normal(size=3) * 0.7, [1.3]])
    _, jac = apply_rigid(template, RigidParams.from_vector(p))
    fd = np.stack([(apply_rigid(template, RigidParams.from_vector(p + h * e))[0].vertices
                    - apply_rigid(template, RigidParams.from_vector(p - h * e))[0].vertices) / (2 * h)
                   for e in np.eye(7)], axis=-1)
    return CheckResult("rigid Jacobian", relative_error(jac, fd), tol, 1)


def blended_test_body(seed: int = 6, n_vertices: int = 50, n_joints: int = 4):
    """Random chain with smooth (up to 4-way) skinning weights."""
    rng = np.random.default_rng(seed)
    joints = np.cumsum(rng.normal(size=(n_joints, 3)) * 0.3, axis=0)
    parents = [-1] + list(range(n_joints - 1))
    w = rng.uniform(0.0, 1.0, (n_vertices, n_joints))
    w[:, 4:] = 0.0
    w /= w.sum(1, keepdims=True)
    verts = joints[rng.integers(0, n_joints, n_vertices)] + rng.normal(size=(n_vertices, 3)) * 0.2
    return TriangleMesh(verts, [[0, 1, 2]]), Skeleton(joints, parents, w)


def check_pose_jacobian(seed: int = 7, h: float = 1e-6, tol: float = 1e-5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    bodies = [make_toy_body(arm_spec(segments=3)), blended_test_body(seed)]
    for template, skeleton in bodies:
        J = skeleton.num_joints
        p = np.concatenate([rng.normal(size=3 * J) * 0.6, rng.normal(size=3)])
        f = lambda q: pose_mesh(template, skeleton, PoseParams.from_vector(q, J))[0].vertices
        _, jac = pose_mesh(template, skeleton, PoseParams.from_vector(p, J))
        fd = np.stack([(f(p + h * e) - f(p - h * e)) / (2 * h) for e in np.eye(len(p))], axis=-1)
        worst = max(worst, relative_error(jac, fd))
    return CheckResult("pose (LBS) Jacobian", worst, tol, len(bodies))


def run_all(seed: int = 0, scale: float = 1.0) -> list[CheckResult]:
    """The shipped suite; ``scale`` shrinks the random-case counts."""
    n = lambda k: max(1, int(round(k * scale)))
    return [
        check_edge_partials(n(1000), seed),
        check_vertex_partials(n(1000), seed + 1),
        check_triangle_loss(n(100), seed + 2),
        check_projection(n(100), seed + 3),
        check_rodrigues(n(100), seed + 4),
        check_rigid_jacobian(seed + 5),
        check_pose_jacobian(seed + 7),
    ]
