"""Scene builders and the canned fitting experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SceneConfig
from .forward import RenderSettings
from .geometry import TriangleMesh, load_obj
from .loss import MultiViewTargets, Objective, render_views
from .model import (PoseModel, RigidModel, RigidParams, Skeleton, arm_spec, body_spec_from_dict,
                    humanoid_spec, make_toy_body)
from .optim import FitResult, Scene, fit
from .projection import Camera, default_camera, make_turntable_cameras


def render_settings(cfg: SceneConfig) -> RenderSettings:
    r = cfg["render"]
    return RenderSettings(r["F"], r["p0"], r["p1"])


def build_cameras(cfg: SceneConfig) -> list[Camera]:
    cams = cfg["cameras"]
    H, W = cfg["render"]["H"], cfg["render"]["W"]
    if "list" in cams:
        return [Camera.from_dict(c) for c in cams["list"]]
    tt = cams["turntable"]
    template = default_camera((H, W), tt["radius"], cams["extent"], cams["fill"], cams["kind"])
    if cams["focal"] is not None:
        template = Camera(kind=template.kind, focal=float(cams["focal"]), principal_point=template.principal_point,
                          image_size=template.image_size)
    return make_turntable_cameras(tt["n"], tt["radius"], tt["elevation"], tt["look_at"], template)


def build_mesh(cfg: SceneConfig) -> tuple[TriangleMesh, Skeleton | None]:
    mesh = cfg["mesh"]
    if "obj" in mesh:
        return load_obj(cfg.resolve(mesh["obj"])), None
    if "triangle" in mesh:
        return TriangleMesh(np.asarray(mesh["triangle"], dtype=np.float64), [[0, 1, 2]]), None
    return make_toy_body(body_spec_from_dict(mesh["toy_body"]))


def bone_directions(template: TriangleMesh, skeleton: Skeleton) -> np.ndarray:
    """Principal axis of the vertices each joint dominates, one unit vector per joint."""
    owner = np.argmax(skeleton.weights, axis=1)
    dirs = np.zeros((skeleton.num_joints, 3))
    for j in range(skeleton.num_joints):
        pts = template.vertices[owner == j]
        if len(pts) < 2:
            dirs[j] = (1.0, 0.0, 0.0)
            continue
        _, _, vt = np.linalg.svd(pts - pts.mean(0), full_matrices=False)
        dirs[j] = vt[0]
    return dirs


def perturb_pose(template: TriangleMesh, skeleton: Skeleton, rng: np.random.Generator, joints: int = 3,
                 max_angle_deg: float = 30.0, swing_only: bool = True, min_angle_deg: float | None = None):
    """Zero pose with ``joints`` random non-root joints rotated by at most ``max_angle_deg``.

    With ``swing_only`` the rotation axis is perpendicular to the bone; twist
    of a near-round limb leaves almost no trace in a silhouette.
    Returns (pose vector, perturbed joint indices).
    """
    J = skeleton.num_joints
    candidates = np.arange(1, J) if J > 1 else np.arange(J)
    chosen = np.sort(rng.choice(candidates, size=min(joints, len(candidates)), replace=False))
    dirs = bone_directions(template, skeleton)
    lo = 0.5 * max_angle_deg if min_angle_deg is None else min_angle_deg
    params = np.zeros(3 * J + 3)
    for j in chosen:
        axis = rng.normal(size=3)
        if swing_only:
            axis -= axis.dot(dirs[j]) * dirs[j]
        axis /= np.linalg.norm(axis)
        params[3 * j:3 * j + 3] = axis * math.radians(rng.uniform(lo, max_angle_deg))
    return params, chosen


@dataclass
class PoseExperiment:
    scene: Scene
    model: PoseModel
    truth: np.ndarray
    init: np.ndarray
    perturbed: np.ndarray


def pose_experiment(body: str = "humanoid", resolution: int = 64, F: int = 4, seed: int = 0, joints: int = 3,
                    max_angle_deg: float = 30.0, views: int = 4, lam: float = 0.0,
                    min_angle_deg: float | None = None, threads: int = 1) -> PoseExperiment:
    """Self-generated multi-view targets of a toy body and a perturbed start pose."""
    spec = arm_spec() if body == "arm" else humanoid_spec()
    template, skeleton = make_toy_body(spec)
    model = PoseModel(template, skeleton)
    settings = RenderSettings(F)
    cams = make_turntable_cameras(views, 3.0, 0.0, (0.0, 0.0, 0.0), default_camera((resolution, resolution), 3.0))
    truth = model.identity()
    truth_mesh, _ = model(truth)
    targets = MultiViewTargets(render_views(truth_mesh, cams, resolution, resolution, settings), cams)
    rng = np.random.default_rng(seed)
    init, chosen = perturb_pose(template, skeleton, rng, joints, max_angle_deg, True, min_angle_deg)
    scene = Scene(model, targets, Objective(lam), settings, truth_vertices=truth_mesh.vertices, threads=threads)
    return PoseExperiment(scene, model, truth, init, chosen)


def run_pose_experiment(exp: PoseExperiment, iterations: int, alpha: float = 0.01) -> FitResult:
    return fit(exp.scene, exp.init, iterations, alpha=alpha)


def rigid_triangle_experiment(offset=(3.0, 4.0), size: int = 64, F: int = 4,
                              triangle=((10.0, 12.0, 0.0), (40.0, 18.0, 0.0), (22.0, 45.0, 0.0))):
    """One orthographic view of a triangle; only the in-plane translation is free.

    Returns (scene, init params, truth params).
    """
    tri = TriangleMesh(np.asarray(triangle, dtype=np.float64), [[0, 1, 2]])
    cam = Camera(kind="orthographic", focal=1.0, principal_point=(0.0, 0.0), image_size=(size, size))
    model = RigidModel(tri)
    settings = RenderSettings(F)
    targets = MultiViewTargets(render_views(tri, [cam], size, size, settings), [cam])
    free = np.zeros(7, dtype=bool)
    free[:2] = True
    scene = Scene(model, targets, Objective(0.0), settings, truth_vertices=tri.vertices, free=free)
    truth = RigidParams().to_vector()
    init = RigidParams(translation=[offset[0], offset[1], 0.0]).to_vector()
    return scene, init, truth
