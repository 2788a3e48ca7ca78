"""Optimizable geometry: a rigid transform and a skinned kinematic chain.

The chain takes a fixed template (rest shape) and a pose vector of per-joint
axis-angle rotations plus a root translation, like a body model with its
shape coefficients frozen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import TriangleMesh

SMALL_ANGLE = 1e-8


def skew(w) -> np.ndarray:
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


_BASIS_SKEW = np.stack([skew(e) for e in np.eye(3)])


def axis_angle_to_matrix(aa) -> tuple[np.ndarray, np.ndarray]:
    """Rodrigues rotation and its partials ``dR[i] = dR/d aa[i]``."""
    v = np.asarray(aa, dtype=np.float64).reshape(3)
    theta = float(np.linalg.norm(v))
    K = skew(v)
    if theta < SMALL_ANGLE:
        R = np.eye(3) + K + 0.5 * K @ K
        dR = _BASIS_SKEW + 0.5 * (np.einsum("iab,bc->iac", _BASIS_SKEW, K) + np.einsum("ab,ibc->iac", K, _BASIS_SKEW))
        return R, dR
    a = math.sin(theta) / theta
    b = 2.0 * math.sin(0.5 * theta) ** 2 / theta**2  # (1 - cos) / theta^2 without cancellation
    KK = K @ K
    R = np.eye(3) + a * K + b * KK
    # dR/dv_i = (v_i [v]x + [v x (I - R) e_i]x) R / |v|^2
    I_R = -(a * K + b * KK)
    dR = np.empty((3, 3, 3))
    for i in range(3):
        w = np.cross(v, I_R[:, i])
        dR[i] = (v[i] * K + skew(w)) @ R / theta**2
    return R, dR


@dataclass
class RigidParams:
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: float = 1.0

    def __post_init__(self):
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3)
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.translation, self.rotation, [self.scale]])

    @classmethod
    def from_vector(cls, p) -> "RigidParams":
        p = np.asarray(p, dtype=np.float64)
        return cls(p[:3], p[3:6], float(p[6]))


RIGID_NAMES = ("tx", "ty", "tz", "rx", "ry", "rz", "scale")


def apply_rigid(template: TriangleMesh, params: RigidParams) -> tuple[TriangleMesh, np.ndarray]:
    """``v -> scale * R v + t`` and its Jacobian, shape (N_v, 3, 7)."""
    V = template.vertices
    R, dR = axis_angle_to_matrix(params.rotation)
    rotated = V @ R.T
    out = params.scale * rotated + params.translation
    jac = np.zeros((len(V), 3, 7))
    jac[:, :, 0:3] = np.eye(3)
    jac[:, :, 3:6] = params.scale * np.einsum("iab,nb->nai", dR, V)
    jac[:, :, 6] = rotated
    return template.with_vertices(out), jac


@dataclass
class Skeleton:
    """Rest-pose joints, parent links (root parent -1) and skinning weights.

    ``weights`` is dense, shape (N_v, J), at most 4 non-zeros per row.
    """

    joints: np.ndarray
    parents: np.ndarray
    weights: np.ndarray
    names: list[str] | None = None

    def __post_init__(self):
        self.joints = np.asarray(self.joints, dtype=np.float64).reshape(-1, 3)
        self.parents = np.asarray(self.parents, dtype=np.int64).reshape(-1)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        J = len(self.joints)
        if len(self.parents) != J or J == 0:
            raise ValueError("one parent index per joint required")
        if self.parents[0] != -1:
            raise ValueError("joint 0 must be the root (parent -1)")
        for j in range(1, J):
            if not 0 <= self.parents[j] < j:
                raise ValueError(f"joint {j}: parent must be an earlier joint, got {self.parents[j]}")
        if self.weights.ndim != 2 or self.weights.shape[1] != J:
            raise ValueError(f"weights must have shape (N_v, {J})")
        if (self.weights < 0).any() or np.max(np.abs(self.weights.sum(1) - 1.0)) > 1e-6:
            raise ValueError("skinning weights must be non-negative and sum to 1 per vertex")
        if ((self.weights > 0).sum(1) > 4).any():
            raise ValueError("at most 4 influencing joints per vertex")

    @property
    def num_joints(self) -> int:
        return len(self.joints)


@dataclass
class PoseParams:
    theta: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1, 3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)

    @classmethod
    def zeros(cls, num_joints: int) -> "PoseParams":
        return cls(np.zeros((num_joints, 3)))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.theta.reshape(-1), self.translation])

    @classmethod
    def from_vector(cls, p, num_joints: int) -> "PoseParams":
        p = np.asarray(p, dtype=np.float64)
        return cls(p[: 3 * num_joints].reshape(num_joints, 3), p[3 * num_joints:3 * num_joints + 3])


def joint_transforms(skeleton: Skeleton, pose: PoseParams):
    """World transforms ``x -> A_j x + b_j`` per joint and their pose partials.

    Returns A (J,3,3), b (J,3), dA (J,P,3,3), db (J,P,3) with P = 3J + 3.
    """
    J = skeleton.num_joints
    P = 3 * J + 3
    A = np.empty((J, 3, 3))
    b = np.empty((J, 3))
    dA = np.zeros((J, P, 3, 3))
    db = np.zeros((J, P, 3))
    for j in range(J):
        R, dR = axis_angle_to_matrix(pose.theta[j])
        c = skeleton.joints[j]
        offset = c - R @ c
        doffset = -dR @ c                  # (3, 3): d offset / d theta_j
        p = skeleton.parents[j]
        cols = slice(3 * j, 3 * j + 3)
        if p < 0:
            A[j] = R
            b[j] = offset + pose.translation
            dA[j, cols] = dR
            db[j, cols] = doffset
            db[j, 3 * J:] = np.eye(3)
            continue
        A[j] = A[p] @ R
        b[j] = A[p] @ offset + b[p]
        dA[j] = dA[p] @ R
        dA[j, cols] += A[p] @ dR
        db[j] = dA[p] @ offset + db[p]
        db[j, cols] += doffset @ A[p].T
    return A, b, dA, db


def pose_mesh(template: TriangleMesh, skeleton: Skeleton, pose: PoseParams) -> tuple[TriangleMesh, np.ndarray]:
    """Linear blend skinning of ``template``; Jacobian shape (N_v, 3, 3J + 3)."""
    if skeleton.weights.shape[0] != template.num_vertices:
        raise ValueError("skinning weights do not match the template vertex count")
    if pose.theta.shape != (skeleton.num_joints, 3):
        raise ValueError(f"pose needs {skeleton.num_joints} joint rotations")
    A, b, dA, db = joint_transforms(skeleton, pose)
    V = template.vertices
    Wt = skeleton.weights
    per_joint = np.einsum("jab,nb->jna", A, V) + b[:, None, :]
    out = np.einsum("nj,jna->na", Wt, per_joint)
    dper = np.einsum("jpab,nb->jnap", dA, V) + db.transpose(0, 2, 1)[:, None, :, :]
    jac = np.einsum("nj,jnap->nap", Wt, dper)
    return template.with_vertices(out), jac


# ---------------------------------------------------------------------------
# toy body generator

@dataclass(frozen=True)
class Limb:
    name: str
    parent: int           # index into the limb list, -1 for the root
    joint: tuple          # rest position of the joint driving this limb
    start: tuple          # capsule axis start
    end: tuple            # capsule axis end
    radii: tuple          # cross-section semi-axes (across, depth)


@dataclass(frozen=True)
class BodySpec:
    limbs: tuple
    segments: int = 10
    cap_rings: int = 3
    mid_rings: int = 2
    blend: float = 0.0    # >0: blend weights with the parent near the limb start


def arm_spec(segments: int = 10) -> BodySpec:
    """Two-joint arm: upper arm on the shoulder (root), forearm on the elbow."""
    return BodySpec((
        Limb("upper_arm", -1, (-0.4, 0.0, 0.0), (-0.4, 0.0, 0.0), (0.0, 0.0, 0.0), (0.07, 0.05)),
        Limb("forearm", 0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.4, 0.0, 0.0), (0.06, 0.04)),
    ), segments=segments)


def humanoid_spec(segments: int = 10) -> BodySpec:
    """Twelve-joint T-pose figure about one unit tall, centred at the origin."""
    L = (
        Limb("pelvis", -1, (0.0, 0.0, 0.0), (-0.07, 0.0, 0.0), (0.07, 0.0, 0.0), (0.06, 0.05)),
        Limb("spine", 0, (0.0, 0.05, 0.0), (0.0, 0.05, 0.0), (0.0, 0.17, 0.0), (0.09, 0.06)),
        Limb("chest", 1, (0.0, 0.18, 0.0), (0.0, 0.19, 0.0), (0.0, 0.29, 0.0), (0.1, 0.065)),
        Limb("head", 2, (0.0, 0.32, 0.0), (0.0, 0.37, 0.0), (0.0, 0.43, 0.0), (0.055, 0.065)),
        Limb("l_upper_arm", 2, (0.12, 0.28, 0.0), (0.13, 0.28, 0.0), (0.27, 0.28, 0.0), (0.04, 0.03)),
        Limb("l_forearm", 4, (0.28, 0.28, 0.0), (0.29, 0.28, 0.0), (0.43, 0.28, 0.0), (0.033, 0.025)),
        Limb("r_upper_arm", 2, (-0.12, 0.28, 0.0), (-0.13, 0.28, 0.0), (-0.27, 0.28, 0.0), (0.04, 0.03)),
        Limb("r_forearm", 6, (-0.28, 0.28, 0.0), (-0.29, 0.28, 0.0), (-0.43, 0.28, 0.0), (0.033, 0.025)),
        Limb("l_thigh", 0, (0.07, -0.03, 0.0), (0.075, -0.05, 0.0), (0.075, -0.23, 0.0), (0.05, 0.045)),
        Limb("l_shin", 8, (0.075, -0.25, 0.0), (0.075, -0.27, 0.0), (0.075, -0.45, 0.0), (0.04, 0.035)),
        Limb("r_thigh", 0, (-0.07, -0.03, 0.0), (-0.075, -0.05, 0.0), (-0.075, -0.23, 0.0), (0.05, 0.045)),
        Limb("r_shin", 10, (-0.075, -0.25, 0.0), (-0.075, -0.27, 0.0), (-0.075, -0.45, 0.0), (0.04, 0.035)),
    )
    return BodySpec(L, segments=segments)


def _frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(ref, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return e1, e2


def capsule(start, end, radii, segments: int = 10, cap_rings: int = 3, mid_rings: int = 2):
    """Closed elliptic capsule around the segment start-end.

    Returns vertices, outward counterclockwise faces and the axial
    coordinate of each vertex (0 at ``start``).
    """
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    axis = end - start
    length = float(np.linalg.norm(axis))
    if length <= 0 or min(radii) <= 0 or segments < 3 or cap_rings < 1 or mid_rings < 0:
        raise ValueError("capsule needs positive length, radii and enough segments")
    axis /= length
    e1, e2 = _frame(axis)
    r1, r2 = radii
    cap = 0.5 * (r1 + r2)
    rings = []  # (axial position, radial factor)
    for k in range(1, cap_rings + 1):
        phi = 0.5 * math.pi * k / cap_rings
        rings.append((-cap * math.cos(phi), math.sin(phi)))
    for k in range(1, mid_rings + 1):
        rings.append((length * k / (mid_rings + 1), 1.0))
    for k in range(cap_rings, 0, -1):
        phi = 0.5 * math.pi * k / cap_rings
        rings.append((length + cap * math.cos(phi), math.sin(phi)))
    psi = 2.0 * math.pi * np.arange(segments) / segments
    ring_dir = np.outer(r1 * np.cos(psi), e1) + np.outer(r2 * np.sin(psi), e2)
    verts = [start - cap * axis]
    axial = [-cap]
    for s, rho in rings:
        verts.extend(start + s * axis + rho * ring_dir)
        axial.extend([s] * segments)
    verts.append(end + cap * axis)
    axial.append(length + cap)
    verts = np.array(verts)
    n_r = len(rings)
    top = len(verts) - 1
    faces = []
    for q in range(segments):
        q1 = (q + 1) % segments
        faces.append((0, 1 + q1, 1 + q))
        for r in range(n_r - 1):
            a = 1 + r * segments + q
            b = 1 + r * segments + q1
            c = 1 + (r + 1) * segments + q1
            d = 1 + (r + 1) * segments + q
            faces.append((a, b, c))
            faces.append((a, c, d))
        last = 1 + (n_r - 1) * segments
        faces.append((top, last + q, last + q1))
    faces = np.array(faces, dtype=np.int64)
    if signed_volume(verts, faces) < 0:
        faces = faces[:, [0, 2, 1]]
    return verts, faces, np.array(axial)


def signed_volume(vertices, faces) -> float:
    t = np.asarray(vertices)[np.asarray(faces)]
    return float(np.einsum("ij,ij->i", t[:, 0], np.cross(t[:, 1], t[:, 2])).sum() / 6.0)


def make_toy_body(spec: BodySpec) -> tuple[TriangleMesh, Skeleton]:
    """Capsule-per-limb mesh with one joint per limb.

    Weights are one-hot on the limb's joint unless ``spec.blend`` > 0, in
    which case vertices within ``blend`` of the limb start are mixed
    linearly with the parent joint.
    """
    if not spec.limbs:
        raise ValueError("body spec has no limbs")
    J = len(spec.limbs)
    all_v, all_f, all_w = [], [], []
    offset = 0
    for j, limb in enumerate(spec.limbs):
        if limb.parent >= j or (j == 0) != (limb.parent == -1):
            raise ValueError(f"limb {limb.name!r}: parent must be an earlier limb (root first)")
        v, f, axial = capsule(limb.start, limb.end, limb.radii, spec.segments, spec.cap_rings, spec.mid_rings)
        w = np.zeros((len(v), J))
        w[:, j] = 1.0
        if spec.blend > 0 and limb.parent >= 0:
            mix = 0.5 * np.clip(1.0 - axial / spec.blend, 0.0, 1.0)
            w[:, j] -= mix
            w[:, limb.parent] += mix
        all_v.append(v)
        all_f.append(f + offset)
        all_w.append(w)
        offset += len(v)
    mesh = TriangleMesh(np.concatenate(all_v), np.concatenate(all_f))
    skeleton = Skeleton(np.array([limb.joint for limb in spec.limbs]), [limb.parent for limb in spec.limbs],
                        np.concatenate(all_w), [limb.name for limb in spec.limbs])
    return mesh, skeleton


def body_spec_from_dict(d: dict) -> BodySpec:
    """Build a spec from a config entry: a preset name or explicit limbs."""
    preset = d.get("preset")
    segments = int(d.get("segments", 10))
    if preset == "arm":
        base = arm_spec(segments)
    elif preset == "humanoid":
        base = humanoid_spec(segments)
    elif preset is None:
        limbs = tuple(Limb(l["name"], int(l["parent"]), tuple(l["joint"]), tuple(l["start"]), tuple(l["end"]),
                           tuple(l["radii"])) for l in d["limbs"])
        base = BodySpec(limbs, segments=segments)
    else:
        raise ValueError(f"unknown body preset {preset!r}")
    return BodySpec(base.limbs, segments=segments, cap_rings=int(d.get("cap_rings", base.cap_rings)),
                    mid_rings=int(d.get("mid_rings", base.mid_rings)), blend=float(d.get("blend", 0.0)))


class RigidModel:
    """Rigid transform of a template as a function of a 7-vector."""

    def __init__(self, template: TriangleMesh):
        self.template = template
        self.num_params = 7
        self.param_names = RIGID_NAMES

    def __call__(self, params):
        return apply_rigid(self.template, RigidParams.from_vector(params))

    def identity(self) -> np.ndarray:
        return RigidParams().to_vector()


class PoseModel:
    """Skinned template as a function of the flattened pose vector."""

    def __init__(self, template: TriangleMesh, skeleton: Skeleton):
        self.template = template
        self.skeleton = skeleton
        J = skeleton.num_joints
        self.num_params = 3 * J + 3
        names = skeleton.names or [f"j{j}" for j in range(J)]
        self.param_names = tuple(f"{n}_{a}" for n in names for a in "xyz") + ("root_tx", "root_ty", "root_tz")

    def __call__(self, params):
        return pose_mesh(self.template, self.skeleton, PoseParams.from_vector(params, self.skeleton.num_joints))

    def identity(self) -> np.ndarray:
        return np.zeros(self.num_params)
