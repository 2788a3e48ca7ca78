import math

import numpy as np
import pytest

from silrender.geometry import TriangleMesh, connected_components, euler_characteristic
from silrender.gradcheck import blended_test_body
from silrender.model import (BodySpec, Limb, PoseModel, PoseParams, RigidModel, RigidParams, Skeleton,
                             apply_rigid, arm_spec, axis_angle_to_matrix, body_spec_from_dict, capsule,
                             humanoid_spec, joint_transforms, make_toy_body, pose_mesh, signed_volume)
from silrender.oracle import relative_error


def fd_jacobian(f, p, h=1e-6):
    return np.stack([(f(p + h * e) - f(p - h * e)) / (2 * h) for e in np.eye(len(p))], axis=-1)


def test_rodrigues_examples():
    R, dR = axis_angle_to_matrix(np.zeros(3))
    np.testing.assert_array_equal(R, np.eye(3))
    R, _ = axis_angle_to_matrix([0, 0, math.pi / 2])
    np.testing.assert_allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)


def test_rodrigues_derivative_matches_fd(rng):
    samples = [rng.normal(size=3) * rng.uniform(0.05, 3.0) for _ in range(100)]
    samples += [np.zeros(3), np.full(3, 1e-9), np.array([1e-7, 0, 0]), np.array([math.pi, 0, 0])]
    for aa in samples:
        _, dR = axis_angle_to_matrix(aa)
        fd = fd_jacobian(lambda q: axis_angle_to_matrix(q)[0], aa)
        assert relative_error(np.moveaxis(dR, 0, -1), fd) < 1e-6


def test_rodrigues_is_rotation(rng):
    for _ in range(20):
        R, _ = axis_angle_to_matrix(rng.normal(size=3) * 2)
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0)


def test_small_angle_branch_is_continuous():
    axis = np.array([0.6, 0.8, 0.0])
    a = axis_angle_to_matrix(axis * 1e-8 * (1 - 1e-6))
    b = axis_angle_to_matrix(axis * 1e-8 * (1 + 1e-6))
    np.testing.assert_allclose(a[0], b[0], atol=1e-13)
    np.testing.assert_allclose(a[1], b[1], atol=1e-12)


def test_rigid_examples(rng):
    tpl = TriangleMesh(rng.normal(size=(5, 3)), [[0, 1, 2], [2, 3, 4]])
    m, _ = apply_rigid(tpl, RigidParams())
    np.testing.assert_array_equal(m.vertices, tpl.vertices)
    m, jac = apply_rigid(tpl, RigidParams(scale=2.0))
    np.testing.assert_allclose(m.vertices, 2 * tpl.vertices)
    np.testing.assert_allclose(jac[:, :, 6], tpl.vertices)
    with pytest.raises(ValueError):
        RigidParams(scale=0.0)


def test_rigid_jacobian_matches_fd(rng):
    tpl = TriangleMesh(rng.normal(size=(20, 3)), [[0, 1, 2]])
    p = np.r_[rng.normal(size=3), rng.normal(size=3) * 0.7, 1.3]
    _, jac = apply_rigid(tpl, RigidParams.from_vector(p))
    fd = fd_jacobian(lambda q: apply_rigid(tpl, RigidParams.from_vector(q))[0].vertices, p)
    assert relative_error(jac, fd) < 1e-6


def test_rigid_model_interface():
    tpl = TriangleMesh(np.eye(3), [[0, 1, 2]])
    model = RigidModel(tpl)
    assert model.num_params == 7 and len(model.param_names) == 7
    m, jac = model(model.identity())
    assert jac.shape == (3, 3, 7)


def test_zero_pose_is_identity():
    tpl, sk = make_toy_body(arm_spec())
    m, jac = pose_mesh(tpl, sk, PoseParams.zeros(sk.num_joints))
    np.testing.assert_array_equal(m.vertices, tpl.vertices)
    np.testing.assert_array_equal(jac[:, :, -3:], np.broadcast_to(np.eye(3), (tpl.num_vertices, 3, 3)))


def test_elbow_quarter_turn():
    tpl, sk = make_toy_body(arm_spec())
    theta = np.zeros((2, 3))
    theta[1] = [0, 0, math.pi / 2]
    m, _ = pose_mesh(tpl, sk, PoseParams(theta))
    fore = sk.weights[:, 1] == 1
    elbow = sk.joints[1]
    R = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], float)
    np.testing.assert_allclose(m.vertices[fore], (tpl.vertices[fore] - elbow) @ R.T + elbow, atol=1e-12)
    np.testing.assert_array_equal(m.vertices[~fore], tpl.vertices[~fore])


def test_one_hot_lbs_is_rigid_per_limb(rng):
    tpl, sk = make_toy_body(humanoid_spec(6))
    pose = PoseParams(rng.normal(size=(sk.num_joints, 3)) * 0.5, rng.normal(size=3))
    m, _ = pose_mesh(tpl, sk, pose)
    A, b, _, _ = joint_transforms(sk, pose)
    for j in range(sk.num_joints):
        sel = sk.weights[:, j] == 1
        np.testing.assert_allclose(m.vertices[sel], tpl.vertices[sel] @ A[j].T + b[j], atol=1e-12)


@pytest.mark.parametrize("body", ["arm", "blended"])
def test_pose_jacobian_matches_fd(body, rng):
    tpl, sk = make_toy_body(arm_spec(3)) if body == "arm" else blended_test_body(6)
    J = sk.num_joints
    p = np.r_[rng.normal(size=3 * J) * 0.6, rng.normal(size=3)]
    _, jac = pose_mesh(tpl, sk, PoseParams.from_vector(p, J))
    fd = fd_jacobian(lambda q: pose_mesh(tpl, sk, PoseParams.from_vector(q, J))[0].vertices, p)
    assert relative_error(jac, fd) < 1e-5
    assert tpl.num_vertices == (50 if body == "blended" else tpl.num_vertices)


def test_skeleton_validation():
    w = np.ones((3, 1))
    Skeleton([[0, 0, 0]], [-1], w)
    with pytest.raises(ValueError):
        Skeleton([[0, 0, 0]], [0], w)
    with pytest.raises(ValueError):
        Skeleton([[0, 0, 0], [1, 0, 0]], [-1, 1], np.c_[w, 0 * w])
    with pytest.raises(ValueError):
        Skeleton([[0, 0, 0]], [-1], 0.5 * w)
    with pytest.raises(ValueError):
        Skeleton([[0, 0, 0]] * 5, [-1, 0, 1, 2, 3], np.full((3, 5), 0.2))


def test_arm_body():
    tpl, sk = make_toy_body(arm_spec())
    assert sk.num_joints == 2 and list(sk.parents) == [-1, 0]
    assert set(np.unique(sk.weights)) == {0.0, 1.0}


def test_humanoid_body():
    tpl, sk = make_toy_body(humanoid_spec())
    assert sk.num_joints == 12
    assert 400 <= tpl.num_vertices <= 2000
    labels = connected_components(tpl.faces, tpl.num_vertices)
    for c in np.unique(labels):
        keep = np.flatnonzero(np.isin(tpl.faces, np.flatnonzero(labels == c)).all(1))
        sub = TriangleMesh(tpl.vertices, tpl.faces[keep])
        used = np.unique(sub.faces)
        assert len(used) - len({tuple(sorted(e)) for f in sub.faces.tolist()
                                for e in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0]))}) + len(keep) == 2
        assert signed_volume(tpl.vertices, sub.faces) > 0
    again, _ = make_toy_body(humanoid_spec())
    np.testing.assert_array_equal(again.vertices, tpl.vertices)
    np.testing.assert_array_equal(again.faces, tpl.faces)


def test_capsule_closed_and_outward():
    v, f, axial = capsule((0, 0, 0), (0, 0, 1), (0.2, 0.1), 8)
    mesh = TriangleMesh(v, f)
    assert euler_characteristic(mesh) == 2
    assert signed_volume(v, f) > 0
    with pytest.raises(ValueError):
        capsule((0, 0, 0), (0, 0, 1), (0.0, 0.1))
    with pytest.raises(ValueError):
        capsule((0, 0, 0), (0, 0, 0), (0.1, 0.1))


def test_blend_weights():
    tpl, sk = make_toy_body(BodySpec(arm_spec().limbs, blend=0.1))
    assert np.allclose(sk.weights.sum(1), 1.0)
    assert ((sk.weights > 0) & (sk.weights < 1)).any()


def test_spec_from_dict():
    assert len(body_spec_from_dict({"preset": "arm"}).limbs) == 2
    spec = body_spec_from_dict({"limbs": [{"name": "a", "parent": -1, "joint": [0, 0, 0], "start": [0, 0, 0],
                                           "end": [1, 0, 0], "radii": [0.1, 0.1]}], "segments": 5})
    assert spec.segments == 5
    with pytest.raises(ValueError):
        body_spec_from_dict({"preset": "octopus"})
    with pytest.raises(ValueError):
        make_toy_body(BodySpec((Limb("a", 0, (0, 0, 0), (0, 0, 0), (1, 0, 0), (0.1, 0.1)),)))


def test_pose_model_names():
    tpl, sk = make_toy_body(arm_spec())
    model = PoseModel(tpl, sk)
    assert model.num_params == 9
    assert model.param_names[:3] == ("upper_arm_x", "upper_arm_y", "upper_arm_z")
    assert model.param_names[-1] == "root_tz"
