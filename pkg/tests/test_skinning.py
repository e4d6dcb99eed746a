import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from autorig.distance import compute_edm
from autorig.errors import BoneSetMismatchError, SingularSystemError
from autorig.fixtures import make_capsule, make_two_blobs
from autorig.skeleton import Joint, Skeleton
from autorig.skinning import (
    Pose,
    assemble_heat_system,
    compute_heat_weights,
    identity_pose,
    lbs_deform,
    load_weights,
    quat_to_matrix,
    rigid_binding,
    save_weights,
)
from autorig.voxel import voxelize


def skeleton_from_points(points):
    pts = [np.asarray(p, dtype=np.float64) for p in points]
    joints = [Joint("root", None, pts[0])]
    joints += [Joint(f"j{i}", i - 1, p) for i, p in enumerate(pts[1:], start=1)]
    return Skeleton(joints=joints)


def axis_quat(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])


@pytest.fixture(scope="module")
def capsule_rig():
    mesh = make_capsule(length=2.0, radius=0.4)
    grid = voxelize(mesh, 32)
    field = compute_edm(grid)
    return mesh, field


@pytest.fixture(scope="module")
def barbell_rig(barbell_mesh):
    grid = voxelize(barbell_mesh, 48)
    field = compute_edm(grid)
    skel = skeleton_from_points([(0, 0, 0), (-0.8, 0, 0), (0.8, 0, 0)])
    # re-root: both bones hang off the center joint
    skel = Skeleton(joints=[
        Joint("root", None, np.array([0.0, 0.0, 0.0])),
        Joint("left", 0, np.array([-0.8, 0.0, 0.0])),
        Joint("right", 0, np.array([0.8, 0.0, 0.0])),
    ])
    return barbell_mesh, field, skel


def test_single_bone_saturates(capsule_rig):
    mesh, field = capsule_rig
    skel = skeleton_from_points([(-0.9, 0, 0), (0.9, 0, 0)])
    binding = compute_heat_weights(mesh, skel, field)
    assert np.allclose(binding.weights, 1.0)


def test_barbell_symmetry_plane_is_half_half(barbell_rig):
    mesh, field, skel = barbell_rig
    binding = compute_heat_weights(mesh, skel, field)
    mid = np.flatnonzero(np.abs(mesh.vertices[:, 0]) < 1e-12)
    assert len(mid) > 0
    assert np.abs(binding.weights[mid, 0] - 0.5).max() < 1e-6
    assert np.abs(binding.weights[mid, 1] - 0.5).max() < 1e-6


def test_partition_of_unity_and_nonneg(barbell_rig):
    mesh, field, skel = barbell_rig
    binding = compute_heat_weights(mesh, skel, field)
    w = binding.weights
    assert (w >= 0).all()
    assert np.abs(w.sum(axis=1) - 1.0).max() < 1e-9


def test_residual_and_maximum_principle(barbell_rig):
    mesh, field, skel = barbell_rig
    K, h, sources = assemble_heat_system(mesh, skel, field)
    raw = compute_heat_weights(mesh, skel, field, max_influences=None)
    for b in range(skel.n_bones):
        rhs = h * sources[:, b]
        residual = np.abs(K @ raw.weights[:, b] - rhs).max()
        assert residual < 1e-8
    assert raw.weights.min() > -1e-6
    assert raw.weights.max() < 1 + 1e-6
    assert np.abs(raw.weights.sum(axis=1) - 1.0).max() < 1e-9


def test_locality_on_three_bone_cylinder():
    mesh = make_capsule(length=4.0, radius=0.35, rings=33)
    field = compute_edm(voxelize(mesh, 48))
    skel = skeleton_from_points([(-2.1, 0, 0), (-0.7, 0, 0), (0.7, 0, 0), (2.1, 0, 0)])
    binding = compute_heat_weights(mesh, skel, field)
    far_left = np.flatnonzero(mesh.vertices[:, 0] < -1.8)
    assert len(far_left) > 0
    assert binding.weights[far_left, 2].max() < 0.01  # far-end bone


def test_max_influences_prune(barbell_rig):
    mesh, field, skel = barbell_rig
    binding = compute_heat_weights(mesh, skel, field, max_influences=1)
    assert ((binding.weights > 0).sum(axis=1) <= 1).all()
    assert np.abs(binding.weights.sum(axis=1) - 1.0).max() < 1e-9


def test_no_heat_source_component_raises():
    mesh = make_two_blobs()
    field = compute_edm(voxelize(mesh, 32))
    # bone entirely inside the left blob: right blob sees nothing
    skel = skeleton_from_points([(-0.75, 0, 0), (-0.45, 0, 0)])
    with pytest.raises(SingularSystemError) as exc:
        compute_heat_weights(mesh, skel, field)
    assert "component" in str(exc.value)


# -- lbs ----------------------------------------------------------------------


def test_lbs_identity(capsule_rig):
    mesh, field = capsule_rig
    skel = skeleton_from_points([(-0.9, 0, 0), (0.9, 0, 0)])
    binding = compute_heat_weights(mesh, skel, field)
    posed = lbs_deform(mesh, binding, identity_pose(1), identity_pose(1))
    assert np.abs(posed.vertices - mesh.vertices).max() < 1e-9
    assert np.array_equal(posed.triangles, mesh.triangles)


def test_lbs_single_bone_translation(capsule_rig):
    mesh, field = capsule_rig
    skel = skeleton_from_points([(-0.9, 0, 0), (0.9, 0, 0)])
    binding = compute_heat_weights(mesh, skel, field)
    pose = Pose(rotations=[[1, 0, 0, 0]], translations=[[1.0, 0.0, 0.0]])
    posed = lbs_deform(mesh, binding, identity_pose(1), pose)
    assert np.abs(posed.vertices - (mesh.vertices + [1, 0, 0])).max() < 1e-9


def test_lbs_global_rotation(barbell_rig):
    mesh, field, skel = barbell_rig
    binding = compute_heat_weights(mesh, skel, field)
    q = axis_quat([1, 2, 3], 0.7)
    R = quat_to_matrix(q)
    pose = Pose(rotations=np.tile(q, (2, 1)), translations=np.zeros((2, 3)))
    posed = lbs_deform(mesh, binding, identity_pose(2), pose)
    assert np.abs(posed.vertices - mesh.vertices @ R.T).max() < 1e-7


@settings(max_examples=10)
@given(
    angle=st.floats(-3.0, 3.0),
    axis=st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 1)),
    shift=st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)),
)
def test_lbs_rigid_invariance(angle, axis, shift):
    """Composing every pose bone with a common rigid map G moves the output
    by exactly G."""
    rng = np.random.default_rng(0)
    V = rng.random((40, 3))
    from autorig.mesh import TriangleMesh
    mesh = TriangleMesh(vertices=V, triangles=np.zeros((0, 3), dtype=int), name="pts")
    W = rng.random((40, 2))
    W /= W.sum(axis=1, keepdims=True)
    from autorig.skinning import SkinBinding
    binding = SkinBinding(weights=W, max_influences=None)

    base = Pose(rotations=[axis_quat([0, 0, 1], 0.4), axis_quat([1, 0, 0], -0.2)],
                translations=[[0.1, 0, 0], [0, 0.2, 0]])
    posed = lbs_deform(mesh, binding, identity_pose(2), base)

    g = axis_quat(axis, angle)
    G = quat_to_matrix(g)
    t = np.asarray(shift)
    # compose: x -> G(base(x)) + t
    rots, trans = [], []
    for b in range(2):
        Rb = quat_to_matrix(base.rotations[b])
        M = G @ Rb
        # quaternion product g * base_q
    # quaternion multiply
    def qmul(q1, q2):
        w1, x1, y1, z1 = q1
        w2, x2, y2, z2 = q2
        return np.array([
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ])
    for b in range(2):
        rots.append(qmul(g, base.rotations[b]))
        trans.append(G @ base.translations[b] + t)
    composed = Pose(rotations=np.array(rots), translations=np.array(trans))
    posed2 = lbs_deform(mesh, binding, identity_pose(2), composed)
    expected = posed.vertices @ G.T + t
    assert np.abs(posed2.vertices - expected).max() < 1e-7


def test_bone_count_mismatch(capsule_rig):
    mesh, field = capsule_rig
    skel = skeleton_from_points([(-0.9, 0, 0), (0.9, 0, 0)])
    binding = compute_heat_weights(mesh, skel, field)
    with pytest.raises(BoneSetMismatchError):
        lbs_deform(mesh, binding, identity_pose(2), identity_pose(2))


def test_pose_requires_unit_quaternions():
    with pytest.raises(ValueError):
        Pose(rotations=[[1.0, 0.0, 0.0, 1e-3]], translations=[[0, 0, 0]])


def test_rigid_binding_is_one_hot():
    binding = rigid_binding([0, 1, 1, 0], 2)
    assert binding.weights.tolist() == [[1, 0], [0, 1], [0, 1], [1, 0]]


def test_weights_json_round_trip(tmp_path, barbell_rig):
    mesh, field, skel = barbell_rig
    binding = compute_heat_weights(mesh, skel, field)
    p = tmp_path / "weights.json"
    save_weights(binding, p)
    back = load_weights(p)
    assert back.n_bones == binding.n_bones
    assert np.abs(back.weights - binding.weights).max() < 1e-15
