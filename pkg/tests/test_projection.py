import numpy as np
import pytest

from ffdmesh import (DegenerateGeometryError, GimbalLockError, Pose,
                     apply_pose, estimate_pose, euler_degrees, load_pose,
                     rotation_ypr, save_pose, yaw_degrees)

from conftest import make_box_mesh
from oracles import rotation_angle


def random_pose(rng, max_angle=60.0):
    angles = rng.uniform(-max_angle, max_angle, 3)
    return Pose(float(rng.uniform(0.3, 2.5)), rotation_ypr(*angles),
                rng.standard_normal(3) * 5.0)


class TestPoseType:
    def test_identity(self):
        p = Pose.identity()
        np.testing.assert_array_equal(p.rotation, np.eye(3))
        assert p.scale == 1.0

    def test_as_matrix_structure(self, rng):
        p = random_pose(rng)
        m = p.as_matrix()
        assert m.shape == (3, 4)
        np.testing.assert_allclose(m[:, :3], p.scale * p.rotation, atol=0)
        np.testing.assert_array_equal(m[:, 3], p.translation)

    def test_from_matrix_round_trip(self, rng):
        p = random_pose(rng)
        q = Pose.from_matrix(p.as_matrix())
        assert abs(q.scale - p.scale) <= 1e-12 * p.scale
        assert rotation_angle(q.rotation, p.rotation) <= 1e-12
        np.testing.assert_allclose(q.translation, p.translation, atol=0)

    def test_from_matrix_projects_noisy_input(self, rng):
        p = random_pose(rng)
        noisy = p.as_matrix() + 1e-4 * rng.standard_normal((3, 4))
        q = Pose.from_matrix(noisy)
        assert np.abs(q.rotation.T @ q.rotation - np.eye(3)).max() <= 1e-12

    def test_invalid_rotation_rejected(self):
        with pytest.raises(ValueError, match="orthonormal"):
            Pose(1.0, np.eye(3) + 0.01, np.zeros(3))

    def test_reflection_rejected(self):
        r = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(ValueError, match="determinant"):
            Pose(1.0, r, np.zeros(3))

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ValueError):
            Pose(0.0, np.eye(3), np.zeros(3))

    def test_inverse_round_trip(self, rng):
        mesh = make_box_mesh((-1, -2, -3), (2, 1, 4))
        for _ in range(10):
            p = random_pose(rng)
            out = apply_pose(apply_pose(mesh, p.inverse()), p)
            assert np.abs(out.vertices - mesh.vertices).max() <= 1e-9

    def test_json_round_trip(self, tmp_path, rng):
        p = random_pose(rng)
        path = tmp_path / "pose.json"
        save_pose(p, path)
        q = load_pose(path)
        np.testing.assert_array_equal(q.rotation, p.rotation)
        assert q.scale == p.scale


class TestApplyPose:
    def test_identity_unchanged(self):
        mesh = make_box_mesh()
        out = apply_pose(mesh, Pose.identity())
        np.testing.assert_array_equal(out.vertices, mesh.vertices)
        np.testing.assert_array_equal(out.faces, mesh.faces)

    def test_pure_scale_doubles_cube(self):
        mesh = make_box_mesh()
        out = apply_pose(mesh, Pose(2.0, np.eye(3), np.zeros(3)))
        np.testing.assert_allclose(out.vertices, 2.0 * mesh.vertices, atol=0)

    def test_depth_scales_like_xy(self):
        mesh = make_box_mesh()
        out = apply_pose(mesh, Pose(3.0, np.eye(3), np.zeros(3)))
        extent = out.vertices.max(axis=0) - out.vertices.min(axis=0)
        np.testing.assert_allclose(extent, 3.0 * np.ones(3), atol=1e-12)

    def test_pairwise_distances_scale_exactly(self, rng, small_mesh):
        p = random_pose(rng)
        out = apply_pose(small_mesh, p)
        idx = rng.choice(small_mesh.n_vertices, size=(40, 2))
        before = np.linalg.norm(small_mesh.vertices[idx[:, 0]]
                                - small_mesh.vertices[idx[:, 1]], axis=1)
        after = np.linalg.norm(out.vertices[idx[:, 0]]
                               - out.vertices[idx[:, 1]], axis=1)
        keep = before > 1e-9
        np.testing.assert_allclose(after[keep] / before[keep], p.scale,
                                   rtol=1e-12)


class TestEstimatePose:
    def test_identity_on_equal_sets(self, rng):
        src = rng.standard_normal((10, 3))
        p = estimate_pose(src, src)
        assert abs(p.scale - 1.0) <= 1e-12
        assert rotation_angle(p.rotation, np.eye(3)) <= 1e-12
        assert np.abs(p.translation).max() <= 1e-12

    def test_pure_translation(self, rng):
        src = rng.standard_normal((7, 3))
        c = np.array([3.0, -1.0, 0.5])
        p = estimate_pose(src, src + c)
        assert abs(p.scale - 1.0) <= 1e-12
        assert rotation_angle(p.rotation, np.eye(3)) <= 1e-12
        np.testing.assert_allclose(p.translation, c, atol=1e-12)

    def test_synthesize_then_recover(self, rng):
        for _ in range(25):
            src = rng.standard_normal((12, 3))
            truth = random_pose(rng, max_angle=80.0)
            dst = truth.transform(src)
            est = estimate_pose(src, dst)
            assert abs(est.scale - truth.scale) / truth.scale <= 1e-9
            assert rotation_angle(est.rotation, truth.rotation) <= 1e-9
            assert np.abs(est.translation - truth.translation).max() <= 1e-9

    def test_three_point_minimum(self, rng):
        src = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
        truth = random_pose(rng)
        est = estimate_pose(src, truth.transform(src))
        assert rotation_angle(est.rotation, truth.rotation) <= 1e-9

    def test_weighted_prefers_weighted_subset(self, rng):
        src = rng.standard_normal((20, 3))
        truth = random_pose(rng)
        dst = truth.transform(src)
        dst[10:] += rng.standard_normal((10, 3))  # corrupt unweighted half
        w = np.concatenate([np.ones(10), np.zeros(10)])
        est = estimate_pose(src, dst, weights=w)
        assert rotation_angle(est.rotation, truth.rotation) <= 1e-9
        assert abs(est.scale - truth.scale) / truth.scale <= 1e-9

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            estimate_pose(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_collinear_rejected(self):
        src = np.outer(np.arange(5.0), [1.0, 2.0, 3.0])
        with pytest.raises(DegenerateGeometryError, match="collinear"):
            estimate_pose(src, src + 1.0)

    def test_coincident_rejected(self):
        src = np.ones((4, 3))
        with pytest.raises(DegenerateGeometryError):
            estimate_pose(src, src)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            estimate_pose(rng.standard_normal((4, 3)),
                          rng.standard_normal((5, 3)))


class TestYaw:
    def test_identity_zero(self):
        assert yaw_degrees(Pose.identity()) == 0.0

    def test_pure_yaw_30(self):
        p = Pose(1.0, rotation_ypr(30.0, 0.0, 0.0), np.zeros(3))
        assert abs(yaw_degrees(p) - 30.0) <= 1e-12

    def test_compose_decompose_round_trip(self, rng):
        for _ in range(50):
            yaw, pitch, roll = rng.uniform(-85, 85, 3)
            p = Pose(1.0, rotation_ypr(yaw, pitch, roll), np.zeros(3))
            ey, ep, er = euler_degrees(p)
            assert abs(ey - yaw) <= 1e-9
            assert abs(ep - pitch) <= 1e-9
            assert abs(er - roll) <= 1e-9

    def test_range_covers_half_turn(self):
        p = Pose(1.0, rotation_ypr(150.0, 0.0, 0.0), np.zeros(3))
        assert abs(yaw_degrees(p) - 150.0) <= 1e-9

    def test_gimbal_lock_flagged(self):
        p = Pose(1.0, rotation_ypr(20.0, 90.0, 0.0), np.zeros(3))
        with pytest.raises(GimbalLockError):
            yaw_degrees(p)
