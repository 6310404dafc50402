import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aquafuse.errors import (
    DegenerateCalibration,
    NoConvergence,
    NonPositiveDepth,
    NonPositiveDisparity,
    ValidationError,
)
from aquafuse.geometry import (
    CameraIntrinsics,
    DistortionParams,
    StereoCalibration,
    camera_to_pixel,
    depth_to_disparity,
    disparity_to_depth,
    distort_point,
    epipolar_match,
    identity_calibration,
    load_calibration,
    rectify,
    undistort_point,
    world_to_camera,
)
from conftest import TABLE_LEFT_DIST


K = CameraIntrinsics(1000.0, 1000.0, 640.0, 480.0)


class TestWorldToCamera:
    def test_identity(self):
        np.testing.assert_allclose(
            world_to_camera([1, 2, 3], np.eye(3), [0, 0, 0]), [1, 2, 3]
        )

    def test_pure_translation(self):
        np.testing.assert_allclose(
            world_to_camera([0, 0, 0], np.eye(3), [0.1, 0, 0.5]), [0.1, 0, 0.5]
        )

    def test_rot_z_90(self):
        c, s = math.cos(math.pi / 2), math.sin(math.pi / 2)
        rz = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
        np.testing.assert_allclose(
            world_to_camera([1, 0, 0], rz, [0, 0, 0]), [0, 1, 0], atol=1e-15
        )


class TestCameraToPixel:
    def test_optical_axis_maps_to_principal_point(self):
        p = camera_to_pixel([0, 0, 1], K)
        assert (p.u, p.v) == (640.0, 480.0)

    def test_hand_computed_projection(self):
        p = camera_to_pixel([0.1, 0, 1], K)
        assert (p.u, p.v) == pytest.approx((740.0, 480.0))

    def test_zero_depth_rejected(self):
        with pytest.raises(NonPositiveDepth):
            camera_to_pixel([0, 0, 0], K)

    @given(
        x=st.floats(-1, 1), y=st.floats(-1, 1),
        z=st.floats(0.1, 10), lam=st.floats(0.01, 100),
    )
    def test_scale_invariance(self, x, y, z, lam):
        a = camera_to_pixel([x, y, z], K)
        b = camera_to_pixel([lam * x, lam * y, lam * z], K)
        assert a.u == pytest.approx(b.u, rel=1e-12, abs=1e-9)
        assert a.v == pytest.approx(b.v, rel=1e-12, abs=1e-9)


class TestDistortion:
    def test_zero_distortion_is_identity(self):
        assert distort_point((0.3, -0.2), DistortionParams()) == (0.3, -0.2)

    def test_center_is_fixed_point(self):
        assert distort_point((0.0, 0.0), TABLE_LEFT_DIST) == (0.0, 0.0)

    def test_pure_k1(self):
        xd, yd = distort_point((0.1, 0.0), DistortionParams(k1=0.1))
        assert xd == pytest.approx(0.1001, abs=1e-12)
        assert yd == 0.0

    def test_undistort_zero_distortion(self):
        assert undistort_point((0.2, -0.4), DistortionParams()) == pytest.approx((0.2, -0.4))

    def test_roundtrip_with_table_coefficients(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(500):
            ang = rng.uniform(0, 2 * math.pi)
            r = rng.uniform(0, 0.5)
            p = (r * math.cos(ang), r * math.sin(ang))
            pd = distort_point(p, TABLE_LEFT_DIST)
            pu = undistort_point(pd, TABLE_LEFT_DIST)
            worst = max(worst, abs(pu[0] - p[0]), abs(pu[1] - p[1]))
        assert worst < 1e-9

    def test_non_contracting_distortion_raises(self):
        bad = DistortionParams(k1=80.0, k2=500.0)
        with pytest.raises(NoConvergence):
            undistort_point((0.9, 0.9), bad)


class TestDisparityDepth:
    def test_hand_computed(self):
        assert disparity_to_depth(100.0, 1000.0, 0.06) == pytest.approx(0.6)

    def test_table_values(self):
        assert disparity_to_depth(146.49, 1241.0, 0.05902) == pytest.approx(0.50, abs=1e-3)

    def test_zero_disparity_rejected(self):
        with pytest.raises(NonPositiveDisparity):
            disparity_to_depth(0.0, 1000.0, 0.06)

    def test_inverse(self):
        assert depth_to_disparity(0.6, 1000.0, 0.06) == pytest.approx(100.0)

    def test_far_limit(self):
        du = depth_to_disparity(1e9, 1000.0, 0.06)
        assert 0 < du == pytest.approx(6e-8)

    def test_zero_depth_rejected(self):
        with pytest.raises(NonPositiveDepth):
            depth_to_disparity(0.0, 1000.0, 0.06)

    @given(z=st.floats(0.1, 10.0))
    def test_roundtrip(self, z):
        back = disparity_to_depth(depth_to_disparity(z, 1241.0, 0.05902), 1241.0, 0.05902)
        assert back == pytest.approx(z, rel=1e-12)


class TestEpipolarMatch:
    def test_within_band(self):
        assert epipolar_match(300.2, 301.0, 3.0)

    def test_outside_band(self):
        assert not epipolar_match(100.0, 104.0, 3.0)

    def test_equal_rows(self):
        assert epipolar_match(250.0, 250.0, 0.5)

    def test_strict_inequality(self):
        assert not epipolar_match(100.0, 103.0, 3.0)

    @given(a=st.floats(-1e3, 1e3), b=st.floats(-1e3, 1e3), eps=st.floats(0.01, 10))
    def test_symmetric(self, a, b, eps):
        assert epipolar_match(a, b, eps) == epipolar_match(b, a, eps)


class TestRectify:
    def test_already_rectified_is_fixed_point(self, identity_calibration):
        rect = rectify(identity_calibration)
        out = rect.calibration
        assert out.left.fx == pytest.approx(1000.0, rel=1e-12)
        assert out.left.fx == out.left.fy
        np.testing.assert_allclose(rect.rot_left, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(out.translation, [-0.06, 0, 0], atol=1e-12)
        remap = rect.remap("left")
        for uv in [(0, 0), (640, 480), (1279, 959)]:
            assert remap(*uv) == pytest.approx(uv, abs=1e-9)

    def test_table_calibration_aligns_rows(self, pool_calibration):
        rect = rectify(pool_calibration)
        p = rect.project_left([0.0, 0.0, 0.5])
        q = rect.project_right([0.0, 0.0, 0.5])
        assert abs(p.v - q.v) < 1e-6

    def test_vertical_alignment_over_random_points(self, pool_calibration):
        rect = rectify(pool_calibration)
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(1000):
            p = np.array(
                [rng.uniform(-0.2, 0.2), rng.uniform(-0.15, 0.15), rng.uniform(0.3, 2.0)]
            )
            worst = max(worst, abs(rect.project_left(p).v - rect.project_right(p).v))
        assert worst < 1e-6

    def test_disparity_positive_in_front(self, pool_calibration):
        rect = rectify(pool_calibration)
        p = [0.02, -0.01, 0.8]
        assert rect.project_left(p).u - rect.project_right(p).u > 0

    def test_zero_baseline_rejected(self, identity_calibration):
        with pytest.raises((DegenerateCalibration, ValidationError)):
            StereoCalibration.create(
                identity_calibration.left,
                identity_calibration.right,
                DistortionParams(),
                DistortionParams(),
                np.eye(3),
                np.zeros(3),
            )

    def test_remap_undoes_distortion(self, pool_calibration):
        # remap of a rectified pixel must land where the raw camera
        # actually imaged that ray: project the ray through the raw model
        rect = rectify(pool_calibration)
        remap = rect.remap("left")
        u, v = 700.0, 500.0
        raw_u, raw_v = remap(u, v)
        x = (u - rect.calibration.left.cx) / rect.calibration.left.fx
        y = (v - rect.calibration.left.cy) / rect.calibration.left.fy
        d = rect.rot_left.T @ np.array([x, y, 1.0])
        xd, yd = distort_point((d[0] / d[2], d[1] / d[2]), pool_calibration.left_dist)
        assert raw_u == pytest.approx(pool_calibration.left.fx * xd + pool_calibration.left.cx)
        assert raw_v == pytest.approx(pool_calibration.left.fy * yd + pool_calibration.left.cy)


class TestCalibrationFile:
    def test_loads_table_values(self, pool_calibration):
        assert pool_calibration.left.fx == 1241.0
        assert pool_calibration.right.cy == 525.0
        assert pool_calibration.left_dist.k3 == -1.74
        # translation converted from millimeters
        assert pool_calibration.translation[0] == pytest.approx(-0.05902)
        assert pool_calibration.baseline == pytest.approx(0.05902, rel=1e-4)

    def test_rotation_reorthonormalized(self, pool_calibration):
        r = pool_calibration.rotation
        assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-9

    def test_garbage_rotation_rejected(self):
        with pytest.raises(ValidationError):
            load_calibration(
                {
                    "left": {"fx": 1000, "fy": 1000, "cx": 640, "cy": 480},
                    "right": {"fx": 1000, "fy": 1000, "cx": 640, "cy": 480},
                    "dist_left": [0, 0, 0, 0, 0],
                    "dist_right": [0, 0, 0, 0, 0],
                    "rotation": [[1, 0.5, 0], [0, 1, 0], [0, 0, 1]],
                    "translation_mm": [-60, 0, 0],
                }
            )

    def test_identity_helper(self):
        calib = identity_calibration(1000.0, 640.0, 480.0, 0.06)
        assert calib.baseline == pytest.approx(0.06)
