import pytest

from aquafuse.acoustic import UltrasonicSensor
from aquafuse.errors import DegenerateBox, OutOfFrame
from aquafuse.geometry import CameraIntrinsics
from aquafuse.masks import BoundingBox
from aquafuse.segmentation import (
    View,
    extract_key_point_pairs,
    match_stereo_masks,
    range_to_prompt,
)

K_TABLE = CameraIntrinsics(1241.0, 1241.0, 661.0, 506.0)


def sensor_at(x, y):
    return UltrasonicSensor(id=0, mount=(x, y, 0.0))


class TestRangeToPrompt:
    def test_offset_sensor(self):
        p = range_to_prompt(sensor_at(0.1, 0.0), 0.6, K_TABLE, 1280, 960)
        assert p.pixel.u == pytest.approx(1241.0 * 0.1 / 0.6 + 661.0)
        assert p.pixel.u == pytest.approx(867.83, abs=0.01)
        assert p.pixel.v == 506.0

    def test_axis_sensor_hits_principal_point(self):
        p = range_to_prompt(sensor_at(0.0, 0.0), 0.7, K_TABLE, 1280, 960)
        assert (p.pixel.u, p.pixel.v) == (661.0, 506.0)

    def test_out_of_frame(self):
        with pytest.raises(OutOfFrame):
            range_to_prompt(sensor_at(1.0, 0.0), 0.3, K_TABLE, 1280, 960)

    def test_right_view_shifts_by_baseline(self):
        pl = range_to_prompt(sensor_at(0.1, 0.0), 0.6, K_TABLE, 1280, 960, View.LEFT, 0.05902)
        pr = range_to_prompt(sensor_at(0.1, 0.0), 0.6, K_TABLE, 1280, 960, View.RIGHT, 0.05902)
        assert pl.pixel.u - pr.pixel.u == pytest.approx(1241.0 * 0.05902 / 0.6)
        assert pl.pixel.v == pr.pixel.v


class TestKeyPointPairs:
    def test_corner_arithmetic(self):
        pairs = extract_key_point_pairs(
            BoundingBox(100, 100, 200, 200), BoundingBox(90, 100, 190, 200)
        )
        assert pairs.d_v == (0, 0, 0, 0, 0)
        assert pairs.d_u == (10, 10, 10, 10, 10)

    def test_identical_boxes(self):
        b = BoundingBox(50, 60, 80, 90)
        pairs = extract_key_point_pairs(b, b)
        assert pairs.d_u == (0, 0, 0, 0, 0)
        assert pairs.d_v == (0, 0, 0, 0, 0)

    def test_vertical_shift(self):
        pairs = extract_key_point_pairs(
            BoundingBox(100, 100, 200, 200), BoundingBox(100, 105, 200, 205)
        )
        assert pairs.d_v == (5, 5, 5, 5, 5)

    def test_order_center_then_corners(self):
        pairs = extract_key_point_pairs(
            BoundingBox(0, 0, 10, 20), BoundingBox(0, 0, 10, 20)
        )
        left = [(p.u, p.v) for p in pairs.left]
        assert left == [(5, 10), (0, 0), (10, 0), (0, 20), (10, 20)]

    def test_degenerate_box_rejected(self):
        with pytest.raises(DegenerateBox):
            extract_key_point_pairs(
                BoundingBox(10, 10, 10, 20), BoundingBox(0, 0, 10, 20)
            )


class TestMatchStereoMasks:
    def test_five_depth_average(self):
        # per-pair disparities 100,101,99,100,100 with f=1000, b=0.06
        from aquafuse.geometry import PixelPoint
        from aquafuse.segmentation import KeyPointPairs

        left_u = (150.0, 100.0, 200.0, 100.0, 200.0)
        disparities = (100.0, 101.0, 99.0, 100.0, 100.0)
        vs = (150.0, 100.0, 100.0, 200.0, 200.0)
        pairs = KeyPointPairs(
            tuple(PixelPoint(u, v) for u, v in zip(left_u, vs)),
            tuple(PixelPoint(u - d, v) for u, d, v in zip(left_u, disparities, vs)),
        )
        assert pairs.d_u == disparities
        obs = match_stereo_masks(1, pairs, 3.0, 1000.0, 0.06)
        assert obs.valid
        expected = (0.6 + 60 / 101 + 60 / 99 + 0.6 + 0.6) / 5
        assert obs.stereo_depth == pytest.approx(expected)
        assert obs.stereo_depth == pytest.approx(0.600024, abs=1e-6)

    def test_single_emc_failure_invalidates(self):
        left = BoundingBox(100, 100, 200, 200)
        right = BoundingBox(0, 105, 100, 195)  # tl pair d_v = 5
        pairs = extract_key_point_pairs(left, right)
        assert max(pairs.d_v) >= 5
        obs = match_stereo_masks(1, pairs, 3.0, 1000.0, 0.06)
        assert not obs.valid
        assert obs.stereo_depth is None

    def test_constant_disparity(self):
        left = BoundingBox(200, 100, 300, 200)
        right = BoundingBox(100, 100, 200, 200)
        obs = match_stereo_masks(1, extract_key_point_pairs(left, right), 3.0, 1000.0, 0.06)
        assert obs.valid and obs.stereo_depth == pytest.approx(0.6)

    def test_negative_disparity_invalidates(self):
        left = BoundingBox(100, 100, 200, 200)
        right = BoundingBox(150, 100, 250, 200)
        obs = match_stereo_masks(1, extract_key_point_pairs(left, right), 3.0, 1000.0, 0.06)
        assert not obs.valid

    def test_all_valid_pairs_satisfy_emc(self):
        left = BoundingBox(100, 100, 200, 200)
        right = BoundingBox(50, 101, 150, 201)
        pairs = extract_key_point_pairs(left, right)
        obs = match_stereo_masks(1, pairs, 3.0, 1000.0, 0.06)
        assert obs.valid
        assert all(dv < 3.0 for dv in pairs.d_v)
