import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from aquafuse.errors import DimensionMismatch, EmptyMask
from aquafuse.masks import BoundingBox, Mask, iou, min_bounding_box, rle_decode, rle_encode


def make_mask(bits) -> Mask:
    bits = np.asarray(bits, dtype=bool)
    return Mask(bits.shape[1], bits.shape[0], bits)


class TestRle:
    def test_empty_image(self):
        assert rle_encode(np.zeros((0, 0), dtype=bool)) == []

    def test_all_background(self):
        assert rle_encode(np.zeros((2, 3), dtype=bool)) == [6]

    def test_leading_foreground_gets_zero_run(self):
        bits = np.array([[1, 0, 0]], dtype=bool)
        assert rle_encode(bits) == [0, 1, 2]

    def test_decode_checks_total(self):
        with pytest.raises(DimensionMismatch):
            rle_decode([5], 2, 2)

    @given(arrays(bool, st.tuples(st.integers(1, 12), st.integers(1, 12))))
    def test_roundtrip(self, bits):
        runs = rle_encode(bits)
        back = rle_decode(runs, bits.shape[1], bits.shape[0])
        assert np.array_equal(back, bits)
        # alternation invariant: only the first run may be zero
        assert all(r > 0 for r in runs[1:])


class TestBoundingBox:
    def test_min_bounding_box_single_pixel(self):
        bits = np.zeros((30, 30), dtype=bool)
        bits[20, 10] = True
        box = min_bounding_box(make_mask(bits))
        assert (box.u_min, box.v_min, box.u_max, box.v_max) == (10, 20, 10, 20)

    def test_min_bounding_box_rectangle(self):
        bits = np.zeros((20, 20), dtype=bool)
        bits[5:10, 3:8] = True
        box = min_bounding_box(make_mask(bits))
        assert (box.u_min, box.v_min, box.u_max, box.v_max) == (3, 5, 7, 9)

    def test_empty_mask_rejected(self):
        with pytest.raises(EmptyMask):
            min_bounding_box(make_mask(np.zeros((4, 4), dtype=bool)))

    def test_center_and_contains(self):
        box = BoundingBox(10, 20, 20, 40)
        assert box.center == (15, 30)
        assert box.contains(10, 20) and box.contains(20, 40)
        assert not box.contains(21, 30)


class TestIoU:
    def test_identical(self):
        bits = np.zeros((10, 10), dtype=bool)
        bits[2:6, 2:6] = True
        assert iou(make_mask(bits), make_mask(bits)) == 1.0

    def test_disjoint(self):
        a = np.zeros((10, 10), dtype=bool)
        b = np.zeros((10, 10), dtype=bool)
        a[0:2, 0:2] = True
        b[5:7, 5:7] = True
        assert iou(make_mask(a), make_mask(b)) == 0.0

    def test_shifted_square(self):
        a = np.zeros((20, 30), dtype=bool)
        b = np.zeros((20, 30), dtype=bool)
        a[5:15, 5:15] = True
        b[5:15, 10:20] = True
        assert iou(make_mask(a), make_mask(b)) == pytest.approx(1 / 3)

    def test_both_empty_is_one(self):
        z = make_mask(np.zeros((5, 5), dtype=bool))
        assert iou(z, z) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            iou(make_mask(np.zeros((5, 5), dtype=bool)), make_mask(np.zeros((5, 6), dtype=bool)))

    @given(arrays(bool, (8, 8)), arrays(bool, (8, 8)))
    def test_symmetric(self, a, b):
        assert iou(make_mask(a), make_mask(b)) == iou(make_mask(b), make_mask(a))

    def test_monotone_under_intersection_growth(self):
        # same union, growing intersection
        base = np.zeros((10, 10), dtype=bool)
        base[0:6, 0:6] = True
        prev = -1.0
        for grow in range(0, 4):
            b = np.zeros((10, 10), dtype=bool)
            b[0 + (3 - grow) : 6, 0:6] = True
            value = iou(make_mask(base), make_mask(b | base & b))
            assert value >= prev
            prev = value
