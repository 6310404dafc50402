"""Target detection layer.

Acoustic prompt projection, the segmentation-provider interface, and the
post-processing that turns per-view masks into matched five-key-point
stereo observations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import DegenerateBox, NonPositiveDisparity, OutOfFrame
from .geometry import CameraIntrinsics, PixelPoint, camera_to_pixel, disparity_to_depth, epipolar_match
from .acoustic import UltrasonicSensor
from .masks import BoundingBox, Mask


class View(enum.Enum):
    LEFT = "L"
    RIGHT = "R"


@dataclass(frozen=True)
class PromptPoint:
    """A segmentation point prompt derived from an acoustic range hit."""

    view: View
    pixel: PixelPoint
    source_sensor_id: int


KEY_POINT_ORDER = ("center", "tl", "tr", "bl", "br")


@dataclass(frozen=True)
class KeyPointPairs:
    """Five matched (left, right) key points: box center plus corners.

    ``d_v[i]`` is the absolute vertical disparity of pair i, ``d_u[i]``
    the signed horizontal disparity u_left - u_right; order follows
    KEY_POINT_ORDER.
    """

    left: tuple[PixelPoint, ...]
    right: tuple[PixelPoint, ...]

    def __post_init__(self):
        if len(self.left) != 5 or len(self.right) != 5:
            raise DegenerateBox("need exactly five key point pairs")

    @property
    def d_v(self) -> tuple[float, ...]:
        return tuple(abs(l.v - r.v) for l, r in zip(self.left, self.right))

    @property
    def d_u(self) -> tuple[float, ...]:
        return tuple(l.u - r.u for l, r in zip(self.left, self.right))


@dataclass(frozen=True)
class TargetObservation:
    """Result of matching one target's masks across the stereo pair."""

    target_id: int
    key_points: KeyPointPairs
    stereo_depth: float | None
    valid: bool


@dataclass(frozen=True)
class TargetSegments:
    """One target as returned by a segmentation provider.

    Boxes are sub-pixel; raster masks are attached when the provider
    works on (or renders) images.  ``realized_iou`` is the mask quality
    against ground truth when the provider knows it (oracle mode).
    """

    target_id: int
    left_box: BoundingBox
    right_box: BoundingBox
    confidence: float
    left_mask: Mask | None = None
    right_mask: Mask | None = None
    realized_iou: float | None = None


class SegmentationProvider(Protocol):
    """Per-frame promptable segmentation.

    An empty prompt list asks the provider to segment everything it can
    find.  Implementations raise ProviderUnavailable on transport-level
    failure; low mask quality is reported through the confidence score.
    """

    def segment(self, frame, prompts: Sequence[PromptPoint]) -> list[TargetSegments]:
        ...


def range_to_prompt(
    sensor: UltrasonicSensor,
    z_c: float,
    intrinsics: CameraIntrinsics,
    width: int,
    height: int,
    view: View = View.LEFT,
    baseline: float = 0.0,
) -> PromptPoint:
    """Project a range hit into a pixel prompt.

    The lateral position is fixed by the sensor mount; the measured
    range supplies the depth.  For the right view the camera sits
    ``baseline`` to the +x side, so the point shifts accordingly.
    """
    x_c, y_c = sensor.mount[0], sensor.mount[1]
    if view is View.RIGHT:
        x_c = x_c - baseline
    pixel = camera_to_pixel((x_c, y_c, z_c), intrinsics)
    if not (0.0 <= pixel.u <= width - 1 and 0.0 <= pixel.v <= height - 1):
        raise OutOfFrame(f"prompt ({pixel.u:.1f}, {pixel.v:.1f}) outside {width}x{height}")
    return PromptPoint(view, pixel, sensor.id)


def extract_key_point_pairs(box_left: BoundingBox, box_right: BoundingBox) -> KeyPointPairs:
    """Center plus TL, TR, BL, BR corner pairs from the two boxes."""
    if box_left.is_degenerate or box_right.is_degenerate:
        raise DegenerateBox("bounding box without positive extent")

    def points(b: BoundingBox) -> tuple[PixelPoint, ...]:
        cu, cv = b.center
        return (
            PixelPoint(cu, cv),
            PixelPoint(b.u_min, b.v_min),
            PixelPoint(b.u_max, b.v_min),
            PixelPoint(b.u_min, b.v_max),
            PixelPoint(b.u_max, b.v_max),
        )

    return KeyPointPairs(points(box_left), points(box_right))


def match_stereo_masks(
    target_id: int,
    pairs: KeyPointPairs,
    eps: float,
    f: float,
    b: float,
) -> TargetObservation:
    """Check the epipolar condition on all five pairs and average depth.

    Any pair failing the vertical-disparity test, or any non-positive
    horizontal disparity, invalidates the whole observation.
    """
    if not all(epipolar_match(l.v, r.v, eps) for l, r in zip(pairs.left, pairs.right)):
        return TargetObservation(target_id, pairs, None, False)
    try:
        depths = [disparity_to_depth(du, f, b) for du in pairs.d_u]
    except NonPositiveDisparity:
        return TargetObservation(target_id, pairs, None, False)
    return TargetObservation(target_id, pairs, sum(depths) / 5.0, True)
