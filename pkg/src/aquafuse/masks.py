"""Binary masks, run-length encoding, IoU, bounding boxes.

RLE convention (shared with the segmentation wire protocol): row-major
scan, alternating run lengths starting with background, summing to
width*height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyMask, ValidationError


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates, edges inclusive.

    Sub-pixel coordinates are allowed; the segmentation pipeline keeps
    boxes as real numbers so a noise-free run stays exact.
    """

    u_min: float
    v_min: float
    u_max: float
    v_max: float

    def __post_init__(self):
        if not (
            math.isfinite(self.u_min)
            and math.isfinite(self.v_min)
            and math.isfinite(self.u_max)
            and math.isfinite(self.v_max)
        ):
            raise ValidationError("not finite", field="bounding box")

    @property
    def center(self) -> tuple[float, float]:
        return (self.u_min + self.u_max) / 2.0, (self.v_min + self.v_max) / 2.0

    @property
    def width(self) -> float:
        return self.u_max - self.u_min

    @property
    def height(self) -> float:
        return self.v_max - self.v_min

    @property
    def is_degenerate(self) -> bool:
        return not (self.u_max > self.u_min and self.v_max > self.v_min)

    def contains(self, u: float, v: float) -> bool:
        return self.u_min <= u <= self.u_max and self.v_min <= v <= self.v_max

    def shifted(self, du: float, dv: float) -> "BoundingBox":
        return BoundingBox(
            self.u_min + du, self.v_min + dv, self.u_max + du, self.v_max + dv
        )


def rle_encode(bits: np.ndarray) -> list[int]:
    """Encode a 2-D bool array into alternating bg/fg run lengths."""
    flat = np.asarray(bits, dtype=bool).ravel()
    if flat.size == 0:
        return []
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(starts).tolist()
    if flat[0]:
        runs = [0] + runs
    return [int(r) for r in runs]


def rle_decode(runs: list[int], width: int, height: int) -> np.ndarray:
    """Decode run lengths back into a height x width bool array."""
    total = sum(runs)
    if total != width * height:
        raise DimensionMismatch(
            f"RLE sums to {total}, expected {width * height}"
        )
    if any(r < 0 for r in runs):
        raise ValidationError("negative run length", field="rle")
    flat = np.zeros(total, dtype=bool)
    pos = 0
    value = False
    for r in runs:
        if value:
            flat[pos : pos + r] = True
        pos += r
        value = not value
    return flat.reshape(height, width)


@dataclass(frozen=True)
class Mask:
    """One segmentation mask for one view with a provider confidence score."""

    width: int
    height: int
    bits: np.ndarray = field(repr=False)
    confidence: float = 1.0

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.shape != (self.height, self.width):
            raise DimensionMismatch(
                f"bits shape {bits.shape} != ({self.height}, {self.width})"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError("confidence outside [0,1]", field="confidence")
        object.__setattr__(self, "bits", bits)

    @staticmethod
    def from_rle(runs: list[int], width: int, height: int, confidence: float = 1.0) -> "Mask":
        return Mask(width, height, rle_decode(runs, width, height), confidence)

    def to_rle(self) -> list[int]:
        return rle_encode(self.bits)

    @property
    def area(self) -> int:
        return int(self.bits.sum())


def min_bounding_box(mask: Mask) -> BoundingBox:
    """Tightest axis-aligned box around the foreground pixels."""
    rows = np.any(mask.bits, axis=1)
    cols = np.any(mask.bits, axis=0)
    if not rows.any():
        raise EmptyMask("mask has no foreground pixels")
    v_idx = np.flatnonzero(rows)
    u_idx = np.flatnonzero(cols)
    return BoundingBox(
        float(u_idx[0]), float(v_idx[0]), float(u_idx[-1]), float(v_idx[-1])
    )


def iou(a: Mask, b: Mask) -> float:
    """Intersection over union; two empty masks count as identical."""
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch(
            f"({a.width},{a.height}) vs ({b.width},{b.height})"
        )
    inter = int(np.logical_and(a.bits, b.bits).sum())
    union = int(np.logical_or(a.bits, b.bits).sum())
    if union == 0:
        return 1.0
    return inter / union
