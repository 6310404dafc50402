"""1-D range fusion.

Weighted averaging of stereo and acoustic depth, weight derivation from
mean percentage errors, and least-squares extrapolation over a short
history window for sensor dropouts.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import (
    AlphaOutOfRange,
    BothErrorsZero,
    EmptyGrid,
    EmptyHistory,
    NonPositiveGroundTruth,
    ValidationError,
)


def fuse_range(z_stereo: float, z_acoustic: float, alpha: float) -> float:
    """Convex combination: alpha weights the optical estimate."""
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha={alpha}")
    if z_stereo <= 0.0 or z_acoustic <= 0.0:
        raise ValidationError("depths must be positive", field="z")
    return alpha * z_stereo + (1.0 - alpha) * z_acoustic


def percentage_error(z_measured: float, z_truth: float) -> float:
    """Absolute percentage error of a distance estimate."""
    if z_truth <= 0.0:
        raise NonPositiveGroundTruth(f"z_truth={z_truth}")
    return abs(z_measured - z_truth) / z_truth * 100.0


def mean_camera_error(error_grid) -> float:
    """Mean over an M-frames x N-targets grid of percentage errors."""
    values = [float(e) for row in error_grid for e in row]
    if not values:
        raise EmptyGrid("no error samples")
    return sum(values) / len(values)


def compute_alpha(e_stereo_pct: float, e_acoustic_pct: float) -> float:
    """Fusion weight from mean percentage errors of the two modalities.

    alpha = e_acoustic / (e_stereo + e_acoustic); the less accurate
    modality gets the smaller weight.  The branch keeps
    compute_alpha(a, b) + compute_alpha(b, a) == 1 exact in floating
    point.
    """
    if e_stereo_pct < 0 or e_acoustic_pct < 0:
        raise ValidationError("errors must be non-negative", field="e")
    s = e_stereo_pct + e_acoustic_pct
    if s == 0.0:
        raise BothErrorsZero("both modality errors are zero")
    if e_acoustic_pct <= e_stereo_pct:
        return e_acoustic_pct / s
    return 1.0 - e_stereo_pct / s


@dataclass(frozen=True)
class FusionWeights:
    alpha: float
    e_stereo_pct: float
    e_acoustic_pct: float

    @staticmethod
    def from_errors(e_stereo_pct: float, e_acoustic_pct: float) -> "FusionWeights":
        return FusionWeights(
            compute_alpha(e_stereo_pct, e_acoustic_pct), e_stereo_pct, e_acoustic_pct
        )


class RangeHistory:
    """Ring of (timestamp, value) samples feeding extrapolation.

    Timestamps must be strictly increasing; capacity is the extrapolation
    window n.
    """

    def __init__(self, capacity: int = 5):
        if capacity < 1:
            raise ValidationError("capacity must be >= 1", field="capacity")
        self._ring: deque[tuple[float, float]] = deque(maxlen=capacity)

    def push(self, timestamp: float, value: float) -> None:
        if self._ring and timestamp <= self._ring[-1][0]:
            raise ValidationError(
                f"timestamp {timestamp} not after {self._ring[-1][0]}",
                field="timestamp",
            )
        self._ring.append((float(timestamp), float(value)))

    def __len__(self) -> int:
        return len(self._ring)

    def samples(self) -> list[tuple[float, float]]:
        return list(self._ring)


def extrapolate(history: RangeHistory, t: float) -> float:
    """Estimate the value at time t from the history window.

    Ordinary least squares line over the window; with a single sample the
    last value is held.
    """
    samples = history.samples()
    if not samples:
        raise EmptyHistory("no samples to extrapolate from")
    if len(samples) == 1:
        return samples[0][1]
    n = len(samples)
    mean_t = sum(s[0] for s in samples) / n
    mean_y = sum(s[1] for s in samples) / n
    sxx = sum((s[0] - mean_t) ** 2 for s in samples)
    sxy = sum((s[0] - mean_t) * (s[1] - mean_y) for s in samples)
    slope = sxy / sxx
    return mean_y + slope * (t - mean_t)
