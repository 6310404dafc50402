"""Ultrasonic ranging model.

Time-of-flight conversion, cone-of-view membership, range gating and
synthetic ping generation.  Sensors are described in the camera frame;
each ping reports the first (nearest) in-cone echo.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import NegativeInterval, ValidationError, ZeroVector

SPEED_OF_SOUND_FRESH_WATER = 1480.0  # m/s near 20 C


class RangeStatus(enum.Enum):
    VALID = "valid"
    TOO_FAR = "too_far"
    TOO_NEAR = "too_near"
    NO_ECHO = "no_echo"


@dataclass(frozen=True)
class UltrasonicSensor:
    """Single-beam ranging sensor rigidly mounted on the sensing frame.

    ``mount`` is the transducer position in the camera frame (m); the
    lateral components double as the projection offsets when a ping is
    turned into a segmentation prompt.  ``cone_full_angle`` is the full
    aperture in radians; membership is inclusive at the boundary.
    """

    id: int
    mount: tuple[float, float, float]
    boresight: tuple[float, float, float] = (0.0, 0.0, 1.0)
    cone_full_angle: float = math.radians(4.0)
    rate_hz: float = 10.0

    def __post_init__(self):
        b = np.asarray(self.boresight, dtype=float)
        n = float(np.linalg.norm(b))
        if abs(n - 1.0) > 1e-9:
            raise ValidationError("boresight must be unit length", field="boresight")
        if not 0.0 < self.cone_full_angle < math.pi / 2:
            raise ValidationError(
                "cone full angle must be in (0, pi/2)", field="cone_full_angle"
            )
        if self.rate_hz <= 0:
            raise ValidationError("rate must be positive", field="rate_hz")


@dataclass(frozen=True)
class RangeMeasurement:
    sensor_id: int
    distance: float
    timestamp: float
    status: RangeStatus

    @property
    def usable(self) -> bool:
        return self.status is RangeStatus.VALID


def tof_to_distance(dt: float, c: float = SPEED_OF_SOUND_FRESH_WATER) -> float:
    """Round-trip time to one-way distance: s = c*dt/2."""
    if dt < 0.0:
        raise NegativeInterval(f"dt={dt}")
    if c <= 0.0:
        raise ValidationError("sound speed must be positive", field="c")
    return c * dt / 2.0


def in_cone(sensor: UltrasonicSensor, point) -> bool:
    """True when ``point`` lies within the sensor's acceptance cone."""
    mx, my, mz = sensor.mount
    dx = float(point[0]) - mx
    dy = float(point[1]) - my
    dz = float(point[2]) - mz
    n = math.sqrt(dx * dx + dy * dy + dz * dz)
    if n == 0.0:
        raise ZeroVector("point coincides with sensor mount")
    bx, by, bz = sensor.boresight
    cos_angle = (dx * bx + dy * by + dz * bz) / n
    half = sensor.cone_full_angle / 2.0
    return cos_angle >= math.cos(half) - 1e-15


def validate_range(s: float, r_min: float, r_max: float) -> RangeStatus:
    """Gate a measured distance; boundary values count as valid."""
    if not 0.0 < r_min < r_max:
        raise ValidationError("need 0 < r_min < r_max", field="range gate")
    if s > r_max:
        return RangeStatus.TOO_FAR
    if s < r_min:
        return RangeStatus.TOO_NEAR
    return RangeStatus.VALID


def simulate_ping(
    sensor: UltrasonicSensor,
    surfaces,
    timestamp: float,
    rng: np.random.Generator,
    sigma_rel: float = 0.0,
    r_min: float = 0.2,
    r_max: float = 1.5,
) -> RangeMeasurement:
    """Generate one synthetic ping.

    ``surfaces`` is an iterable of (center_point, surface_distance_fn)
    pairs: the cone test uses the target center, the echo distance is the
    nearest surface point.  Gaussian noise with standard deviation
    ``sigma_rel * distance`` is added; the result is then range-gated.
    Returns a NO_ECHO measurement when no target center is inside the
    cone.  Always draws exactly one normal variate per target-carrying
    call so that streams stay aligned across configurations.
    """
    best = math.inf
    for center, surface_distance in surfaces:
        if in_cone(sensor, center):
            d = float(surface_distance(sensor.mount))
            best = min(best, d)
    if math.isinf(best):
        return RangeMeasurement(sensor.id, math.nan, timestamp, RangeStatus.NO_ECHO)
    noise = rng.standard_normal()
    measured = best * (1.0 + sigma_rel * noise) if sigma_rel > 0.0 else best
    return RangeMeasurement(
        sensor.id, measured, timestamp, validate_range(measured, r_min, r_max)
    )


def square_frame_layout(
    half_size: float,
    cone_deg: float = 4.0,
    rate_hz: float = 10.0,
) -> list[UltrasonicSensor]:
    """The 8-sensor ring: four corners plus four edge midpoints.

    Sensor ids run 0..7 counterclockwise starting at the +x edge
    midpoint; all boresights face +z.
    """
    h = half_size
    offsets = [
        (h, 0.0), (h, h), (0.0, h), (-h, h),
        (-h, 0.0), (-h, -h), (0.0, -h), (h, -h),
    ]
    return [
        UltrasonicSensor(
            id=i,
            mount=(x, y, 0.0),
            cone_full_angle=math.radians(cone_deg),
            rate_hz=rate_hz,
        )
        for i, (x, y) in enumerate(offsets)
    ]
