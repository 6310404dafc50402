"""Stereo camera mathematics.

Pinhole projection, Brown-Conrady lens distortion, disparity/depth
conversion, the epipolar matching condition, and planar stereo
rectification.  Conventions:

  * world frame == left camera frame unless stated otherwise,
  * a point in the right camera frame is R_b @ P_left + t_b,
  * rectified disparity d_u = u_L - u_R is positive for points in front
    of the rig,
  * pixel coordinates are (u, v) with u horizontal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DegenerateCalibration,
    NoConvergence,
    NonPositiveDepth,
    NonPositiveDisparity,
    ValidationError,
)

_ORTHONORMAL_TOL = 1e-9
# Printed calibration tables are only good to a few digits; anything worse
# than this is treated as a genuinely wrong matrix rather than rounding.
_ORTHONORMAL_REPAIR_TOL = 1e-2


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels: focal lengths and principal point."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError("not finite", field=name)
        if self.fx <= 0 or self.fy <= 0:
            raise ValidationError("focal length must be positive", field="fx/fy")

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class DistortionParams:
    """Radial (k1,k2,k3) and tangential (p1,p2) coefficients."""

    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "p1", "p2"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError("not finite", field=name)

    @property
    def is_zero(self) -> bool:
        return self.k1 == self.k2 == self.k3 == self.p1 == self.p2 == 0.0


@dataclass(frozen=True)
class PixelPoint:
    u: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValidationError("not finite", field="u/v")


def _orthonormalize(R: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar decomposition via SVD)."""
    U, _, Vt = np.linalg.svd(R)
    Ro = U @ Vt
    if np.linalg.det(Ro) < 0:
        U[:, -1] = -U[:, -1]
        Ro = U @ Vt
    return Ro


@dataclass(frozen=True)
class StereoCalibration:
    """Full calibration of a stereo head.

    ``rotation``/``translation`` map left-camera coordinates into the
    right camera frame; translation is in meters.  ``baseline`` is the
    distance between the optical centers, which equals the magnitude of
    the x component of the translation once the rig is rectified.
    """

    left: CameraIntrinsics
    right: CameraIntrinsics
    left_dist: DistortionParams
    right_dist: DistortionParams
    rotation: np.ndarray
    translation: np.ndarray
    baseline: float

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if R.shape != (3, 3):
            raise ValidationError("rotation must be 3x3", field="rotation")
        err = np.max(np.abs(R.T @ R - np.eye(3)))
        if err > _ORTHONORMAL_TOL:
            raise ValidationError(
                f"rotation not orthonormal (deviation {err:.3e})", field="rotation"
            )
        if self.baseline <= 0:
            raise ValidationError("baseline must be positive", field="baseline")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def create(
        left: CameraIntrinsics,
        right: CameraIntrinsics,
        left_dist: DistortionParams,
        right_dist: DistortionParams,
        rotation,
        translation,
    ) -> "StereoCalibration":
        """Build a calibration, repairing mild non-orthonormality.

        Published calibration tables round the rotation to a few digits;
        the nearest true rotation is substituted as long as the input is
        within ``1e-2`` of orthonormal.
        """
        R = np.asarray(rotation, dtype=float)
        if R.shape != (3, 3):
            raise ValidationError("rotation must be 3x3", field="rotation")
        dev = np.max(np.abs(R.T @ R - np.eye(3)))
        if dev > _ORTHONORMAL_REPAIR_TOL:
            raise ValidationError(
                f"rotation too far from orthonormal ({dev:.3e})", field="rotation"
            )
        if dev > _ORTHONORMAL_TOL:
            R = _orthonormalize(R)
        t = np.asarray(translation, dtype=float).reshape(3)
        b = float(np.linalg.norm(t))
        if b == 0.0:
            raise DegenerateCalibration("zero baseline")
        return StereoCalibration(left, right, left_dist, right_dist, R, t, b)


def world_to_camera(point_w, rotation, translation) -> np.ndarray:
    """Rigid transform of a world point into a camera frame."""
    R = np.asarray(rotation, dtype=float)
    return R @ np.asarray(point_w, dtype=float) + np.asarray(translation, dtype=float)


def camera_to_pixel(point_c, intrinsics: CameraIntrinsics) -> PixelPoint:
    """Pinhole projection; the point must be strictly in front of the camera."""
    X, Y, Z = (float(c) for c in point_c)
    if Z <= 0.0:
        raise NonPositiveDepth(f"Z={Z}")
    return PixelPoint(
        intrinsics.fx * X / Z + intrinsics.cx,
        intrinsics.fy * Y / Z + intrinsics.cy,
    )


def distort_point(point, dist: DistortionParams) -> tuple[float, float]:
    """Apply radial-tangential distortion to a normalized image point."""
    x, y = float(point[0]), float(point[1])
    r2 = x * x + y * y
    radial = 1.0 + r2 * (dist.k1 + r2 * (dist.k2 + r2 * dist.k3))
    xd = x * radial + 2.0 * dist.p1 * x * y + dist.p2 * (r2 + 2.0 * x * x)
    yd = y * radial + dist.p1 * (r2 + 2.0 * y * y) + 2.0 * dist.p2 * x * y
    return xd, yd


def undistort_point(
    point,
    dist: DistortionParams,
    tol: float = 1e-10,
    max_iter: int = 20,
) -> tuple[float, float]:
    """Invert distort_point by fixed-point iteration.

    Each pass divides out the current radial factor and subtracts the
    tangential shift.  Converges for moderate distortion; raises
    NoConvergence when the residual after ``max_iter`` passes exceeds
    ``tol``.
    """
    xd, yd = float(point[0]), float(point[1])
    x, y = xd, yd
    for _ in range(max_iter):
        r2 = x * x + y * y
        radial = 1.0 + r2 * (dist.k1 + r2 * (dist.k2 + r2 * dist.k3))
        if not math.isfinite(radial) or radial == 0.0:
            raise NoConvergence("iteration diverged")
        tx = 2.0 * dist.p1 * x * y + dist.p2 * (r2 + 2.0 * x * x)
        ty = dist.p1 * (r2 + 2.0 * y * y) + 2.0 * dist.p2 * x * y
        x = (xd - tx) / radial
        y = (yd - ty) / radial
        fx, fy = distort_point((x, y), dist)
        if max(abs(fx - xd), abs(fy - yd)) < tol:
            return x, y
    raise NoConvergence(f"no convergence after {max_iter} iterations")


def disparity_to_depth(du: float, f: float, b: float) -> float:
    """Depth from rectified horizontal disparity: Z = f*b/du."""
    if du <= 0.0:
        raise NonPositiveDisparity(f"du={du}")
    return f * b / du


def depth_to_disparity(z: float, f: float, b: float) -> float:
    """Exact inverse of disparity_to_depth."""
    if z <= 0.0:
        raise NonPositiveDepth(f"Z={z}")
    return f * b / z


def epipolar_match(v_left: float, v_right: float, eps: float) -> bool:
    """Vertical-disparity test: |vL - vR| < eps (strict)."""
    return abs(v_left - v_right) < eps


@dataclass(frozen=True)
class Rectification:
    """Result of rectify().

    ``calibration`` has identical pinhole intrinsics in both views
    (fx == fy), zero distortion, identity rotation and a translation of
    [-baseline, 0, 0].  ``rot_left``/``rot_right`` map raw left / raw
    right camera coordinates into the corresponding rectified frame.
    """

    calibration: StereoCalibration
    rot_left: np.ndarray
    rot_right: np.ndarray
    right_center: np.ndarray  # right camera center in raw-left coordinates

    @property
    def fx(self) -> float:
        return self.calibration.left.fx

    @property
    def baseline(self) -> float:
        return self.calibration.baseline

    def project_left(self, point_leftcam) -> PixelPoint:
        """Project a raw-left-frame point into the rectified left view."""
        return camera_to_pixel(self.rot_left @ np.asarray(point_leftcam, float),
                               self.calibration.left)

    def project_right(self, point_leftcam) -> PixelPoint:
        """Project a raw-left-frame point into the rectified right view."""
        p = self.rot_left @ (np.asarray(point_leftcam, float) - self.right_center)
        return camera_to_pixel(p, self.calibration.right)

    def remap(self, view: str) -> Callable[[float, float], tuple[float, float]]:
        """Rectified-pixel -> raw-pixel lookup for resampling one view.

        ``view`` is "left" or "right".
        """
        if view == "left":
            raw_k, raw_d, rot = self.raw.left, self.raw.left_dist, self.rot_left
        elif view == "right":
            raw_k, raw_d, rot = self.raw.right, self.raw.right_dist, self.rot_right
        else:
            raise ValueError(f"unknown view {view!r}")
        new_k = self.calibration.left
        rot_t = rot.T

        def lookup(u: float, v: float) -> tuple[float, float]:
            x = (u - new_k.cx) / new_k.fx
            y = (v - new_k.cy) / new_k.fy
            d = rot_t @ np.array([x, y, 1.0])
            xn, yn = d[0] / d[2], d[1] / d[2]
            xd, yd = distort_point((xn, yn), raw_d)
            return raw_k.fx * xd + raw_k.cx, raw_k.fy * yd + raw_k.cy

        return lookup

    raw: StereoCalibration = None  # type: ignore[assignment]


def rectify(calib: StereoCalibration) -> Rectification:
    """Compute a planar rectification of the stereo head.

    The new common frame takes its x axis along the baseline (left
    center -> right center), so epipolar lines come out horizontal and a
    3-D point projects to the same row in both views.  Shared intrinsics
    are the mean of the input focal lengths / principal points.
    """
    t = calib.translation
    norm_t = float(np.linalg.norm(t))
    if norm_t == 0.0:
        raise DegenerateCalibration("zero baseline")
    # right camera center expressed in the left frame
    c_right = -calib.rotation.T @ t
    e1 = c_right / np.linalg.norm(c_right)
    # keep the new optical axis close to the old left axis
    z_old = np.array([0.0, 0.0, 1.0])
    e2 = np.cross(z_old, e1)
    n2 = np.linalg.norm(e2)
    if n2 < 1e-12:
        raise DegenerateCalibration("baseline parallel to optical axis")
    e2 = e2 / n2
    e3 = np.cross(e1, e2)
    rot_left = np.vstack([e1, e2, e3])
    rot_right = rot_left @ calib.rotation.T

    f_new = (calib.left.fx + calib.left.fy + calib.right.fx + calib.right.fy) / 4.0
    cx_new = (calib.left.cx + calib.right.cx) / 2.0
    cy_new = (calib.left.cy + calib.right.cy) / 2.0
    k_new = CameraIntrinsics(f_new, f_new, cx_new, cy_new)
    b = float(np.linalg.norm(c_right))
    rect_calib = StereoCalibration(
        left=k_new,
        right=k_new,
        left_dist=DistortionParams(),
        right_dist=DistortionParams(),
        rotation=np.eye(3),
        translation=np.array([-b, 0.0, 0.0]),
        baseline=b,
    )
    return Rectification(rect_calib, rot_left, rot_right, c_right, raw=calib)


def load_calibration(path_or_dict) -> StereoCalibration:
    """Load the calibration JSON file.

    Schema: {"left": {fx,fy,cx,cy}, "right": {...},
             "dist_left": [k1,k2,k3,p1,p2], "dist_right": [...],
             "rotation": 3x3, "translation_mm": [tx,ty,tz]}.
    Translation is stored in millimeters and converted to meters here.
    """
    if isinstance(path_or_dict, dict):
        raw = path_or_dict
    else:
        try:
            with open(path_or_dict) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ValidationError(str(exc), field="calibration") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}", field="calibration") from exc
    try:
        left = CameraIntrinsics(**{k: float(raw["left"][k]) for k in ("fx", "fy", "cx", "cy")})
        right = CameraIntrinsics(**{k: float(raw["right"][k]) for k in ("fx", "fy", "cx", "cy")})
        dl = [float(x) for x in raw["dist_left"]]
        dr = [float(x) for x in raw["dist_right"]]
        rotation = np.asarray(raw["rotation"], dtype=float)
        t_mm = np.asarray(raw["translation_mm"], dtype=float)
    except KeyError as exc:
        raise ValidationError(f"missing field {exc}", field="calibration") from exc
    if len(dl) != 5 or len(dr) != 5:
        raise ValidationError("distortion must have 5 coefficients", field="dist_left/dist_right")
    return StereoCalibration.create(
        left,
        right,
        DistortionParams(*dl),
        DistortionParams(*dr),
        rotation,
        t_mm / 1000.0,
    )


def identity_calibration(
    f: float, cx: float, cy: float, baseline: float
) -> StereoCalibration:
    """Already-rectified head: equal intrinsics, no distortion, pure x offset."""
    k = CameraIntrinsics(f, f, cx, cy)
    return StereoCalibration.create(
        k, k, DistortionParams(), DistortionParams(),
        np.eye(3), np.array([-baseline, 0.0, 0.0]),
    )
