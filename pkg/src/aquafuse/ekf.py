"""Extended Kalman filter for 3-D target position and velocity.

State x = [px, py, pz, vx, vy, vz] in the rectified camera frame,
input u = [ax, ay, az].  Constant-velocity process:

    x_k = A x_{k-1} + B u_{k-1} + w,   w ~ N(0, Q)

with A = [[I, dt*I], [0, I]], B = [[dt^2/2 * I], [dt * I]].  The process
noise comes from white acceleration of variance (sx, sy, sz) per axis:

    Q = [[dt^4/4 * Qb, dt^3/2 * Qb], [dt^3/2 * Qb, dt^2 * Qb]],
    Qb = diag(sx, sy, sz).

Measurement z = [u, v, d_u, d_r]: left-view pixel of the target center,
horizontal disparity and acoustic range:

    h(x) = [fu*px/pz + cu, fv*py/pz + cv, b*fu/pz, pz].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NegativeVariance,
    NonPositiveDepth,
    NonPositiveDt,
    SingularInnovation,
    ValidationError,
)


@dataclass(frozen=True)
class CameraParams:
    """Rectified intrinsics plus baseline, as used by the measurement model."""

    fu: float
    fv: float
    cu: float
    cv: float
    b: float


@dataclass(frozen=True)
class NoiseConfig:
    """Filter noise configuration.

    ``accel_variance`` entries are variances in (m/s^2)^2.  ``r`` is the
    4x4 measurement covariance (px^2, px^2, px^2, m^2); ``p0`` the
    initial state covariance.
    """

    accel_variance: np.ndarray
    r: np.ndarray
    p0: np.ndarray

    def __post_init__(self):
        av = np.asarray(self.accel_variance, dtype=float).reshape(3)
        r = np.asarray(self.r, dtype=float)
        p0 = np.asarray(self.p0, dtype=float)
        if np.any(av < 0):
            raise NegativeVariance("acceleration variance must be >= 0")
        for name, m, dim in (("r", r, 4), ("p0", p0, 6)):
            if m.shape != (dim, dim):
                raise ValidationError(f"must be {dim}x{dim}", field=name)
            if np.max(np.abs(m - m.T)) > 1e-12:
                raise ValidationError("must be symmetric", field=name)
            if np.min(np.linalg.eigvalsh(m)) < -1e-12:
                raise ValidationError("must be PSD", field=name)
        object.__setattr__(self, "accel_variance", av)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "p0", p0)

    @staticmethod
    def default() -> "NoiseConfig":
        return NoiseConfig(
            accel_variance=np.full(3, 1e-4),
            r=np.diag([4.0, 4.0, 4.0, 2.5e-5]),
            p0=np.diag([1e-2] * 6),
        )


@dataclass
class TrackState:
    """Filter state of one tracked target."""

    x: np.ndarray
    p: np.ndarray
    last_update: float
    target_id: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(6)
        self.p = np.asarray(self.p, dtype=float)
        if self.p.shape != (6, 6):
            raise ValidationError("covariance must be 6x6", field="p")
        if np.max(np.abs(self.p - self.p.T)) > 1e-9:
            raise ValidationError("covariance must be symmetric", field="p")

    def copy(self) -> "TrackState":
        return TrackState(self.x.copy(), self.p.copy(), self.last_update, self.target_id)


def build_AB(dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Discrete constant-velocity system and input matrices."""
    if dt <= 0.0:
        raise NonPositiveDt(f"dt={dt}")
    i3 = np.eye(3)
    A = np.block([[i3, dt * i3], [np.zeros((3, 3)), i3]])
    B = np.vstack([0.5 * dt * dt * i3, dt * i3])
    return A, B


def build_Q(dt: float, accel_variance) -> np.ndarray:
    """White-acceleration process noise covariance."""
    if dt <= 0.0:
        raise NonPositiveDt(f"dt={dt}")
    av = np.asarray(accel_variance, dtype=float).reshape(3)
    if np.any(av < 0):
        raise NegativeVariance(f"accel variance {av}")
    qb = np.diag(av)
    return np.block(
        [
            [0.25 * dt**4 * qb, 0.5 * dt**3 * qb],
            [0.5 * dt**3 * qb, dt**2 * qb],
        ]
    )


def measure_h(x, cam: CameraParams) -> np.ndarray:
    """Predicted measurement [u, v, d_u, d_r] for state x."""
    px, py, pz = float(x[0]), float(x[1]), float(x[2])
    if pz <= 0.0:
        raise NonPositiveDepth(f"pz={pz}")
    return np.array(
        [
            cam.fu * px / pz + cam.cu,
            cam.fv * py / pz + cam.cv,
            cam.b * cam.fu / pz,
            pz,
        ]
    )


def jacobian_H(x, cam: CameraParams) -> np.ndarray:
    """Jacobian of measure_h with respect to the state."""
    px, py, pz = float(x[0]), float(x[1]), float(x[2])
    if pz <= 0.0:
        raise NonPositiveDepth(f"pz={pz}")
    H = np.zeros((4, 6))
    H[0, 0] = cam.fu / pz
    H[0, 2] = -cam.fu * px / pz**2
    H[1, 1] = cam.fv / pz
    H[1, 2] = -cam.fv * py / pz**2
    H[2, 2] = -cam.b * cam.fu / pz**2
    H[3, 2] = 1.0
    return H


def predict(track: TrackState, u, dt: float, q: np.ndarray) -> TrackState:
    """Time update: returns the prior at track.last_update + dt."""
    if dt <= 0.0:
        raise NonPositiveDt(f"dt={dt}")
    A, B = build_AB(dt)
    x_prior = A @ track.x + B @ np.asarray(u, dtype=float).reshape(3)
    p_prior = A @ track.p @ A.T + q
    return TrackState(x_prior, p_prior, track.last_update + dt, track.target_id)


def update(prior: TrackState, z, cam: CameraParams, r: np.ndarray) -> TrackState:
    """Measurement update; covariance is symmetrized afterwards."""
    z = np.asarray(z, dtype=float).reshape(4)
    H = jacobian_H(prior.x, cam)
    S = H @ prior.p @ H.T + np.asarray(r, dtype=float)
    try:
        # solve for K via S K^T = (P H^T)^T instead of forming S^-1
        K = np.linalg.solve(S, (prior.p @ H.T).T).T
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation(str(exc)) from exc
    if not np.all(np.isfinite(K)):
        raise SingularInnovation("non-finite Kalman gain")
    innovation = z - measure_h(prior.x, cam)
    x_post = prior.x + K @ innovation
    p_post = (np.eye(6) - K @ H) @ prior.p
    p_post = (p_post + p_post.T) / 2.0
    return TrackState(x_post, p_post, prior.last_update, prior.target_id)


def step(
    track: TrackState,
    u,
    dt: float,
    z,
    cam: CameraParams,
    noise: NoiseConfig,
) -> tuple[TrackState, TrackState]:
    """One predict/update cycle.

    ``z`` may be None (dropped measurement), in which case the posterior
    is the prior.  Returns (prior, posterior) so that both can feed the
    prior-vs-posterior error statistics.
    """
    q = build_Q(dt, noise.accel_variance)
    prior = predict(track, u, dt, q)
    if z is None:
        return prior, prior.copy()
    posterior = update(prior, z, cam, noise.r)
    return prior, posterior


def init_track(
    target_id: int,
    center_uv: tuple[float, float],
    fused_depth: float,
    cam: CameraParams,
    noise: NoiseConfig,
    timestamp: float,
) -> TrackState:
    """First track state: back-projected center at the fused depth, zero velocity."""
    if fused_depth <= 0.0:
        raise NonPositiveDepth(f"depth={fused_depth}")
    u, v = center_uv
    px = (u - cam.cu) / cam.fu * fused_depth
    py = (v - cam.cv) / cam.fv * fused_depth
    x0 = np.array([px, py, fused_depth, 0.0, 0.0, 0.0])
    return TrackState(x0, noise.p0.copy(), timestamp, target_id)
