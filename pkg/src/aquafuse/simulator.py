"""Deterministic world model.

Targets follow exact constant-velocity kinematics.  The sensing rig
itself may vibrate (white acceleration per axis, matching the filter's
process-noise model); all sensing happens in the rig/camera frame, so
the localization ground truth is the rig-relative target state.  With
vibration off, relative and world truth coincide.

RNG layout per run: SeedSequence(seed) spawns child 0 for the
segmentation oracle, child 1 for rig vibration, child 2+i for ultrasonic
sensor i, keeping streams stable under parallel sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .acoustic import RangeMeasurement, simulate_ping
from .errors import OutOfWindow
from .geometry import Rectification, rectify
from .scene import SceneConfig
from .shapes import (
    Figure,
    ViewSilhouette,
    is_fronto_parallel,
    project_disk_fronto,
    project_outline,
)

MAX_RIG_OFFSET = 0.3  # m; vibration beyond this means a misconfigured scene


@dataclass(frozen=True)
class FrameBundle:
    """Everything the pipeline sees at one tick."""

    frame_id: int
    t: float
    width: int
    height: int
    has_camera: bool
    silhouettes: dict[int, tuple[ViewSilhouette, ViewSilhouette]]
    truth: dict[int, np.ndarray]  # target id -> rig-relative [p; v]
    pings: list[RangeMeasurement]
    left_image: np.ndarray | None = None
    right_image: np.ndarray | None = None


@dataclass
class TickRecord:
    """One target at one tick, as stored in the run trace."""

    t: float
    target_id: int
    truth: np.ndarray  # rig-relative [px..vz]
    z_stereo: float | None
    z_acoustic: float | None
    z_fused: float | None
    flag: str
    seg_outcome: str
    realized_iou: float | None
    prior: np.ndarray | None
    posterior: np.ndarray | None

    @property
    def truth_pz(self) -> float:
        return float(self.truth[2])


@dataclass
class Trace:
    scene_name: str
    seed: int
    mode: str
    records: list[TickRecord] = field(default_factory=list)
    n_ticks: int = 0


def propagate(scene: SceneConfig, t: float) -> dict[int, np.ndarray]:
    """World-frame ground truth poses at time t (exact linear motion)."""
    if t < -1e-12 or t > scene.rates.duration + 1e-12:
        raise OutOfWindow(f"t={t} outside [0, {scene.rates.duration}]")
    return {
        tgt.id: tgt.position + tgt.velocity * t for tgt in scene.targets
    }


@dataclass
class RigState:
    """Vibration random walk of the sensing module."""

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def advance(self, dt: float, accel_var: np.ndarray, rng: np.random.Generator):
        a = rng.standard_normal(3) * np.sqrt(accel_var)
        self.p = self.p + self.v * dt + 0.5 * a * dt * dt
        self.v = self.v + a * dt
        if np.max(np.abs(self.p)) > MAX_RIG_OFFSET:
            raise OutOfWindow(
                f"rig vibration displacement {self.p} exceeds {MAX_RIG_OFFSET} m"
            )


class FrameSynthesizer:
    """Per-run synthesis state: rectification, rng streams, rig walk.

    Figure templates (outline vertices in the lamina plane) are
    precomputed per target; each tick only shifts them to the current
    rig-relative position.
    """

    def __init__(self, scene: SceneConfig):
        self.scene = scene
        self.rect: Rectification = rectify(scene.calibration)
        ss = np.random.SeedSequence(scene.seed)
        children = ss.spawn(2 + len(scene.sensors))
        self.rng_segmentation = np.random.default_rng(children[0])
        self._rng_rig = np.random.default_rng(children[1])
        self._rng_sensors = [np.random.default_rng(c) for c in children[2:]]
        self.rig = RigState()
        self._camera_every = int(round(1.0 / scene.rates.camera_hz / scene.rates.dt))
        self._acoustic_every = int(round(1.0 / scene.rates.acoustic_hz / scene.rates.dt))
        k = self.rect.calibration.left
        self.camera_f = k.fx
        self.camera_c = (k.cx, k.cy)
        self.baseline = self.rect.baseline
        self._fronto = is_fronto_parallel(self.rect.rot_left)
        self._templates: dict[int, tuple[Figure, np.ndarray | None]] = {}
        for tgt in scene.targets:
            template = tgt.figure_at((0.0, 0.0, 0.0))
            needs_outline = not (template.kind == "disk" and self._fronto)
            local3 = template.local_points3() if needs_outline else None
            self._templates[tgt.id] = (template, local3)

    def synthesize(self, k: int) -> FrameBundle:
        scene = self.scene
        t = k * scene.rates.dt
        if k > 0 and scene.noise.rig_vibration:
            self.rig.advance(scene.rates.dt, scene.filter_noise.accel_variance, self._rng_rig)
        world = propagate(scene, t)
        rel_truth: dict[int, np.ndarray] = {}
        rel_pos: dict[int, np.ndarray] = {}
        for tgt in scene.targets:
            rel_p = world[tgt.id] - self.rig.p
            rel_truth[tgt.id] = np.concatenate([rel_p, tgt.velocity - self.rig.v])
            rel_pos[tgt.id] = rel_p

        has_camera = k % self._camera_every == 0
        silhouettes: dict[int, tuple[ViewSilhouette, ViewSilhouette]] = {}
        left_img = right_img = None
        if has_camera:
            zero = (0.0, 0.0, 0.0)
            f = self.camera_f
            cx, cy = self.camera_c
            rot = self.rect.rot_left
            right_c = self.rect.right_center
            for tid, (template, local3) in self._templates.items():
                p = rel_pos[tid]
                if local3 is None:
                    r = template.radius * template.scale
                    sil_l = project_disk_fronto(p, r, rot, zero, f, cx, cy)
                    sil_r = project_disk_fronto(p, r, rot, right_c, f, cx, cy)
                else:
                    pts = (local3 + p).tolist()
                    sil_l = project_outline(pts, rot, zero, f, cx, cy)
                    sil_r = project_outline(pts, rot, right_c, f, cx, cy)
                silhouettes[tid] = (sil_l, sil_r)
            if scene.render.raster:
                w, h = scene.render.width, scene.render.height
                left_img = np.zeros((h, w), dtype=bool)
                right_img = np.zeros((h, w), dtype=bool)
                for sil_l, sil_r in silhouettes.values():
                    left_img |= sil_l.rasterize(w, h)
                    right_img |= sil_r.rasterize(w, h)

        pings: list[RangeMeasurement] = []
        if k % self._acoustic_every == 0:
            surfaces = []
            for tid, (template, _) in self._templates.items():
                p = rel_pos[tid]
                placed = Figure(
                    template.kind, p, template.radius, template.vertices,
                    template.scale, template._rect_half,
                )
                surfaces.append((p, placed.surface_distance))
            for sensor, rng in zip(scene.sensors, self._rng_sensors):
                pings.append(
                    simulate_ping(
                        sensor,
                        surfaces,
                        t,
                        rng,
                        sigma_rel=scene.noise.acoustic_sigma_rel,
                        r_min=scene.r_min,
                        r_max=scene.r_max,
                    )
                )

        return FrameBundle(
            frame_id=k,
            t=t,
            width=scene.render.width,
            height=scene.render.height,
            has_camera=has_camera,
            silhouettes=silhouettes,
            truth=rel_truth,
            pings=pings,
            left_image=left_img,
            right_image=right_img,
        )


def run(scene: SceneConfig, pipeline) -> Trace:
    """Drive a pipeline over every tick of a scene.

    ``pipeline`` provides process_tick(bundle) -> TickResult and the
    attributes ``mode_name`` and ``synthesizer``.  Emits one TickRecord
    per reported target per tick; raises with the tick index on failure.

    Providers that know ground-truth ids report under them directly.
    Anonymous tracks (external providers) are matched to the nearest true
    silhouette center for the truth columns, and the match is remembered
    across ticks without a camera frame.
    """
    trace = Trace(scene_name=scene.name, seed=scene.seed, mode=pipeline.mode_name)
    synth: FrameSynthesizer = pipeline.synthesizer
    truth_of_key: dict[int, int] = {}
    for k in range(scene.n_ticks):
        try:
            bundle = synth.synthesize(k)
            result = pipeline.process_tick(bundle)
        except Exception as exc:
            raise type(exc)(f"tick {k}: {exc}") from exc
        for key in sorted(result.targets):
            per_target = result.targets[key]
            if key in bundle.truth:
                tid = key
            else:
                tid = _match_truth(key, per_target, bundle, truth_of_key)
                if tid is None:
                    continue
            trace.records.append(
                TickRecord(
                    t=bundle.t,
                    target_id=tid,
                    truth=bundle.truth[tid],
                    z_stereo=per_target.z_stereo,
                    z_acoustic=per_target.z_acoustic,
                    z_fused=per_target.z_fused,
                    flag=per_target.flag,
                    seg_outcome=per_target.seg_outcome,
                    realized_iou=per_target.realized_iou,
                    prior=per_target.prior,
                    posterior=per_target.posterior,
                )
            )
        trace.n_ticks += 1
    return trace


def _match_truth(key: int, per_target, bundle: FrameBundle, memo: dict[int, int]) -> int | None:
    if per_target.left_center is not None and bundle.silhouettes:
        u, v = per_target.left_center
        best, best_d = None, math.inf
        for tid, (sil_l, _) in bundle.silhouettes.items():
            cu, cv = sil_l.box.center
            d = (u - cu) ** 2 + (v - cv) ** 2
            if d < best_d:
                best, best_d = tid, d
        if best is not None:
            memo[key] = best
            return best
    return memo.get(key)
