"""Per-tick localization pipeline.

Follows the gated flow of the multi-modal localization loop: range gate,
rectification, prompted segmentation, confidence gate, five-pair
epipolar check, then either weighted-average ranging or the EKF.  Every
failed gate routes that modality to extrapolation; a tick never aborts.

Flags: the trace ``flag`` column is "ok", "extrapolated_segmentation",
"extrapolated_range", or "extrapolated_range+extrapolated_segmentation"
(the two modalities degrade independently).  The gate that tripped the
optical side is recorded in ``seg_outcome``: ok / low_confidence /
emc_failed / no_mask / no_frame / provider_error.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import ekf
from .errors import (
    NonPositiveDepth,
    OutOfFrame,
    ProviderUnavailable,
    StaleTimestamp,
    ValidationError,
)
from .fusion import RangeHistory, compute_alpha, extrapolate, fuse_range
from .illumination import IlluminationModel
from .scene import SceneConfig
from .segmentation import (
    PromptPoint,
    SegmentationProvider,
    TargetSegments,
    View,
    extract_key_point_pairs,
    match_stereo_masks,
    range_to_prompt,
)
from .simulator import FrameBundle, FrameSynthesizer


class Mode(enum.Enum):
    RANGING_ONLY = "ranging"
    FULL_EKF = "ekf"


class SegOutcome:
    OK = "ok"
    LOW_CONFIDENCE = "low_confidence"
    EMC_FAILED = "emc_failed"
    NO_MASK = "no_mask"
    NO_FRAME = "no_frame"
    PROVIDER_ERROR = "provider_error"


@dataclass(frozen=True)
class PipelineConfig:
    mode: Mode = Mode.RANGING_ONLY
    confidence_threshold: float = 0.5  # c_s_th
    epipolar_eps: float = 3.0
    alpha_source: str = "from_illumination"  # or "fixed"
    alpha: float = 0.24
    acoustic_error_pct: float = 1.75
    window: int = 5
    association_gate_px: float = 20.0
    retire_after: int = 10
    confirm_hits: int = 2

    def __post_init__(self):
        if self.confidence_threshold <= 0 or self.epipolar_eps <= 0:
            raise ValidationError("thresholds must be positive", field="pipeline")
        if self.alpha_source not in ("fixed", "from_illumination"):
            raise ValidationError(
                f"unknown alpha source {self.alpha_source!r}", field="alpha_source"
            )
        if self.association_gate_px <= 0:
            raise ValidationError("gate must be positive", field="association_gate_px")

    @staticmethod
    def from_overrides(mode: Mode, overrides: dict) -> "PipelineConfig":
        mapping = {
            "c_s_th": "confidence_threshold",
            "eps": "epipolar_eps",
            "alpha_source": "alpha_source",
            "alpha": "alpha",
            "acoustic_error_pct": "acoustic_error_pct",
            "window": "window",
            "association_gate_px": "association_gate_px",
            "retire_after": "retire_after",
            "confirm_hits": "confirm_hits",
        }
        kw = {"mode": mode}
        for key, attr in mapping.items():
            if key in overrides:
                kw[attr] = overrides[key]
        return PipelineConfig(**kw)


def associate_tracks(
    observations: Sequence[tuple[int, tuple[float, float]]],
    tracks: Mapping[int, tuple[float, float]],
    gate_px: float,
) -> dict[int, int | None]:
    """Greedy one-to-one nearest-neighbour assignment.

    ``observations`` are (label, left-view center) pairs with unique
    labels; ``tracks`` maps track key to its last center.  Pairs are
    claimed globally in order of (distance, label, track key), so the
    result does not depend on input ordering; observations farther than
    ``gate_px`` from every free track map to None (new track).
    """
    if gate_px <= 0:
        raise ValidationError("gate must be positive", field="gate_px")
    candidates = []
    for label, (u, v) in observations:
        for key, (tu, tv) in tracks.items():
            d = math.hypot(u - tu, v - tv)
            if d <= gate_px:
                candidates.append((d, label, key))
    candidates.sort()
    assigned: dict[int, int | None] = {label: None for label, _ in observations}
    used_tracks: set[int] = set()
    taken: set[int] = set()
    for d, label, key in candidates:
        if label in taken or key in used_tracks:
            continue
        assigned[label] = key
        taken.add(label)
        used_tracks.add(key)
    return assigned


@dataclass
class PerTargetResult:
    z_stereo: float | None = None
    z_acoustic: float | None = None
    z_fused: float | None = None
    flag: str = "ok"
    seg_outcome: str = SegOutcome.OK
    realized_iou: float | None = None
    prior: np.ndarray | None = None
    posterior: np.ndarray | None = None
    left_center: tuple[float, float] | None = None


@dataclass
class TickResult:
    t: float
    targets: dict[int, PerTargetResult] = field(default_factory=dict)


@dataclass
class _Track:
    key: int
    left_center: tuple[float, float]
    hits: int = 1
    misses: int = 0
    hist_stereo: RangeHistory = field(default_factory=lambda: RangeHistory(5))
    hist_acoustic: RangeHistory = field(default_factory=lambda: RangeHistory(5))
    ekf_state: ekf.TrackState | None = None


@dataclass
class _Observation:
    segment: TargetSegments
    center: tuple[float, float]
    sensors: list[int]
    track: _Track | None = None
    stereo_ok: bool = False
    per: PerTargetResult | None = None


class Pipeline:
    """Stateful per-run pipeline; drive it with process_tick per bundle."""

    def __init__(
        self,
        scene: SceneConfig,
        synthesizer: FrameSynthesizer,
        provider: SegmentationProvider,
        config: PipelineConfig,
        illumination: IlluminationModel | None = None,
    ):
        self.scene = scene
        self.synthesizer = synthesizer
        self.provider = provider
        self.config = config
        self.illumination = illumination or IlluminationModel.default()
        rect = synthesizer.rect
        k = rect.calibration.left
        self.cam = ekf.CameraParams(fu=k.fx, fv=k.fy, cu=k.cx, cv=k.cy, b=rect.baseline)
        self.alpha = self._resolve_alpha()
        self._tracks: dict[int, _Track] = {}
        self._auto_key = 0
        self._last_t = -math.inf
        self._sensors = {s.id: s for s in scene.sensors}

    @property
    def mode_name(self) -> str:
        return self.config.mode.value

    def _resolve_alpha(self) -> float:
        if self.config.alpha_source == "fixed":
            return self.config.alpha
        shape_class = self.scene.targets[0].shape_class
        e_b = self.illumination.depth_error_pct(shape_class, self.scene.lux)
        return compute_alpha(e_b, self.config.acoustic_error_pct)

    def _make_prompts(self, valid_pings) -> list[PromptPoint]:
        prompts = []
        k = self.synthesizer.rect.calibration.left
        w, h = self.scene.render.width, self.scene.render.height
        for sensor_id, meas in sorted(valid_pings.items()):
            sensor = self._sensors[sensor_id]
            for view in (View.LEFT, View.RIGHT):
                try:
                    prompts.append(
                        range_to_prompt(
                            sensor, meas.distance, k, w, h,
                            view=view, baseline=self.synthesizer.rect.baseline,
                        )
                    )
                except OutOfFrame:
                    continue
        return prompts

    def _claiming_sensors(self, segment: TargetSegments, prompts) -> list[int]:
        ids = set()
        for p in prompts:
            box = segment.left_box if p.view is View.LEFT else segment.right_box
            if box.contains(p.pixel.u, p.pixel.v):
                ids.add(p.source_sensor_id)
        return sorted(ids)

    def _bind_tracks(self, observations: list[_Observation]) -> None:
        """Attach each observation to a track, spawning where needed.

        Providers that know stable target ids (the oracle) bind by id;
        anonymous observations go through nearest-neighbour association.
        """
        anonymous: list[_Observation] = []
        for obs in observations:
            tid = obs.segment.target_id
            if tid is None:
                anonymous.append(obs)
                continue
            track = self._tracks.get(tid)
            if track is None:
                track = _Track(key=tid, left_center=obs.center)
                self._reset_histories(track)
                self._tracks[tid] = track
            else:
                track.left_center = obs.center
                track.hits += 1
                track.misses = 0
            obs.track = track
        if not anonymous:
            return
        bound = {o.track.key for o in observations if o.track is not None}
        free = {
            key: t.left_center for key, t in self._tracks.items() if key not in bound
        }
        ordered = sorted(anonymous, key=lambda o: o.center)
        assignment = associate_tracks(
            [(i, obs.center) for i, obs in enumerate(ordered)],
            free,
            self.config.association_gate_px,
        )
        for i, obs in enumerate(ordered):
            key = assignment[i]
            if key is None:
                self._auto_key += 1
                track = _Track(key=-self._auto_key, left_center=obs.center)
                self._reset_histories(track)
                self._tracks[track.key] = track
            else:
                track = self._tracks[key]
                track.left_center = obs.center
                track.hits += 1
                track.misses = 0
            obs.track = track

    def _reset_histories(self, track: _Track) -> None:
        track.hist_stereo = RangeHistory(self.config.window)
        track.hist_acoustic = RangeHistory(self.config.window)

    def process_tick(self, bundle: FrameBundle) -> TickResult:
        if bundle.t <= self._last_t:
            raise StaleTimestamp(f"bundle at t={bundle.t} after t={self._last_t}")
        self._last_t = bundle.t
        cfg = self.config
        result = TickResult(t=bundle.t)

        # range gate (invalid pings drop out here; their targets extrapolate)
        valid_pings = {p.sensor_id: p for p in bundle.pings if p.usable}

        # prompted segmentation
        segments: list[TargetSegments] | None
        seg_fail_reason = None
        prompts: list[PromptPoint] = []
        if not bundle.has_camera:
            segments, seg_fail_reason = None, SegOutcome.NO_FRAME
        else:
            prompts = self._make_prompts(valid_pings)
            try:
                segments = self.provider.segment(bundle, prompts)
            except ProviderUnavailable:
                segments, seg_fail_reason = None, SegOutcome.PROVIDER_ERROR

        observations = [
            _Observation(
                segment=seg,
                center=seg.left_box.center,
                sensors=self._claiming_sensors(seg, prompts),
            )
            for seg in (segments or [])
        ]
        self._bind_tracks(observations)

        # confidence gate then five-pair epipolar gate
        for obs in observations:
            seg = obs.segment
            per = PerTargetResult(left_center=obs.center, realized_iou=seg.realized_iou)
            if seg.confidence < cfg.confidence_threshold:
                per.seg_outcome = SegOutcome.LOW_CONFIDENCE
            else:
                pairs = extract_key_point_pairs(seg.left_box, seg.right_box)
                match = match_stereo_masks(
                    obs.track.key, pairs, cfg.epipolar_eps, self.cam.fu, self.cam.b
                )
                if match.valid:
                    obs.stereo_ok = True
                    per.z_stereo = match.stereo_depth
                else:
                    per.seg_outcome = SegOutcome.EMC_FAILED
            obs.per = per

        # tracks that saw nothing this tick: miss bookkeeping + retirement
        seen = {obs.track.key for obs in observations}
        for key, track in list(self._tracks.items()):
            if key in seen:
                continue
            track.misses += 1
            if track.misses > cfg.retire_after or track.hits < cfg.confirm_hits:
                del self._tracks[key]
                continue
            observations.append(
                _Observation(
                    segment=None,  # type: ignore[arg-type]
                    center=track.left_center,
                    sensors=[],
                    track=track,
                    stereo_ok=False,
                    per=PerTargetResult(
                        left_center=track.left_center,
                        seg_outcome=seg_fail_reason or SegOutcome.NO_MASK,
                    ),
                )
            )

        # per-modality values, fusion, filter dispatch
        for obs in observations:
            track, per, t = obs.track, obs.per, bundle.t

            if obs.stereo_ok:
                track.hist_stereo.push(t, per.z_stereo)
                stereo_extrapolated = False
            else:
                per.z_stereo = self._extrapolated(track.hist_stereo, t)
                stereo_extrapolated = True

            if obs.sensors:
                z_r = valid_pings[min(obs.sensors)].distance
                track.hist_acoustic.push(t, z_r)
                acoustic_extrapolated = False
            else:
                z_r = self._extrapolated(track.hist_acoustic, t)
                acoustic_extrapolated = True
            per.z_acoustic = z_r

            parts = []
            if acoustic_extrapolated:
                parts.append("extrapolated_range")
            if stereo_extrapolated:
                parts.append("extrapolated_segmentation")
            per.flag = "+".join(parts) if parts else "ok"

            z_b = per.z_stereo
            if z_b is not None and z_r is not None and z_b > 0 and z_r > 0:
                per.z_fused = fuse_range(z_b, z_r, self.alpha)

            if cfg.mode is Mode.FULL_EKF:
                self._ekf_step(track, obs, per, t)

            result.targets[track.key] = per
        return result

    @staticmethod
    def _extrapolated(history: RangeHistory, t: float) -> float | None:
        if len(history) == 0:
            return None
        return extrapolate(history, t)

    def _ekf_step(self, track: _Track, obs: _Observation, per: PerTargetResult, t: float) -> None:
        measurement = None
        if obs.stereo_ok and obs.sensors and per.z_acoustic is not None:
            seg = obs.segment
            cu, cv = seg.left_box.center
            du = seg.left_box.center[0] - seg.right_box.center[0]
            if du > 0:
                measurement = np.array([cu, cv, du, per.z_acoustic])

        if track.ekf_state is None:
            if measurement is not None and per.z_fused is not None:
                track.ekf_state = ekf.init_track(
                    track.key, (measurement[0], measurement[1]), per.z_fused,
                    self.cam, self.scene.filter_noise, t,
                )
                per.prior = track.ekf_state.x.copy()
                per.posterior = track.ekf_state.x.copy()
            return

        dt = t - track.ekf_state.last_update
        if dt <= 0:
            return
        try:
            prior, posterior = ekf.step(
                track.ekf_state, np.zeros(3), dt, measurement,
                self.cam, self.scene.filter_noise,
            )
        except NonPositiveDepth:
            return
        track.ekf_state = posterior
        per.prior = prior.x.copy()
        per.posterior = posterior.x.copy()


def make_pipeline(
    scene: SceneConfig,
    mode: Mode,
    provider: SegmentationProvider | None = None,
    bridge_spec: str | None = None,
) -> Pipeline:
    """Wire a scene into a ready pipeline.

    ``provider`` defaults to the in-process oracle; set ``bridge_spec``
    ("host:port" or "stdio:<command>") to use an external segmentation
    server instead.
    """
    synth = FrameSynthesizer(scene)
    config = PipelineConfig.from_overrides(mode, scene.pipeline_overrides)
    illumination = IlluminationModel.default()
    if provider is None:
        if bridge_spec:
            from .bridge_client import BridgeSegmenter

            provider = BridgeSegmenter.from_spec(bridge_spec)
        else:
            from .oracle import OracleSegmenter

            provider = OracleSegmenter(
                illumination=illumination,
                lux=scene.lux,
                shape_classes=scene.shape_classes(),
                config=scene.noise.degradation,
                rng=synth.rng_segmentation,
                epipolar_eps=config.epipolar_eps,
                render_masks=scene.render.raster,
            )
    return Pipeline(scene, synth, provider, config, illumination)
