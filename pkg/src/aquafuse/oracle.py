"""Scene-truth segmentation provider with calibrated degradation.

The oracle knows the exact projected silhouettes and re-emits them
perturbed according to the illumination tables:

  * with probability failure_rate the segmentation fails: most failures
    surface as a low confidence score, the rest as vertical jitter of the
    right-view box large enough to break the epipolar check;
  * otherwise the realized mask quality is drawn from a Beta distribution
    around the table's mean IoU; the emitted figure is the truth eroded
    or dilated so its overlap with the truth equals the drawn value
    (concentric scaling is depth- and epipolar-neutral);
  * the stereo depth error of the table is injected by re-scaling the
    right-view horizontal coordinates so the five-point depth comes out
    at (1 + e) times truth.  At a fixed illumination this error is
    dominated by a systematic per-run mask bias: each target keeps one
    error sign for the whole run, with a small per-frame magnitude
    jitter.  (Per-frame sign flips would average the bias away and make
    the fused stream look better than the physical system it imitates.)

All draws come from one seeded generator, in deterministic target order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .illumination import IlluminationModel
from .masks import BoundingBox, Mask
from .segmentation import PromptPoint, TargetSegments, View
from .shapes import ViewSilhouette

FAILED_CONFIDENCE = 0.2
EMC_FAILURE_SHARE = 0.2  # fraction of failures realized as epipolar breaks


@dataclass
class DegradationConfig:
    """Per-scene overrides of the illumination-table behaviour."""

    enabled: bool = True
    failure_rate_override: float | None = None
    mean_iou_override: float | None = None
    depth_error_pct_override: float | None = None
    iou_concentration: float = 50.0
    depth_jitter_frac: float = 0.05
    pixel_jitter_u: float = 0.0
    pixel_jitter_v: float = 0.0

    @staticmethod
    def disabled() -> "DegradationConfig":
        return DegradationConfig(enabled=False)


@dataclass
class OracleSegmenter:
    """SegmentationProvider backed by simulator ground truth."""

    illumination: IlluminationModel
    lux: float
    shape_classes: dict[int, str]
    config: DegradationConfig
    rng: np.random.Generator
    epipolar_eps: float = 3.0
    render_masks: bool = False
    _bias_signs: dict[int, float] = field(init=False, default_factory=dict)

    def __post_init__(self):
        # one systematic depth-bias sign per target per run
        for tid in sorted(self.shape_classes):
            self._bias_signs[tid] = 1.0 if self.rng.random() < 0.5 else -1.0

    def _rates(self, target_id: int) -> tuple[float, float, float]:
        cls = self.shape_classes[target_id]
        c = self.config
        if not c.enabled:
            return 0.0, 1.0, 0.0
        fr = c.failure_rate_override
        if fr is None:
            fr = self.illumination.failure_rate(cls, self.lux)
        miou = c.mean_iou_override
        if miou is None:
            miou = self.illumination.mean_iou(cls, self.lux)
        derr = c.depth_error_pct_override
        if derr is None:
            derr = self.illumination.depth_error_pct(cls, self.lux)
        return fr, miou, derr

    def segment(self, frame, prompts: list[PromptPoint]) -> list[TargetSegments]:
        """Emit one (possibly degraded) segment per claimed target.

        A prompt claims the target whose true silhouette contains it; an
        empty prompt list claims every target in the frame.  Claimed
        targets are processed in ascending id order so the random stream
        does not depend on prompt order.
        """
        silhouettes: dict[int, tuple[ViewSilhouette, ViewSilhouette]] = frame.silhouettes
        if prompts:
            claimed = set()
            for prompt in prompts:
                for tid, (sil_l, sil_r) in silhouettes.items():
                    sil = sil_l if prompt.view is View.LEFT else sil_r
                    if sil.contains(prompt.pixel.u, prompt.pixel.v):
                        claimed.add(tid)
        else:
            claimed = set(silhouettes)
        out = []
        for tid in sorted(claimed):
            out.append(self._emit(frame, tid))
        return out

    def _emit(self, frame, target_id: int) -> TargetSegments:
        sil_l, sil_r = frame.silhouettes[target_id]
        fr, mean_iou, depth_err_pct = self._rates(target_id)
        rng = self.rng
        cfg = self.config

        failed = rng.random() < fr
        emc_break = failed and rng.random() < EMC_FAILURE_SHARE

        # realized quality; skipped draws would desynchronize the stream
        if mean_iou >= 1.0:
            t = 1.0
        else:
            nu = cfg.iou_concentration
            t = float(rng.beta(mean_iou * nu, (1.0 - mean_iou) * nu))
        grow = rng.random() < 0.5
        scale = 1.0 / np.sqrt(t) if grow else float(np.sqrt(t))

        if depth_err_pct > 0.0:
            jitter = cfg.depth_jitter_frac * rng.standard_normal()
            e_rel = self._bias_signs[target_id] * (depth_err_pct / 100.0) * (1.0 + jitter)
        else:
            e_rel = 0.0

        box_l = _scaled_box(sil_l.box, scale)
        box_r = _scaled_box(sil_r.box, scale)
        if e_rel != 0.0:
            # shrink the disparity of every key point by 1/(1+e): the
            # five-point depth becomes exactly (1+e) * truth
            cu_l, _ = box_l.center
            cu_r, _ = box_r.center
            d_true = cu_l - cu_r
            d_meas = d_true / (1.0 + e_rel)
            box_r = box_r.shifted(d_true - d_meas, 0.0)
        if emc_break:
            box_r = box_r.shifted(0.0, self.epipolar_eps * (2.0 + abs(rng.standard_normal())))
        if cfg.pixel_jitter_u > 0.0 or cfg.pixel_jitter_v > 0.0:
            ju, jv = cfg.pixel_jitter_u, cfg.pixel_jitter_v
            box_l = _jitter_box(box_l, ju, jv, rng)
            box_r = _jitter_box(box_r, ju, jv, rng)

        confidence = FAILED_CONFIDENCE if (failed and not emc_break) else t
        left_mask = right_mask = None
        if self.render_masks:
            left_mask = Mask(
                frame.width, frame.height,
                _scaled_silhouette(sil_l, scale).rasterize(frame.width, frame.height),
                confidence,
            )
            right_mask = Mask(
                frame.width, frame.height,
                _scaled_silhouette(sil_r, scale).rasterize(frame.width, frame.height),
                confidence,
            )
        return TargetSegments(
            target_id=target_id,
            left_box=box_l,
            right_box=box_r,
            confidence=confidence,
            left_mask=left_mask,
            right_mask=right_mask,
            realized_iou=t,
        )


def _scaled_box(box: BoundingBox, scale: float) -> BoundingBox:
    cu, cv = box.center
    hw = box.width / 2.0 * scale
    hh = box.height / 2.0 * scale
    return BoundingBox(cu - hw, cv - hh, cu + hw, cv + hh)


def _scaled_silhouette(sil: ViewSilhouette, scale: float) -> ViewSilhouette:
    if scale == 1.0:
        return sil
    if sil.circle is not None:
        uc, vc, r = sil.circle
        return ViewSilhouette(_scaled_box(sil.box, scale), None,
                              circle=(uc, vc, r * scale))
    cu, cv = sil.box.center
    outline = (sil.outline_uv - (cu, cv)) * scale + (cu, cv)
    return ViewSilhouette(_scaled_box(sil.box, scale), outline)


def _jitter_box(box: BoundingBox, sigma_u: float, sigma_v: float, rng) -> BoundingBox:
    du = rng.standard_normal(2) * sigma_u
    dv = rng.standard_normal(2) * sigma_v
    return BoundingBox(
        box.u_min + du[0], box.v_min + dv[0], box.u_max + du[1], box.v_max + dv[1]
    )
