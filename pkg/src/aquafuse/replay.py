"""Replay recorded bundles through the pipeline.

Bundle files are newline-delimited JSON, one frame per line, using the
wire protocol's synthetic image schema plus the acoustic pings:

  {"frame_id": 0, "t": 0.0,
   "synthetic": {"width": W, "height": H, "left_rle": [...], "right_rle": [...]},
   "pings": [{"sensor_id": 0, "distance": 0.61}, ...]}

Replay has no ground truth, so the segmentation provider must work from
the images: the in-process luminance-component segmenter by default, or
an external bridge.
"""

from __future__ import annotations

import json

from .acoustic import RangeMeasurement, RangeStatus, validate_range
from .bridge_client import LuminanceComponentSegmenter
from .errors import ParseError
from .masks import rle_decode
from .pipeline import Mode, Pipeline, PipelineConfig, TickResult
from .scene import SceneConfig
from .simulator import FrameBundle, FrameSynthesizer


def parse_bundle_line(line: str, index: int) -> FrameBundle:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bundle line {index}: {exc}") from exc
    syn = raw.get("synthetic")
    if syn is None:
        raise ParseError(f"bundle line {index}: missing synthetic block")
    width, height = int(syn["width"]), int(syn["height"])
    left = rle_decode(syn["left_rle"], width, height)
    right = rle_decode(syn["right_rle"], width, height)
    t = float(raw.get("t", index))
    pings = []
    for p in raw.get("pings", []):
        d = float(p["distance"])
        pings.append(
            RangeMeasurement(
                sensor_id=int(p["sensor_id"]),
                distance=d,
                timestamp=float(p.get("timestamp", t)),
                status=RangeStatus(p["status"]) if "status" in p else RangeStatus.VALID,
            )
        )
    return FrameBundle(
        frame_id=int(raw.get("frame_id", index)),
        t=t,
        width=width,
        height=height,
        has_camera=True,
        silhouettes={},
        truth={},
        pings=pings,
        left_image=left,
        right_image=right,
    )


def replay_bundles(
    scene: SceneConfig,
    bundles_path: str,
    mode: Mode,
    bridge_spec: str | None = None,
) -> list[TickResult]:
    """Run the pipeline over a recorded bundle file.

    ``scene`` supplies the rig configuration (calibration, sensors,
    thresholds); its targets/noise blocks are ignored.
    """
    synth = FrameSynthesizer(scene)
    if bridge_spec:
        from .bridge_client import BridgeSegmenter

        provider = BridgeSegmenter.from_spec(bridge_spec)
    else:
        provider = LuminanceComponentSegmenter()
    config = PipelineConfig.from_overrides(mode, scene.pipeline_overrides)
    pipeline = Pipeline(scene, synth, provider, config)
    results = []
    try:
        with open(bundles_path) as fh:
            for i, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                bundle = parse_bundle_line(line, i)
                # re-gate recorded pings against this rig's thresholds
                gated = [
                    RangeMeasurement(
                        p.sensor_id,
                        p.distance,
                        p.timestamp,
                        validate_range(p.distance, scene.r_min, scene.r_max)
                        if p.status is RangeStatus.VALID
                        else p.status,
                    )
                    for p in bundle.pings
                ]
                bundle = FrameBundle(
                    frame_id=bundle.frame_id,
                    t=bundle.t,
                    width=bundle.width,
                    height=bundle.height,
                    has_camera=True,
                    silhouettes={},
                    truth={},
                    pings=gated,
                    left_image=bundle.left_image,
                    right_image=bundle.right_image,
                )
                results.append(pipeline.process_tick(bundle))
    except OSError as exc:
        raise ParseError(f"cannot read {bundles_path}: {exc}") from exc
    return results
