"""aquafuse: stereo + ultrasonic close-range target localization.

Library, CLI and deterministic simulator for a multi-modal localization
pipeline: acoustic-prompted segmentation, epipolar-matched stereo
ranging, weighted-average depth fusion, and EKF position/velocity
tracking, with an illumination-degradation model for the segmenter.
"""

from . import acoustic, ekf, fusion, geometry, illumination, masks, metrics
from .errors import AquafuseError
from .pipeline import Mode, Pipeline, PipelineConfig, make_pipeline
from .scene import SceneConfig, load_scene
from .simulator import FrameBundle, Trace, propagate, run

__version__ = "0.1.0"

__all__ = [
    "AquafuseError",
    "FrameBundle",
    "Mode",
    "Pipeline",
    "PipelineConfig",
    "SceneConfig",
    "Trace",
    "acoustic",
    "ekf",
    "fusion",
    "geometry",
    "illumination",
    "load_scene",
    "make_pipeline",
    "masks",
    "metrics",
    "propagate",
    "run",
]
