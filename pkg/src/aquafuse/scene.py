"""Declarative simulation scenes.

A scene file (JSON, ``"schema": 1``) describes targets, stereo
calibration, the ultrasonic sensor ring, illumination, rates and noise.
Everything that affects simulator output lives here so a (scene, seed)
pair pins a run down bit for bit.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .acoustic import UltrasonicSensor
from .ekf import NoiseConfig
from .errors import ParseError, ValidationError
from .geometry import StereoCalibration, load_calibration
from .illumination import DEFAULT_TABLES
from .oracle import DegradationConfig
from .shapes import Figure, figure_for_shape

SCENE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TargetSpec:
    id: int
    shape: dict
    shape_class: str
    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float).reshape(3))

    def figure_at(self, position) -> Figure:
        return figure_for_shape(self.shape, position)


@dataclass(frozen=True)
class Rates:
    camera_hz: float
    acoustic_hz: float
    dt: float
    duration: float


@dataclass(frozen=True)
class Render:
    width: int = 1280
    height: int = 960
    raster: bool = False


@dataclass(frozen=True)
class SceneNoise:
    """Simulation-side noise switches (the filter's NoiseConfig is separate)."""

    acoustic_sigma_rel: float = 0.0
    degradation: DegradationConfig = field(default_factory=DegradationConfig.disabled)
    rig_vibration: bool = False


@dataclass(frozen=True)
class SceneConfig:
    name: str
    targets: list[TargetSpec]
    calibration: StereoCalibration
    sensors: list[UltrasonicSensor]
    lux: float
    rates: Rates
    noise: SceneNoise
    filter_noise: NoiseConfig
    seed: int
    render: Render
    r_min: float = 0.2
    r_max: float = 1.5
    pipeline_overrides: dict = field(default_factory=dict)

    @property
    def n_ticks(self) -> int:
        return int(round(self.rates.duration / self.rates.dt))

    def shape_classes(self) -> dict[int, str]:
        return {t.id: t.shape_class for t in self.targets}


def _require(raw: dict, key: str, path: str):
    if key not in raw:
        raise ValidationError("missing", field=f"{path}.{key}" if path else key)
    return raw[key]


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc


def load_scene(path: str) -> SceneConfig:
    """Load and validate a scene file; raises ParseError / ValidationError."""
    raw = _load_json(path)
    return scene_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)),
                           name=os.path.splitext(os.path.basename(path))[0])


def scene_from_dict(raw: dict, base_dir: str = ".", name: str = "scene") -> SceneConfig:
    if _require(raw, "schema", "") != SCENE_SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema {raw.get('schema')!r}", field="schema")

    lux = float(_require(raw, "lux", ""))
    if lux <= 0:
        raise ValidationError("must be > 0", field="lux")
    if "seed" not in raw:
        raise ValidationError("missing", field="seed")
    seed = int(raw["seed"])

    calib_raw = _require(raw, "calibration", "")
    if isinstance(calib_raw, str):
        calibration = load_calibration(os.path.join(base_dir, calib_raw))
    else:
        calibration = load_calibration(calib_raw)

    targets = []
    seen_ids = set()
    for i, traw in enumerate(_require(raw, "targets", "")):
        path_i = f"targets[{i}]"
        tid = int(_require(traw, "id", path_i))
        if tid in seen_ids:
            raise ValidationError("duplicate id", field=f"{path_i}.id")
        seen_ids.add(tid)
        cls = _require(traw, "class", path_i)
        if cls not in DEFAULT_TABLES:
            raise ValidationError(f"unknown shape class {cls!r}", field=f"{path_i}.class")
        shape = _require(traw, "shape", path_i)
        spec = TargetSpec(
            id=tid,
            shape=shape,
            shape_class=cls,
            position=_require(traw, "position", path_i),
            velocity=traw.get("velocity", [0.0, 0.0, 0.0]),
        )
        spec.figure_at(spec.position)  # validates the shape description
        targets.append(spec)
    if not targets:
        raise ValidationError("need at least one target", field="targets")

    sensors = []
    for i, sraw in enumerate(_require(raw, "sensors", "")):
        path_i = f"sensors[{i}]"
        try:
            sensors.append(
                UltrasonicSensor(
                    id=int(_require(sraw, "id", path_i)),
                    mount=tuple(float(x) for x in _require(sraw, "mount", path_i)),
                    boresight=tuple(float(x) for x in sraw.get("boresight", (0, 0, 1))),
                    cone_full_angle=math.radians(float(sraw.get("cone_deg", 4.0))),
                    rate_hz=float(sraw.get("rate_hz", raw.get("rates", {}).get("acoustic_hz", 10.0))),
                )
            )
        except ValidationError as exc:
            raise ValidationError(str(exc), field=path_i) from exc

    rraw = _require(raw, "rates", "")
    rates = Rates(
        camera_hz=float(_require(rraw, "camera_hz", "rates")),
        acoustic_hz=float(_require(rraw, "acoustic_hz", "rates")),
        dt=float(_require(rraw, "dt", "rates")),
        duration=float(_require(rraw, "duration", "rates")),
    )
    if rates.dt <= 0 or rates.duration <= 0:
        raise ValidationError("dt and duration must be positive", field="rates")
    for key, hz in (("camera_hz", rates.camera_hz), ("acoustic_hz", rates.acoustic_hz)):
        if hz <= 0:
            raise ValidationError("must be positive", field=f"rates.{key}")
        period_ticks = 1.0 / hz / rates.dt
        if abs(period_ticks - round(period_ticks)) > 1e-9:
            raise ValidationError(
                f"dt={rates.dt} does not divide the {key} period", field=f"rates.{key}"
            )

    nraw = raw.get("noise", {})
    deg_raw = nraw.get("degradation", None)
    if deg_raw is None:
        degradation = DegradationConfig.disabled()
    else:
        degradation = DegradationConfig(
            enabled=bool(deg_raw.get("enabled", True)),
            failure_rate_override=deg_raw.get("failure_rate_override"),
            mean_iou_override=deg_raw.get("mean_iou_override"),
            depth_error_pct_override=deg_raw.get("depth_error_pct_override"),
            iou_concentration=float(deg_raw.get("iou_concentration", 50.0)),
            depth_jitter_frac=float(deg_raw.get("depth_jitter_frac", 0.05)),
            pixel_jitter_u=float(deg_raw.get("pixel_jitter_u", 0.0)),
            pixel_jitter_v=float(deg_raw.get("pixel_jitter_v", 0.0)),
        )
    noise = SceneNoise(
        acoustic_sigma_rel=float(nraw.get("acoustic_sigma_rel", 0.0)),
        degradation=degradation,
        rig_vibration=bool(nraw.get("rig_vibration", False)),
    )

    fraw = raw.get("filter_noise", {})
    default = NoiseConfig.default()
    accel = np.asarray(fraw.get("accel_var", default.accel_variance), dtype=float)
    if accel.size == 1:
        accel = np.full(3, float(accel))
    r = np.diag(fraw["r_diag"]) if "r_diag" in fraw else default.r
    p0 = np.diag(fraw["p0_diag"]) if "p0_diag" in fraw else default.p0
    filter_noise = NoiseConfig(accel_variance=accel, r=r, p0=p0)

    rnd = raw.get("render", {})
    render = Render(
        width=int(rnd.get("width", 1280)),
        height=int(rnd.get("height", 960)),
        raster=bool(rnd.get("raster", False)),
    )
    if render.width <= 0 or render.height <= 0:
        raise ValidationError("render size must be positive", field="render")

    return SceneConfig(
        name=raw.get("name", name),
        targets=targets,
        calibration=calibration,
        sensors=sensors,
        lux=lux,
        rates=rates,
        noise=noise,
        filter_noise=filter_noise,
        seed=seed,
        render=render,
        r_min=float(raw.get("r_min", 0.2)),
        r_max=float(raw.get("r_max", 1.5)),
        pipeline_overrides=raw.get("pipeline", {}),
    )


def scene_schema() -> dict:
    """Machine-readable summary of the scene JSON layout."""
    return {
        "schema": SCENE_SCHEMA_VERSION,
        "name": "str (optional)",
        "lux": "float > 0",
        "seed": "int (required)",
        "calibration": "inline calibration object or relative file path",
        "targets": [
            {
                "id": "int, unique",
                "class": "regular | sea_animal",
                "shape": {"type": "sphere|cuboid|polygon", "radius/w,h,d/vertices": "..."},
                "position": "[x, y, z] m",
                "velocity": "[vx, vy, vz] m/s (optional, default 0)",
            }
        ],
        "sensors": [
            {"id": "int", "mount": "[x,y,z] m", "boresight": "[x,y,z] unit (optional)",
             "cone_deg": "float (optional, default 4)", "rate_hz": "float (optional)"}
        ],
        "rates": {"camera_hz": "float", "acoustic_hz": "float", "dt": "s", "duration": "s"},
        "noise": {
            "acoustic_sigma_rel": "float (default 0)",
            "rig_vibration": "bool (default false)",
            "degradation": {
                "enabled": "bool",
                "failure_rate_override": "float|null",
                "mean_iou_override": "float|null",
                "depth_error_pct_override": "float|null",
                "iou_concentration": "float (default 50)",
                "depth_jitter_frac": "float (default 0.05)",
                "pixel_jitter_u": "px", "pixel_jitter_v": "px",
            },
        },
        "filter_noise": {"accel_var": "float or [3]", "r_diag": "[4]", "p0_diag": "[6]"},
        "render": {"width": "px", "height": "px", "raster": "bool"},
        "r_min": "m (default 0.2)", "r_max": "m (default 1.5)",
        "pipeline": "optional pipeline overrides (mode, eps, c_s_th, alpha, window...)",
    }


def calibration_schema() -> dict:
    return {
        "left": {"fx": "px", "fy": "px", "cx": "px", "cy": "px"},
        "right": {"fx": "px", "fy": "px", "cx": "px", "cy": "px"},
        "dist_left": "[k1, k2, k3, p1, p2]",
        "dist_right": "[k1, k2, k3, p1, p2]",
        "rotation": "3x3 left->right rotation",
        "translation_mm": "[tx, ty, tz] left->right translation, millimeters",
    }
