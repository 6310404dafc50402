"""Run evaluation and report serialization.

Percentage errors use the z-axis distance (rig to target).  Error
statistics for the three ranging modalities only count samples where the
modality was actually measured, never extrapolated values.  Every mean
is reported with its sample count and standard deviation; categories
without samples are explicit nulls.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrace, ValidationError
from .fusion import percentage_error
from .simulator import TickRecord, Trace

SUMMARY_SCHEMA_VERSION = 1
IOU_FAILURE_THRESHOLD = 0.5  # a realized IoU below this counts as a failure

STATE_NAMES = ("px", "py", "pz", "vx", "vy", "vz")

CSV_COLUMNS = (
    ["t", "target_id", "truth_pz", "zb", "zr", "zf", "flag"]
    + [f"prior_{n}" for n in STATE_NAMES]
    + [f"post_{n}" for n in STATE_NAMES]
)


def _stat(values: list[float]) -> dict:
    if not values:
        return {"mean": None, "std": None, "count": 0}
    arr = np.asarray(values, dtype=float)
    return {
        "mean": float(arr.mean()),
        "std": float(arr.std(ddof=0)),
        "count": int(arr.size),
    }


@dataclass
class RunSummary:
    scene: str
    seed: int
    mode: str
    lux: float
    config_hash: str
    camera_error_pct: dict
    acoustic_error_pct: dict
    fused_error_pct: dict
    target_failure_rate: float
    frame_failure_rate: float
    realized_iou: dict
    prior_mae: dict
    posterior_mae: dict
    reduction_pct: dict
    n_records: int
    n_ticks: int

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["schema"] = SUMMARY_SCHEMA_VERSION
        return d


def config_hash(scene_raw: dict | str) -> str:
    """Stable hash of a scene description (canonical JSON)."""
    if isinstance(scene_raw, str):
        payload = scene_raw.encode()
    else:
        payload = json.dumps(scene_raw, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def segmentation_failed(record: TickRecord) -> bool:
    """Segmentation-failure classification for one target at one tick.

    A target counts as failed when a gate tripped (confidence, epipolar,
    missing mask) or when the realized mask quality fell below the 50%
    IoU threshold even though the gates passed.
    """
    if record.seg_outcome in ("low_confidence", "emc_failed", "no_mask", "provider_error"):
        return True
    if record.realized_iou is not None and record.realized_iou < IOU_FAILURE_THRESHOLD:
        return True
    return False


def summarize(trace: Trace, lux: float = float("nan"), config_digest: str = "") -> RunSummary:
    """Aggregate a trace; deterministic given the trace."""
    if not trace.records:
        raise EmptyTrace("trace has no records")
    cam_err: list[float] = []
    aco_err: list[float] = []
    fus_err: list[float] = []
    iou_ok: list[float] = []
    target_fail = 0
    target_total = 0
    frame_fail: dict[float, bool] = {}
    prior_abs: list[np.ndarray] = []
    post_abs: list[np.ndarray] = []

    for rec in trace.records:
        truth_pz = rec.truth_pz
        seg_failed = segmentation_failed(rec)
        if rec.seg_outcome != "no_frame":
            target_total += 1
            target_fail += int(seg_failed)
            frame_fail[rec.t] = frame_fail.get(rec.t, False) or seg_failed
        stereo_measured = "extrapolated_segmentation" not in rec.flag and rec.seg_outcome == "ok"
        acoustic_measured = "extrapolated_range" not in rec.flag
        if stereo_measured and rec.z_stereo is not None:
            cam_err.append(percentage_error(rec.z_stereo, truth_pz))
        if acoustic_measured and rec.z_acoustic is not None:
            aco_err.append(percentage_error(rec.z_acoustic, truth_pz))
        if (
            stereo_measured
            and acoustic_measured
            and rec.z_fused is not None
        ):
            fus_err.append(percentage_error(rec.z_fused, truth_pz))
        if not seg_failed and rec.realized_iou is not None:
            iou_ok.append(rec.realized_iou)
        if rec.prior is not None and rec.posterior is not None:
            prior_abs.append(np.abs(rec.prior - rec.truth))
            post_abs.append(np.abs(rec.posterior - rec.truth))

    prior_mae: dict = {n: None for n in STATE_NAMES}
    post_mae: dict = {n: None for n in STATE_NAMES}
    reduction: dict = {n: None for n in STATE_NAMES}
    if prior_abs:
        pr = np.mean(prior_abs, axis=0)
        po = np.mean(post_abs, axis=0)
        for i, name in enumerate(STATE_NAMES):
            prior_mae[name] = float(pr[i])
            post_mae[name] = float(po[i])
            reduction[name] = (
                float((pr[i] - po[i]) / pr[i] * 100.0) if pr[i] > 0 else None
            )
    prior_mae["count"] = len(prior_abs)
    post_mae["count"] = len(post_abs)

    return RunSummary(
        scene=trace.scene_name,
        seed=trace.seed,
        mode=trace.mode,
        lux=lux,
        config_hash=config_digest,
        camera_error_pct=_stat(cam_err),
        acoustic_error_pct=_stat(aco_err),
        fused_error_pct=_stat(fus_err),
        target_failure_rate=(target_fail / target_total) if target_total else float("nan"),
        frame_failure_rate=(
            sum(frame_fail.values()) / len(frame_fail) if frame_fail else float("nan")
        ),
        realized_iou=_stat(iou_ok),
        prior_mae=prior_mae,
        posterior_mae=post_mae,
        reduction_pct=reduction,
        n_records=len(trace.records),
        n_ticks=trace.n_ticks,
    )


def resample_1hz(trace: Trace, target_id: int) -> list[tuple[float, float | None]]:
    """Fused percentage-error series resampled to 1 Hz (nearest sample)."""
    by_second: dict[int, TickRecord] = {}
    for rec in trace.records:
        if rec.target_id != target_id or rec.z_fused is None:
            continue
        second = int(rec.t)
        cur = by_second.get(second)
        if cur is None or abs(rec.t - second) < abs(cur.t - second):
            by_second[second] = rec
    return [
        (float(s), percentage_error(r.z_fused, r.truth_pz))
        for s, r in sorted(by_second.items())
    ]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr even for numpy scalars
    return str(value)


def trace_to_csv(trace: Trace) -> str:
    """Render the time series; float cells use repr so output is bitwise stable."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in trace.records:
        row = [
            _fmt(rec.t),
            str(rec.target_id),
            _fmt(rec.truth_pz),
            _fmt(rec.z_stereo),
            _fmt(rec.z_acoustic),
            _fmt(rec.z_fused),
            rec.flag,
        ]
        for vec in (rec.prior, rec.posterior):
            if vec is None:
                row.extend([""] * 6)
            else:
                row.extend(_fmt(float(x)) for x in vec)
        writer.writerow(row)
    return buf.getvalue()


def write_atomic(path: str, content: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(content)
    os.replace(tmp, path)


def summary_to_json(summary: RunSummary) -> str:
    def clean(v):
        if isinstance(v, float) and math.isnan(v):
            return None
        return v

    d = json.loads(json.dumps(summary.to_dict(), default=float))
    d = {k: clean(v) for k, v in d.items()}
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def sweep_report(summaries_by_lux: dict[float, list[RunSummary]]) -> list[dict]:
    """Combine per-lux run summaries into the illumination sweep table."""
    if len(summaries_by_lux) < 2:
        raise ValidationError("need at least two lux points", field="sweep")
    rows = []
    for lux in sorted(summaries_by_lux):
        runs = summaries_by_lux[lux]
        fail = [s.target_failure_rate for s in runs if not math.isnan(s.target_failure_rate)]
        ious = [s.realized_iou for s in runs if s.realized_iou["count"] > 0]
        derr = [s.camera_error_pct for s in runs if s.camera_error_pct["count"] > 0]
        n_iou = sum(s["count"] for s in ious)
        rows.append(
            {
                "lux": lux,
                "runs": len(runs),
                "failure_rate": float(np.mean(fail)) if fail else None,
                "mean_iou": (
                    float(np.average([s["mean"] for s in ious], weights=[s["count"] for s in ious]))
                    if ious
                    else None
                ),
                "iou_std": float(np.mean([s["std"] for s in ious])) if ious else None,
                "iou_count": n_iou,
                "depth_error_pct": (
                    float(np.average([s["mean"] for s in derr], weights=[s["count"] for s in derr]))
                    if derr
                    else None
                ),
            }
        )
    return rows


def sweep_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    cols = ["lux", "runs", "failure_rate", "mean_iou", "iou_std", "iou_count", "depth_error_pct"]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()
