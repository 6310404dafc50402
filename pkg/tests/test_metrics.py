import json

import numpy as np
import pytest

from aquafuse import metrics as met
from aquafuse.errors import EmptyTrace, ValidationError
from aquafuse.pipeline import Mode, make_pipeline
from aquafuse.scene import load_scene
from aquafuse.simulator import TickRecord, Trace
from conftest import scene_path


def record(t, tid=1, truth_pz=0.5, zb=None, zr=None, zf=None, flag="ok",
           seg="ok", iou=None, prior=None, post=None):
    truth = np.array([0.0, 0.0, truth_pz, 0.0, 0.0, 0.0])
    return TickRecord(
        t=t, target_id=tid, truth=truth, z_stereo=zb, z_acoustic=zr,
        z_fused=zf, flag=flag, seg_outcome=seg, realized_iou=iou,
        prior=prior, posterior=post,
    )


def make_trace(records):
    trace = Trace(scene_name="unit", seed=0, mode="ranging")
    trace.records = records
    trace.n_ticks = len({r.t for r in records})
    return trace


class TestSummarize:
    def test_constant_camera_error(self):
        records = [
            record(t, zb=0.52, zr=0.5, zf=0.5048, truth_pz=0.50) for t in range(10)
        ]
        s = met.summarize(make_trace(records))
        assert s.camera_error_pct["mean"] == pytest.approx(4.0)
        assert s.camera_error_pct["count"] == 10
        assert s.acoustic_error_pct["mean"] == pytest.approx(0.0)

    def test_extrapolated_samples_excluded(self):
        records = [record(0, zb=0.52, zr=0.5, zf=0.51)] + [
            record(1, zb=0.9, zr=0.5, zf=0.6, flag="extrapolated_segmentation",
                   seg="low_confidence")
        ]
        s = met.summarize(make_trace(records))
        assert s.camera_error_pct["count"] == 1
        assert s.camera_error_pct["mean"] == pytest.approx(4.0)

    def test_empty_trace_rejected(self):
        with pytest.raises(EmptyTrace):
            met.summarize(make_trace([]))

    def test_prior_posterior_reduction_nonnegative_when_posterior_better(self):
        prior = np.array([0, 0, 0.51, 0, 0, 0.0])
        post = np.array([0, 0, 0.505, 0, 0, 0.0])
        records = [record(t, prior=prior, post=post) for t in range(5)]
        s = met.summarize(make_trace(records))
        assert s.prior_mae["pz"] == pytest.approx(0.01)
        assert s.posterior_mae["pz"] == pytest.approx(0.005)
        assert s.reduction_pct["pz"] == pytest.approx(50.0)

    def test_failure_classification_includes_low_iou(self):
        records = [
            record(0, zb=0.5, zr=0.5, zf=0.5, iou=0.45),  # gates passed, IoU < 0.5
            record(1, zb=0.5, zr=0.5, zf=0.5, iou=0.9),
        ]
        s = met.summarize(make_trace(records))
        assert s.target_failure_rate == pytest.approx(0.5)

    def test_frame_failure_any_target(self):
        records = [
            record(0, tid=1, zb=0.5, zr=0.5, zf=0.5, iou=0.9),
            record(0, tid=2, flag="extrapolated_segmentation", seg="emc_failed"),
            record(1, tid=1, zb=0.5, zr=0.5, zf=0.5, iou=0.9),
            record(1, tid=2, zb=0.5, zr=0.5, zf=0.5, iou=0.9),
        ]
        s = met.summarize(make_trace(records))
        assert s.frame_failure_rate == pytest.approx(0.5)

    def test_pure_function_of_trace(self):
        records = [record(t, zb=0.51, zr=0.5, zf=0.505, iou=0.8) for t in range(8)]
        a = met.summary_to_json(met.summarize(make_trace(records), lux=4.0, config_digest="x"))
        b = met.summary_to_json(met.summarize(make_trace(records), lux=4.0, config_digest="x"))
        assert a == b

    def test_nulls_not_zeros_for_empty_categories(self):
        records = [record(0, zb=0.5, zr=None, zf=None, flag="extrapolated_range")]
        s = met.summarize(make_trace(records))
        assert s.acoustic_error_pct["mean"] is None
        assert s.acoustic_error_pct["count"] == 0
        d = json.loads(met.summary_to_json(s))
        assert d["acoustic_error_pct"]["mean"] is None


class TestCsv:
    def test_header_and_stability(self):
        scene = load_scene(scene_path("scene_zero_noise"))
        trace = __import__("aquafuse.simulator", fromlist=["run"]).run(
            scene, make_pipeline(scene, Mode.RANGING_ONLY)
        )
        a = met.trace_to_csv(trace)
        assert a.splitlines()[0].startswith("t,target_id,truth_pz,zb,zr,zf,flag,prior_px")
        scene2 = load_scene(scene_path("scene_zero_noise"))
        b = met.trace_to_csv(
            __import__("aquafuse.simulator", fromlist=["run"]).run(
                scene2, make_pipeline(scene2, Mode.RANGING_ONLY)
            )
        )
        assert a == b

    def test_resample_1hz(self):
        records = [record(t * 0.1, zb=0.5, zr=0.5, zf=0.5) for t in range(40)]
        series = met.resample_1hz(make_trace(records), target_id=1)
        assert [s[0] for s in series] == [0.0, 1.0, 2.0, 3.0]


class TestSweepReport:
    def _summary(self, lux, fail, iou_mean):
        records = [
            record(t, zb=0.51, zr=0.5, zf=0.505, iou=(0.4 if t < fail * 10 else iou_mean))
            for t in range(10)
        ]
        return met.summarize(make_trace(records), lux=lux)

    def test_two_point_sweep(self):
        rows = met.sweep_report(
            {4.0: [self._summary(4.0, 0.2, 0.8)], 25.0: [self._summary(25.0, 0.0, 0.9)]}
        )
        assert [r["lux"] for r in rows] == [4.0, 25.0]
        assert rows[0]["failure_rate"] == pytest.approx(0.2)

    def test_single_lux_rejected(self):
        with pytest.raises(ValidationError):
            met.sweep_report({4.0: [self._summary(4.0, 0.2, 0.8)]})

    def test_csv_renders(self):
        rows = met.sweep_report(
            {4.0: [self._summary(4.0, 0.2, 0.8)], 25.0: [self._summary(25.0, 0.0, 0.9)]}
        )
        text = met.sweep_to_csv(rows)
        assert text.splitlines()[0] == "lux,runs,failure_rate,mean_iou,iou_std,iou_count,depth_error_pct"
        assert len(text.splitlines()) == 3


class TestConfigHash:
    def test_stable_and_sensitive(self):
        a = met.config_hash({"x": 1, "y": [1, 2]})
        b = met.config_hash({"y": [1, 2], "x": 1})
        c = met.config_hash({"x": 2, "y": [1, 2]})
        assert a == b
        assert a != c
