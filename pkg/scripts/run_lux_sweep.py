#!/usr/bin/env python3
"""Illumination sweep: segmentation failure rate and IoU vs lux.

Runs the single-target static probe scene at the seven illumination
levels and prints the sweep table (and optionally writes CSV/JSON).
"""

import argparse
import importlib.resources as ir
import json

from aquafuse import metrics as met
from aquafuse.cli import _scene_with_overrides
from aquafuse.pipeline import Mode, make_pipeline
from aquafuse.simulator import run

LUX_LEVELS = (2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 25.0)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="directory for sweep.csv / sweep.json")
    args = parser.parse_args()

    path = str(ir.files("aquafuse") / "data" / "scenes" / "scene_lux_probe.json")
    summaries = {}
    for lux in LUX_LEVELS:
        summaries[lux] = []
        for i in range(args.runs):
            scene = _scene_with_overrides(path, args.seed + i, lux)
            trace = run(scene, make_pipeline(scene, Mode.RANGING_ONLY))
            summaries[lux].append(met.summarize(trace, lux=lux))

    rows = met.sweep_report(summaries)
    print(f"{'lux':>6} {'failure':>9} {'mean IoU':>9} {'IoU std':>8} {'depth err %':>12}")
    for row in rows:
        print(
            f"{row['lux']:>6g} {row['failure_rate']:>9.3f} {row['mean_iou']:>9.4f} "
            f"{row['iou_std']:>8.4f} {row['depth_error_pct']:>12.3f}"
        )
    if args.out:
        import os

        os.makedirs(args.out, exist_ok=True)
        met.write_atomic(os.path.join(args.out, "sweep.csv"), met.sweep_to_csv(rows))
        met.write_atomic(
            os.path.join(args.out, "sweep.json"), json.dumps(rows, indent=2) + "\n"
        )
        print("wrote", os.path.join(args.out, "sweep.csv"))


if __name__ == "__main__":
    main()
