"""Command-line interface.

Subcommands: simulate, sweep, replay, validate, schema.  All randomness
flows from --seed; identical invocations produce identical output bytes.
Exit codes: 0 ok, 1 parse error, 2 validation error, 3 runtime failure.

The environment variable AQUAFUSE_BRIDGE selects an external
segmentation provider ("host:port" or "stdio:<command>"); when unset the
in-process oracle is used.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import metrics as met
from .errors import AquafuseError, ParseError, ValidationError
from .pipeline import Mode, make_pipeline
from .scene import (
    SceneConfig,
    calibration_schema,
    load_scene,
    scene_from_dict,
    scene_schema,
)
from .simulator import run as run_simulation

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

WIRE_SCHEMA = {
    "framing": "4-byte big-endian length prefix + UTF-8 JSON, over TCP or stdio",
    "request": {
        "frame_id": "int",
        "synthetic": {"width": "int", "height": "int",
                       "left_rle": "[int]", "right_rle": "[int]"},
        "left_png_b64/right_png_b64": "str (bridge mode alternative to synthetic)",
        "prompts": [{"view": "L|R", "u": "float", "v": "float"}],
    },
    "response": {
        "frame_id": "int (echoed)",
        "targets": [{"left_mask_rle": "[int]", "right_mask_rle": "[int]",
                      "confidence": "float"}],
        "error": "str (instead of targets, on malformed request)",
    },
    "rle": "row-major alternating background/foreground runs, starting with background",
}


def _scene_with_overrides(path: str, seed: int | None, lux: float | None) -> SceneConfig:
    raw = _read_scene_dict(path)
    if seed is not None:
        raw["seed"] = seed
    if lux is not None:
        raw["lux"] = lux
    return scene_from_dict(
        raw,
        base_dir=os.path.dirname(os.path.abspath(path)),
        name=os.path.splitext(os.path.basename(path))[0],
    )


def _read_scene_dict(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc


def _run_one(path: str, mode: Mode, seed: int | None, lux: float | None):
    scene = _scene_with_overrides(path, seed, lux)
    bridge = os.environ.get("AQUAFUSE_BRIDGE") or None
    pipeline = make_pipeline(scene, mode, bridge_spec=bridge)
    trace = run_simulation(scene, pipeline)
    digest = met.config_hash(
        json.dumps(
            {"path_scene": _read_scene_dict(path), "seed": scene.seed, "lux": scene.lux,
             "mode": mode.value},
            sort_keys=True,
        )
    )
    summary = met.summarize(trace, lux=scene.lux, config_digest=digest)
    return scene, trace, summary


def _out_paths(out_dir: str, scene: SceneConfig, mode: Mode):
    base = f"{scene.name}_{scene.lux:g}_{scene.seed}"
    return (
        os.path.join(out_dir, f"{base}.csv"),
        os.path.join(out_dir, f"{base}.json"),
    )


def cmd_simulate(args) -> int:
    mode = Mode.FULL_EKF if args.mode == "ekf" else Mode.RANGING_ONLY
    scene, trace, summary = _run_one(args.scene, mode, args.seed, args.lux)
    os.makedirs(args.out, exist_ok=True)
    csv_path, json_path = _out_paths(args.out, scene, mode)
    met.write_atomic(csv_path, met.trace_to_csv(trace))
    met.write_atomic(json_path, met.summary_to_json(summary))
    bits = [
        f"scene={scene.name}",
        f"mode={mode.value}",
        f"seed={scene.seed}",
        f"lux={scene.lux:g}",
        f"ticks={trace.n_ticks}",
        f"records={len(trace.records)}",
    ]
    for label, stat in (
        ("camera_err_pct", summary.camera_error_pct),
        ("acoustic_err_pct", summary.acoustic_error_pct),
        ("fused_err_pct", summary.fused_error_pct),
    ):
        if stat["mean"] is not None:
            bits.append(f"{label}={stat['mean']:.4f}")
    if summary.posterior_mae.get("pz") is not None:
        bits.append(f"post_pz_mae={summary.posterior_mae['pz']:.6f}")
    bits.append(f"out={csv_path}")
    print(" ".join(bits))
    return EXIT_OK


def cmd_sweep(args) -> int:
    lux_values = [float(x) for x in args.lux.split(",") if x]
    if len(lux_values) < 2:
        raise ValidationError("need at least two lux values", field="--lux")
    if args.runs < 1:
        raise ValidationError("need at least one run", field="--runs")
    mode = Mode.FULL_EKF if args.mode == "ekf" else Mode.RANGING_ONLY
    os.makedirs(args.out, exist_ok=True)

    jobs = [(lux, args.seed + i) for lux in lux_values for i in range(args.runs)]

    def one(job):
        lux, seed = job
        return lux, _run_one(args.scene, mode, seed, lux)

    summaries: dict[float, list] = {lux: [] for lux in lux_values}
    with ThreadPoolExecutor(max_workers=min(4, os.cpu_count() or 1)) as pool:
        for lux, (scene, trace, summary) in pool.map(one, jobs):
            summaries[lux].append(summary)
            _, json_path = _out_paths(args.out, scene, mode)
            met.write_atomic(json_path, met.summary_to_json(summary))

    rows = met.sweep_report(summaries)
    met.write_atomic(os.path.join(args.out, "sweep.csv"), met.sweep_to_csv(rows))
    met.write_atomic(
        os.path.join(args.out, "sweep.json"),
        json.dumps(rows, indent=2, sort_keys=True) + "\n",
    )
    for row in rows:
        fr = row["failure_rate"]
        miou = row["mean_iou"]
        print(
            f"lux={row['lux']:g} runs={row['runs']}"
            f" failure_rate={'n/a' if fr is None else format(fr, '.4f')}"
            f" mean_iou={'n/a' if miou is None else format(miou, '.4f')}"
        )
    return EXIT_OK


def cmd_replay(args) -> int:
    from .replay import replay_bundles

    mode = Mode.FULL_EKF if args.mode == "ekf" else Mode.RANGING_ONLY
    scene = _scene_with_overrides(args.scene, None, None)
    bridge = os.environ.get("AQUAFUSE_BRIDGE") or None
    results = replay_bundles(scene, args.bundles, mode, bridge_spec=bridge)
    print(f"replayed={len(results)} bundles")
    return EXIT_OK


def cmd_validate(args) -> int:
    load_scene(args.scene)
    print("OK")
    return EXIT_OK


def cmd_schema(args) -> int:
    print(
        json.dumps(
            {
                "scene": scene_schema(),
                "calibration": calibration_schema(),
                "wire_protocol": WIRE_SCHEMA,
                "trace_csv_columns": list(met.CSV_COLUMNS),
            },
            indent=2,
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aquafuse",
        description="Stereo + ultrasonic close-range localization simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scene and write trace + summary")
    sim.add_argument("--scene", required=True)
    sim.add_argument("--mode", choices=("ranging", "ekf"), default="ranging")
    sim.add_argument("--seed", type=int, default=None, help="override scene seed")
    sim.add_argument("--lux", type=float, default=None, help="override scene lux")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="illumination sweep over one scene")
    sw.add_argument("--scene", required=True)
    sw.add_argument("--lux", required=True, help="comma-separated lux values")
    sw.add_argument("--runs", type=int, default=1, help="runs per lux value")
    sw.add_argument("--seed", type=int, default=0, help="base seed; run i uses seed+i")
    sw.add_argument("--mode", choices=("ranging", "ekf"), default="ranging")
    sw.add_argument("--out", required=True)
    sw.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("replay", help="drive the pipeline from an ndjson bundle file")
    rp.add_argument("--scene", required=True, help="scene supplying rig configuration")
    rp.add_argument("--bundles", required=True, help="newline-delimited JSON bundles")
    rp.add_argument("--mode", choices=("ranging", "ekf"), default="ranging")
    rp.set_defaults(func=cmd_replay)

    va = sub.add_parser("validate", help="check a scene file")
    va.add_argument("--scene", required=True)
    va.set_defaults(func=cmd_validate)

    sc = sub.add_parser("schema", help="print the JSON schemas")
    sc.set_defaults(func=cmd_schema)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except AquafuseError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
