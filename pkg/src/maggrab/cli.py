"""
Command-line front end.

    maggrab simulate --config CFG --out DIR    sensor windows + ground truth
    maggrab localize --config CFG --out DIR    one window pair -> conductor estimate
    maggrab replay   --config CFG --out DIR --m1 A.csv --m2 B.csv
    maggrab grab     --config CFG --out DIR    closed loop from every start pose
    maggrab report   --config CFG --out DIR --logs RUNDIR

Exit status: 0 success, 1 runtime/algorithm failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from maggrab.errors import (
    AllAxesBelowFloor,
    ConfigError,
    DegenerateParallel,
    LengthMismatch,
    MagGrabError,
    SchemaError,
    ZeroField,
)
from maggrab.fieldsim import sample_sensor
from maggrab.geom import RigidTransform
from maggrab.localize import ConductorEstimate, estimate_current, transform_estimate
from maggrab.sigproc import SampleWindow
from maggrab.simharness.config import config_to_dict, load_config
from maggrab.simharness.harness import localize_window_pair, replay_log, run_closed_loop, sensor_world_poses
from maggrab.simharness.report import RunSummary, aggregate, compute_report

log = logging.getLogger("maggrab")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _dump_json(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pose_json(T: RigidTransform) -> dict:
    return {"translation": T.translation.tolist(), "rotation": T.rotation.tolist()}


def _estimate_json(est, base_from_m1: RigidTransform | None = None) -> dict:
    if isinstance(est, DegenerateParallel):
        return {"status": "degenerate", "field_angle": est.angle}
    if est is None:
        return {"status": "no_signal"}
    out = {
        "status": "ok",
        "line_m1": est.line.to_dict(),
        "field_angle": est.angle_between_fields,
        "consistency": est.magnitude_consistency,
    }
    if base_from_m1 is not None:
        out["line_base"] = transform_estimate(est, base_from_m1).line.to_dict()
    return out


def _start_pose(cfg, index: int) -> RigidTransform:
    if not 0 <= index < len(cfg.start_poses):
        raise ConfigError(f"--start-index {index} out of range (config has {len(cfg.start_poses)} start poses)")
    return cfg.start_poses[index]


def _simulate_pair(cfg, ee):
    pose1, pose2 = sensor_world_poses(cfg, ee)
    n = cfg.window_length
    w1 = sample_sensor(cfg.scene, pose1, cfg.rate, n, 0.0, stream=(0, 0, 0, 1))
    w2 = sample_sensor(cfg.scene, pose2, cfg.rate, n, 0.0, stream=(0, 0, 0, 2))
    return pose1, pose2, w1, w2


def cmd_simulate(cfg, args, out: Path) -> int:
    ee = _start_pose(cfg, args.start_index)
    pose1, pose2, w1, w2 = _simulate_pair(cfg, ee)
    w1.to_csv(out / "m1.csv")
    w2.to_csv(out / "m2.csv")
    m1_from_world = pose1.inverse()
    truth = {
        "conductors_world": [c.line.to_dict() for c in cfg.scene.conductors],
        "conductors_base": [cfg.base_pose.inverse().apply_line(c.line).to_dict() for c in cfg.scene.conductors],
        "conductors_m1": [m1_from_world.apply_line(c.line).to_dict() for c in cfg.scene.conductors],
        "ee_pose_base": _pose_json(ee),
        "m1_pose_world": _pose_json(pose1),
        "m2_pose_world": _pose_json(pose2),
        "rig_m1_m2": _pose_json(cfg.rig.t_m1_m2),
        "rate": cfg.rate,
        "window_length": cfg.window_length,
        "seed": cfg.seed,
    }
    _dump_json(truth, out / "truth.json")
    log.info("wrote %s", ", ".join(str(out / f) for f in ("m1.csv", "m2.csv", "truth.json")))
    return EXIT_OK


def cmd_localize(cfg, args, out: Path) -> int:
    ee = _start_pose(cfg, args.start_index)
    if args.m1 or args.m2:
        if not (args.m1 and args.m2):
            raise ConfigError("--m1 and --m2 must be given together")
        w1 = SampleWindow.from_csv(args.m1, cfg.rate)
        w2 = SampleWindow.from_csv(args.m2, cfg.rate)
        if w1.n != w2.n:
            raise LengthMismatch(f"m1 has {w1.n} samples, m2 has {w2.n}")
    else:
        _, _, w1, w2 = _simulate_pair(cfg, ee)
    base_from_m1 = ee @ cfg.m1_mount
    try:
        b1, b2, est = localize_window_pair(w1, w2, cfg)
    except (AllAxesBelowFloor, ZeroField) as exc:
        _dump_json({"status": "no_signal", "error": str(exc)}, out / "estimate.json")
        log.error("%s", exc)
        return EXIT_FAILURE
    doc = _estimate_json(est, base_from_m1)
    doc["b1"] = b1.vector.tolist()
    doc["b2"] = b2.vector.tolist()
    if isinstance(est, ConductorEstimate):
        doc["current_rms_m1"] = estimate_current(est, b1, np.zeros(3))
        doc["current_rms_m2"] = estimate_current(est, b2, cfg.rig.position_m2)
    _dump_json(doc, out / "estimate.json")
    return EXIT_OK if doc["status"] == "ok" else EXIT_FAILURE


REPLAY_HEADER = ["window", "status", "px", "py", "pz", "dx", "dy", "dz", "field_angle", "consistency"]


def cmd_replay(cfg, args, out: Path) -> int:
    if not (args.m1 and args.m2):
        raise ConfigError("replay needs --m1 and --m2")
    estimates = replay_log(args.m1, args.m2, cfg)
    with open(out / "estimates.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPLAY_HEADER)
        for k, est in enumerate(estimates):
            doc = _estimate_json(est)
            if doc["status"] == "ok":
                c = est.line.canonical()
                vals = [repr(float(v)) for v in (*c.point, *c.direction, est.angle_between_fields, est.magnitude_consistency)]
            else:
                angle = doc.get("field_angle")
                vals = [""] * 6 + ["" if angle is None else repr(float(angle)), ""]
            w.writerow([k, doc["status"], *vals])
    n_ok = sum(isinstance(e, ConductorEstimate) for e in estimates)
    log.info("replayed %d windows, %d localized", len(estimates), n_ok)
    return EXIT_OK if n_ok else EXIT_FAILURE


def cmd_grab(cfg, args, out: Path) -> int:
    logs = []
    for i in range(len(cfg.start_poses)):
        tl = run_closed_loop(cfg, i, keep_windows=args.save_windows)
        tl.write(out / f"run_{i:02d}.csv", out / f"run_{i:02d}.json")
        if args.save_windows:
            for rec in tl.records:
                for k, (w1, w2) in enumerate(rec.windows):
                    w1.to_csv(out / f"run_{i:02d}_c{rec.cycle:03d}_w{k}_m1.csv")
                    w2.to_csv(out / f"run_{i:02d}_c{rec.cycle:03d}_w{k}_m2.csv")
        log.info("run %d: %s after %d stopping points", i, tl.status, tl.stopping_points)
        logs.append(tl)
    report = compute_report(logs)
    report.write_json(out / "report.json")
    report.write_csv(out / "report.csv")
    _dump_json(config_to_dict(cfg), out / "config_used.json")
    return EXIT_OK if report.n_grabbed > 0 else EXIT_FAILURE


def cmd_report(cfg, args, out: Path) -> int:
    summaries = []
    for p in sorted(Path(args.logs).glob("run_*.json")):
        try:
            summaries.append(RunSummary.from_summary(json.loads(p.read_text())))
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"{p}: not a run summary ({exc})") from None
    if not summaries:
        raise SchemaError(f"no run_*.json summaries in {args.logs}")
    report = aggregate(summaries)
    report.write_json(out / "report.json")
    report.write_csv(out / "report.csv")
    return EXIT_OK if report.n_grabbed > 0 else EXIT_FAILURE


COMMANDS = {
    "simulate": cmd_simulate,
    "localize": cmd_localize,
    "replay": cmd_replay,
    "grab": cmd_grab,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maggrab", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario JSON file")
    common.add_argument("--out", required=True, help="output directory (created if missing)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    verb = common.add_mutually_exclusive_group()
    verb.add_argument("--quiet", "-q", action="store_true")
    verb.add_argument("--verbose", "-v", action="store_true")

    p = sub.add_parser("simulate", parents=[common], help="write sensor windows and ground truth")
    p.add_argument("--start-index", type=int, default=0)

    p = sub.add_parser("localize", parents=[common], help="localize from one window pair")
    p.add_argument("--start-index", type=int, default=0, help="tool pose used for the base-frame estimate")
    p.add_argument("--m1", help="m1 window CSV (simulated when omitted)")
    p.add_argument("--m2", help="m2 window CSV (simulated when omitted)")

    p = sub.add_parser("replay", parents=[common], help="localize every window of recorded streams")
    p.add_argument("--m1", required=True)
    p.add_argument("--m2", required=True)

    p = sub.add_parser("grab", parents=[common], help="closed-loop grabbing from every start pose")
    p.add_argument("--save-windows", action="store_true", help="also write raw sample windows")

    p = sub.add_parser("report", parents=[common], help="aggregate run_*.json summaries")
    p.add_argument("--logs", required=True, help="directory holding run_*.json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg = cfg.with_seed(args.seed)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (SchemaError, LengthMismatch, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except MagGrabError as exc:
        log.error("%s", exc)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
