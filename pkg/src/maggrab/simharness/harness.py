"""
Closed-loop simulation of the grabbing procedure.

Each cycle the simulated tool dwells at its pose, both magnetometers record
sample windows, the field vectors are extracted and triangulated, the estimate
is moved into the robot-base frame and handed to the approach state machine.
Pose commands are executed instantly.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from maggrab.errors import (
    AllAxesBelowFloor,
    ConfigError,
    DegenerateParallel,
    IterationLimit,
    LengthMismatch,
    SchemaError,
    ZeroField,
)
from maggrab.fieldsim import sample_sensor
from maggrab.geom import Line3, RigidTransform, closest_point_on_line, normalize
from maggrab.grasp import ANALYSIS_PHASES, Phase, PoseCommand, ProcedureState, step_procedure
from maggrab.localize import ConductorEstimate, localize_conductor, transform_estimate
from maggrab.sigproc import SampleWindow, extract_field_vector, read_samples_csv
from maggrab.simharness.config import ScenarioConfig

log = logging.getLogger(__name__)

STATUS_GRABBED = "grabbed"
STATUS_ITERATION_LIMIT = "iteration_limit"


@dataclass(eq=False)
class CycleRecord:
    cycle: int
    t: float
    phase_in: str
    phase_out: str
    ee_pose: RigidTransform
    b1: np.ndarray | None = None
    b2: np.ndarray | None = None
    estimate: str = "none"  # none | ok | degenerate | no_signal
    line_base: Line3 | None = None
    field_angle: float | None = None
    consistency: float | None = None
    command: PoseCommand | None = None
    windows: list = field(default_factory=list)


@dataclass(eq=False)
class TrajectoryLog:
    run: int
    start_index: int
    records: list
    status: str
    truth_grab_point: np.ndarray

    @property
    def final_position(self) -> np.ndarray:
        last = self.records[-1]
        return last.ee_pose.translation if last.command is None else last.command.position

    @property
    def iterations(self) -> int:
        return sum(1 for r in self.records if r.phase_in in {p.value for p in ANALYSIS_PHASES})

    @property
    def commands(self) -> list:
        return [r.command for r in self.records if r.command is not None]

    @property
    def stopping_points(self) -> int:
        """Distinct commanded waypoints, consecutive repeats counted once."""
        n, prev = 0, None
        for c in self.commands:
            if prev is None or not (
                np.array_equal(c.position, prev.position) and np.array_equal(c.rotation, prev.rotation)
            ):
                n += 1
            prev = c
        return n

    @property
    def grabbed(self) -> bool:
        return self.status == STATUS_GRABBED

    def phases(self) -> list:
        return [r.phase_out for r in self.records]

    def summary(self) -> dict:
        final = self.final_position
        return {
            "run": self.run,
            "start_index": self.start_index,
            "status": self.status,
            "cycles": len(self.records),
            "iterations": self.iterations,
            "stopping_points": self.stopping_points,
            "rotate_tool_cycles": sum(1 for c in self.commands if c.kind == "rotate"),
            "final_position": final.tolist(),
            "truth_grab_point": self.truth_grab_point.tolist(),
            "final_error": float(np.linalg.norm(final - self.truth_grab_point)),
        }

    def write(self, csv_path, json_path) -> None:
        write_log_csv(self, csv_path)
        with open(json_path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _axes(prefix):
    return [f"{prefix}_{a}" for a in "xyz"]


def _rot_cols(prefix):
    return [f"{prefix}_r{i}{j}" for i in range(3) for j in range(3)]


LOG_HEADER = (
    ["cycle", "t", "phase_in", "phase_out"]
    + _axes("ee") + _rot_cols("ee")
    + _axes("b1") + _axes("b2")
    + ["estimate"] + ["line_px", "line_py", "line_pz", "line_dx", "line_dy", "line_dz"]
    + ["field_angle", "consistency", "cmd_kind", "cmd_linear"]
    + _axes("cmd") + _rot_cols("cmd")
)


def _fmt(values, n):
    if values is None:
        return [""] * n
    return [repr(float(v)) for v in np.ravel(values)]


def write_log_csv(tl: TrajectoryLog, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_HEADER)
        for r in tl.records:
            line = None
            if r.line_base is not None:
                c = r.line_base.canonical()
                line = np.concatenate([c.point, c.direction])
            cmd = r.command
            w.writerow(
                [r.cycle, repr(float(r.t)), r.phase_in, r.phase_out]
                + _fmt(r.ee_pose.translation, 3) + _fmt(r.ee_pose.rotation, 9)
                + _fmt(r.b1, 3) + _fmt(r.b2, 3)
                + [r.estimate] + _fmt(line, 6)
                + _fmt(None if r.field_angle is None else [r.field_angle], 1)
                + _fmt(None if r.consistency is None else [r.consistency], 1)
                + [cmd.kind if cmd else "", int(cmd.linear) if cmd else ""]
                + _fmt(cmd.position if cmd else None, 3) + _fmt(cmd.rotation if cmd else None, 9)
            )


def estimate_fusion(estimates) -> ConductorEstimate:
    """Average several estimates of the same conductor.

    Directions are flipped to agree with the first one and averaged, canonical
    closest-to-origin points are averaged component-wise.
    """
    estimates = list(estimates)
    if not estimates:
        raise ValueError("nothing to fuse")
    if len(estimates) == 1:
        return estimates[0]
    ref = estimates[0].line.direction
    dirs, points = [], []
    for e in estimates:
        d = e.line.direction
        dirs.append(d if np.dot(d, ref) >= 0 else -d)
        points.append(e.line.canonical().point)
    line = Line3(np.mean(points, axis=0), normalize(np.mean(dirs, axis=0)))
    return ConductorEstimate(
        line,
        float(np.mean([e.angle_between_fields for e in estimates])),
        float(np.mean([e.magnitude_consistency for e in estimates])),
    )


def sensor_world_poses(cfg: ScenarioConfig, ee: RigidTransform):
    T = cfg.base_pose @ ee
    return T @ cfg.m1_mount, T @ cfg.m2_mount


def localize_window_pair(w1: SampleWindow, w2: SampleWindow, cfg: ScenarioConfig):
    """Field vectors and m1-frame estimate for one synchronized window pair.

    Returns ``(b1, b2, estimate)`` where ``estimate`` is a ``ConductorEstimate``
    or a ``DegenerateParallel`` instance. Weak-signal errors propagate.
    """
    b1 = extract_field_vector(w1, cfg.target_frequency, cfg.amplitude_floor)
    b2 = extract_field_vector(w2, cfg.target_frequency, cfg.amplitude_floor)
    try:
        est = localize_conductor(b1, b2, cfg.rig, cfg.params.alpha_min)
    except DegenerateParallel as exc:
        est = exc
    return b1, b2, est


def observe(cfg: ScenarioConfig, ee: RigidTransform, t: float, stream: tuple = (), keep_windows: bool = False):
    """Dwell at ``ee`` and return ``(b1, b2, estimate_in_base_frame_or_marker, windows)``.

    The marker is a ``DegenerateParallel`` instance or None (no usable signal).
    """
    pose1, pose2 = sensor_world_poses(cfg, ee)
    base_from_m1 = ee @ cfg.m1_mount
    n = cfg.window_length
    ests, windows, degenerate = [], [], None
    b1 = b2 = None
    for k in range(cfg.windows_per_dwell):
        t0 = t + k * n / cfg.rate
        w1 = sample_sensor(cfg.scene, pose1, cfg.rate, n, t0, stream=(*stream, k, 1))
        w2 = sample_sensor(cfg.scene, pose2, cfg.rate, n, t0, stream=(*stream, k, 2))
        if keep_windows:
            windows.append((w1, w2))
        try:
            f1, f2, est = localize_window_pair(w1, w2, cfg)
        except (AllAxesBelowFloor, ZeroField) as exc:
            log.debug("no usable signal at t=%g: %s", t0, exc)
            continue
        if b1 is None:
            b1, b2 = f1.vector, f2.vector
        if isinstance(est, DegenerateParallel):
            degenerate = est
        else:
            ests.append(transform_estimate(est, base_from_m1))
    if ests:
        return b1, b2, estimate_fusion(ests), windows
    return b1, b2, degenerate, windows


def run_closed_loop(cfg: ScenarioConfig, start_index: int, run: int | None = None, keep_windows: bool = False) -> TrajectoryLog:
    """Simulate one grabbing session from ``cfg.start_poses[start_index]``.

    ``run`` selects the noise stream (defaults to ``start_index``). Hitting the
    iteration limit ends the run with status ``iteration_limit``.
    """
    if not 0 <= start_index < len(cfg.start_poses):
        raise IndexError(f"start_index {start_index} out of range (have {len(cfg.start_poses)} start poses)")
    if not cfg.scene.conductors:
        raise ConfigError("closed-loop runs need at least one conductor")
    run = start_index if run is None else run
    params = cfg.params
    ee = cfg.start_poses[start_index]
    truth = closest_point_on_line(cfg.truth_line_base(), np.zeros(3))

    state = ProcedureState()
    state, _ = step_procedure(state, None, ee, params)  # Idle -> AwaitCommand
    state, _ = step_procedure(state, None, ee, params)  # operator start -> Localize

    records = []
    status = STATUS_GRABBED
    t = 0.0
    cycle = 0
    while state.phase is not Phase.GRABBED:
        rec = CycleRecord(cycle, t, state.phase.value, state.phase.value, ee)
        est = None
        if state.phase in ANALYSIS_PHASES:
            b1, b2, est, rec.windows = observe(cfg, ee, t, (run, cycle), keep_windows)
            rec.b1, rec.b2 = b1, b2
            if isinstance(est, DegenerateParallel):
                rec.estimate = "degenerate"
                rec.field_angle = est.angle
            elif est is None:
                rec.estimate = "no_signal"
            else:
                rec.estimate = "ok"
                rec.line_base = est.line
                rec.field_angle = est.angle_between_fields
                rec.consistency = est.magnitude_consistency
        try:
            state, cmd = step_procedure(state, est, ee, params)
        except IterationLimit as exc:
            log.warning("run %d: %s", run, exc)
            status = STATUS_ITERATION_LIMIT
            records.append(rec)
            break
        rec.phase_out = state.phase.value
        rec.command = cmd
        records.append(rec)
        if cmd is not None:
            ee = cmd.as_transform()
        t += params.dwell_k
        cycle += 1

    return TrajectoryLog(run, start_index, records, status, truth)


def run_all(cfg: ScenarioConfig, keep_windows: bool = False) -> list:
    return [run_closed_loop(cfg, i, keep_windows=keep_windows) for i in range(len(cfg.start_poses))]


def replay_log(m1_csv, m2_csv, cfg: ScenarioConfig) -> list:
    """Run extraction and localization over recorded streams, one estimate per window pair.

    Each stream is cut into consecutive ``cfg.window_length`` windows (a
    trailing partial window is dropped). Items are m1-frame
    ``ConductorEstimate`` objects, ``DegenerateParallel`` instances, or None
    where the field was too weak.
    """
    t1, s1 = read_samples_csv(m1_csv)
    t2, s2 = read_samples_csv(m2_csv)
    if len(t1) != len(t2):
        raise LengthMismatch(f"m1 has {len(t1)} samples, m2 has {len(t2)}")
    n = cfg.window_length
    if len(t1) < n:
        raise SchemaError(f"need at least one window of {n} samples, found {len(t1)}")
    out = []
    for k in range(len(t1) // n):
        sl = slice(k * n, (k + 1) * n)
        w1 = SampleWindow.from_array(s1[sl], cfg.rate, float(t1[sl][0]))
        w2 = SampleWindow.from_array(s2[sl], cfg.rate, float(t2[sl][0]))
        try:
            out.append(localize_window_pair(w1, w2, cfg)[2])
        except (AllAxesBelowFloor, ZeroField):
            out.append(None)
    return out
