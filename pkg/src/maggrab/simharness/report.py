"""Aggregate statistics over a set of grabbing runs."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np


@dataclass
class RunSummary:
    run: int
    start_index: int
    status: str
    iterations: int
    stopping_points: int
    final_position: list
    final_error: float  # against the ground-truth grab point
    deviation: float = float("nan")  # against the mean of all grabbed finals

    @classmethod
    def from_summary(cls, d: dict) -> "RunSummary":
        return cls(
            int(d["run"]),
            int(d["start_index"]),
            d["status"],
            int(d["iterations"]),
            int(d["stopping_points"]),
            [float(v) for v in d["final_position"]],
            float(d["final_error"]),
        )


@dataclass
class RunReport:
    runs: list
    n_grabbed: int
    mean_final: list
    deviation_mean: float
    deviation_std: float
    deviation_max: float
    max_final_error: float
    stopping_points_min: int
    stopping_points_max: int

    def to_dict(self) -> dict:
        return asdict(self)

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path) -> None:
        """One row per run; plot-ready."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(
                ["run", "start_index", "status", "iterations", "stopping_points",
                 "final_x", "final_y", "final_z", "deviation", "final_error"]
            )
            for r in self.runs:
                w.writerow(
                    [r.run, r.start_index, r.status, r.iterations, r.stopping_points]
                    + [repr(float(v)) for v in r.final_position]
                    + [repr(float(r.deviation)), repr(float(r.final_error))]
                )


def aggregate(summaries) -> RunReport:
    """Build a report from per-run summaries.

    Deviations are distances from the mean of the grabbed runs' final
    positions; runs that did not grab are listed but left out of the
    statistics. The standard deviation is the population value (ddof=0).
    """
    runs = [RunSummary(**{**asdict(s), "deviation": float("nan")}) for s in summaries]
    grabbed = [r for r in runs if r.status == "grabbed"]
    nan = float("nan")
    if not grabbed:
        return RunReport(runs, 0, [nan] * 3, nan, nan, nan, nan, 0, 0)
    finals = np.array([r.final_position for r in grabbed])
    mean = finals.mean(axis=0)
    dev = np.linalg.norm(finals - mean, axis=1)
    for r, d in zip(grabbed, dev):
        r.deviation = float(d)
    sp = [r.stopping_points for r in grabbed]
    return RunReport(
        runs=runs,
        n_grabbed=len(grabbed),
        mean_final=mean.tolist(),
        deviation_mean=float(dev.mean()),
        deviation_std=float(dev.std()),
        deviation_max=float(dev.max()),
        max_final_error=float(max(r.final_error for r in grabbed)),
        stopping_points_min=int(min(sp)),
        stopping_points_max=int(max(sp)),
    )


def compute_report(logs) -> RunReport:
    """Report over ``TrajectoryLog`` objects."""
    return aggregate(RunSummary.from_summary(tl.summary()) for tl in logs)
