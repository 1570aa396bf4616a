"""
Conductor triangulation from two field vectors.

Both field vectors are perpendicular to the wire, so their cross product gives
the wire direction. Crossing that direction with each field vector gives the
radial ray from each sensor towards the wire. The wire passes through the
closest points of the two rays.

Everything here is expressed in the frame of magnetometer 1, with magnetometer 1
at the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from maggrab.errors import DegenerateParallel, ZeroField
from maggrab.fieldsim import MU0
from maggrab.geom import Line3, RigidTransform, closest_points_between_lines, normalize, vec3

ALPHA_MIN = np.deg2rad(10.0)


@dataclass(frozen=True, eq=False)
class SensorRig:
    """Relative placement of the two magnetometers.

    ``t_m1_m2.translation`` is the position of magnetometer 2 in the frame of
    magnetometer 1. ``t_m1_m2.rotation`` maps magnetometer-1 coordinates to
    magnetometer-2 coordinates, so a vector measured by magnetometer 2 is
    brought into the common frame with its inverse (transpose).
    """

    t_m1_m2: RigidTransform

    def __post_init__(self):
        if np.linalg.norm(self.t_m1_m2.translation) == 0.0:
            raise ValueError("coincident sensors cannot triangulate")

    @classmethod
    def from_poses(cls, pose1: RigidTransform, pose2: RigidTransform) -> "SensorRig":
        """Build a rig from two sensor->common-frame poses (e.g. mounts on the tool)."""
        p = pose1.rotation.T @ (pose2.translation - pose1.translation)
        R = pose2.rotation.T @ pose1.rotation
        return cls(RigidTransform(R, p))

    @property
    def rotation(self) -> np.ndarray:
        return self.t_m1_m2.rotation

    @property
    def position_m2(self) -> np.ndarray:
        return self.t_m1_m2.translation

    def to_m1(self, b2) -> np.ndarray:
        """Express a magnetometer-2 reading in the magnetometer-1 frame."""
        return self.rotation.T @ vec3(b2)


@dataclass(frozen=True, eq=False)
class ConductorEstimate:
    line: Line3
    angle_between_fields: float
    magnitude_consistency: float = float("nan")


def _vector(b) -> np.ndarray:
    return vec3(getattr(b, "vector", b))


def folded_angle(a, b) -> float:
    """Angle between two lines spanned by ``a`` and ``b``, in [0, pi/2]."""
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)), abs(np.dot(a, b))))


def localize_conductor(b1, b2, rig: SensorRig, alpha_min: float = ALPHA_MIN) -> ConductorEstimate:
    """Recover the conductor line in the magnetometer-1 frame.

    ``b1`` and ``b2`` are ``FieldVectorEstimate`` objects or plain 3-vectors, each
    in its own sensor frame. Any per-sensor sign pattern gives the same line.

    Raises:
        ZeroField: either vector is zero.
        DegenerateParallel: the vectors are within ``alpha_min`` of parallel.
    """
    v1 = _vector(b1)
    v2 = rig.to_m1(_vector(b2))
    if not np.any(v1) or not np.any(v2):
        raise ZeroField("field vector is zero")

    angle = folded_angle(v1, v2)
    if angle < alpha_min:
        raise DegenerateParallel(angle, alpha_min)

    v_pl = normalize(np.cross(v1, v2))
    ray1 = Line3(np.zeros(3), np.cross(v_pl, v1))
    ray2 = Line3(rig.position_m2, np.cross(v_pl, v2))
    _, foot2 = closest_points_between_lines(ray1, ray2)

    est = ConductorEstimate(Line3(foot2, v_pl), angle)
    ratio = consistency_check(est, v1, b2, rig)
    return ConductorEstimate(est.line, angle, ratio)


def consistency_check(est: ConductorEstimate, b1, b2, rig: SensorRig) -> float:
    """``(|b1| r1) / (|b2| r2)`` with ``r_i`` the sensor-to-line distances.

    For a lone straight conductor ``|B| r`` is the same everywhere, so the
    ratio is 1; other sources or a wrong line move it away from 1.
    """
    r1 = est.line.distance_to(np.zeros(3))
    r2 = est.line.distance_to(rig.position_m2)
    return float(np.linalg.norm(_vector(b1)) * r1 / (np.linalg.norm(_vector(b2)) * r2))


def estimate_current(est: ConductorEstimate, b, sensor_position, rms: bool = True) -> float:
    """Invert the straight-wire law at one sensor.

    Field vectors carry peak amplitudes, so the raw inversion is a peak
    current; by default it is divided by sqrt(2) to report the RMS value.
    """
    r = est.line.distance_to(sensor_position)
    peak = 2.0 * np.pi * r * float(np.linalg.norm(_vector(b))) / MU0
    return peak / np.sqrt(2.0) if rms else peak


def transform_estimate(est: ConductorEstimate, T: RigidTransform) -> ConductorEstimate:
    """Re-express an estimate in another frame (``T`` maps m1 coordinates to that frame)."""
    return ConductorEstimate(T.apply_line(est.line), est.angle_between_fields, est.magnitude_consistency)
