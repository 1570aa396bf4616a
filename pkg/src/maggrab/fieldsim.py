"""
Ground-truth magnetic scene for simulation.

Each conductor is an infinite straight wire carrying
``i(t) = sqrt(2) * I_rms * sin(2 pi f t + phase)``. At a point at distance
``r`` the field magnitude is ``mu0 * i(t) / (2 pi r)`` and its direction is
``(p - foot) x direction`` normalized, where ``foot`` is the closest point on
the wire. A constant earth field is superimposed and sensors add i.i.d.
Gaussian noise in their own frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from maggrab.errors import NyquistViolation, PointOnConductor
from maggrab.geom import Line3, RigidTransform, closest_point_on_line, vec3
from maggrab.sigproc import SampleWindow

MU0 = 4e-7 * np.pi  # H/m
MIN_DISTANCE = 1e-6  # m

# A sensor pose is the sensor-frame -> world-frame rigid transform.
SensorPose = RigidTransform


@dataclass(frozen=True, eq=False)
class Conductor:
    line: Line3
    current_rms: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.current_rms > 0:
            raise ValueError("current_rms must be positive")
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")

    def current(self, t):
        """Instantaneous current in amperes."""
        return np.sqrt(2.0) * self.current_rms * np.sin(2.0 * np.pi * self.frequency * np.asarray(t) + self.phase)

    def unit_field(self, p):
        """Return ``(r, u)``: distance from the wire and field direction for positive current."""
        p = vec3(p)
        radial = p - closest_point_on_line(self.line, p)
        r = float(np.linalg.norm(radial))
        if r <= MIN_DISTANCE:
            raise PointOnConductor(f"point {p} lies within {MIN_DISTANCE} m of the conductor")
        u = np.cross(radial, self.line.direction)
        return r, u / np.linalg.norm(u)

    def peak_field(self, p) -> np.ndarray:
        """Field amplitude vector at ``p``, i.e. the value at a current peak."""
        r, u = self.unit_field(p)
        return MU0 * np.sqrt(2.0) * self.current_rms / (2.0 * np.pi * r) * u


def conductor_field_at(c: Conductor, p, t):
    """Instantaneous field of one conductor (tesla, world frame).

    ``t`` may be a scalar or an array; an array gives shape ``(len(t), 3)``.
    """
    r, u = c.unit_field(p)
    scale = MU0 * c.current(t) / (2.0 * np.pi * r)
    return np.multiply.outer(scale, u)


@dataclass(frozen=True, eq=False)
class FieldScene:
    conductors: tuple = ()
    earth_field: np.ndarray = field(default_factory=lambda: np.zeros(3))
    noise_sigma: float = 0.0
    rng_seed: int = 0
    full_scale: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "conductors", tuple(self.conductors))
        object.__setattr__(self, "earth_field", vec3(self.earth_field))
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")


def scene_field_at(s: FieldScene, p, t):
    """Noiseless world-frame field: all conductors plus the earth field."""
    t_arr = np.asarray(t, dtype=float)
    total = np.broadcast_to(s.earth_field, t_arr.shape + (3,)).copy()
    for c in s.conductors:
        total += conductor_field_at(c, p, t_arr)
    return total


def sample_sensor(
    s: FieldScene,
    sp: SensorPose,
    rate: float,
    n: int,
    t0: float = 0.0,
    stream: tuple = (),
) -> SampleWindow:
    """Sample ``n`` readings at ``t0 + k / rate`` in the sensor frame.

    Noise is drawn from a generator seeded by ``(scene.rng_seed, *stream)``, so
    callers that need independent noise per sensor or per cycle pass distinct
    ``stream`` tuples; identical arguments give bit-identical windows.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    fmax = max((c.frequency for c in s.conductors), default=0.0)
    if not rate > 2.0 * fmax:
        raise NyquistViolation(f"rate {rate} Hz must exceed twice the max conductor frequency {fmax} Hz")
    times = t0 + np.arange(n) / rate
    world = scene_field_at(s, sp.translation, times)
    local = world @ sp.rotation  # row-wise R^T b
    if s.noise_sigma > 0:
        rng = np.random.default_rng(np.random.SeedSequence([int(s.rng_seed), *map(int, stream)]))
        local = local + rng.normal(0.0, s.noise_sigma, size=local.shape)
    if s.full_scale is not None:
        local = np.clip(local, -s.full_scale, s.full_scale)
    return SampleWindow.from_array(local, rate, t0)
