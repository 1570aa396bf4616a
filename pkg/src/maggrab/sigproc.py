"""
AC field extraction from raw magnetometer windows.

A window of 3-axis samples is correlated against a single complex exponential
at the supply frequency. The per-axis magnitudes give the field amplitude and
the per-axis phases decide which components move together (in phase) and
which move against each other (antiphase). The result is a signed field vector
that is only defined up to a global flip.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from maggrab.errors import AllAxesBelowFloor, NyquistViolation, SchemaError

AMPLITUDE_FLOOR = 1e-7  # tesla
CSV_HEADER = ("t", "bx", "by", "bz")


@dataclass(frozen=True, eq=False)
class SampleWindow:
    """Fixed-rate 3-axis time series from one magnetometer (tesla, sensor frame)."""

    rate: float
    t0: float
    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray

    def __post_init__(self):
        for name in ("xs", "ys", "zs"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        if not (len(self.xs) == len(self.ys) == len(self.zs)):
            raise ValueError("axis sequences must have equal length")
        if len(self.xs) < 2:
            raise ValueError("a window needs at least 2 samples")
        if not self.rate > 0:
            raise ValueError("sample rate must be positive")

    @classmethod
    def from_array(cls, samples, rate: float, t0: float = 0.0) -> "SampleWindow":
        s = np.asarray(samples, dtype=float)
        return cls(rate, t0, s[:, 0], s[:, 1], s[:, 2])

    @property
    def n(self) -> int:
        return len(self.xs)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n) / self.rate

    def as_array(self) -> np.ndarray:
        """Samples as an ``(n, 3)`` array."""
        return np.column_stack([self.xs, self.ys, self.zs])

    def to_csv(self, path) -> None:
        write_samples_csv(path, self.times, self.as_array())

    @classmethod
    def from_csv(cls, path, rate: float | None = None) -> "SampleWindow":
        """Load a window; ``rate`` is inferred from the time column when not given."""
        t, s = read_samples_csv(path)
        if len(t) < 2:
            raise SchemaError(f"{path}: need at least 2 samples, found {len(t)}")
        if rate is None:
            rate = (len(t) - 1) / (t[-1] - t[0])
        return cls.from_array(s, rate, float(t[0]))


def write_samples_csv(path, times, samples) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for t, (bx, by, bz) in zip(times, samples):
            w.writerow([repr(float(t)), repr(float(bx)), repr(float(by)), repr(float(bz))])


def read_samples_csv(path):
    """Read a ``t,bx,by,bz`` file into ``(times, samples)`` arrays."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = tuple(h.strip() for h in rows[0])
    if header != CSV_HEADER:
        raise SchemaError(f"{path}: expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise SchemaError(f"{path}: no samples")
    try:
        data = np.array([[float(x) for x in r] for r in body])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric value ({exc})") from None
    if data.shape[1] != 4:
        raise SchemaError(f"{path}: expected 4 columns")
    return data[:, 0], data[:, 1:]


@dataclass(frozen=True, eq=False)
class PhasorTriplet:
    """Per-axis amplitude (>= 0) and phase in (-pi, pi] at one frequency.

    Phase follows the cosine convention relative to the first sample:
    ``s[k] = amplitude * cos(2*pi*f*k/rate + phase)``.
    """

    amplitude: np.ndarray
    phase: np.ndarray
    frequency: float = float("nan")


@dataclass(frozen=True, eq=False)
class FieldVectorEstimate:
    """Signed AC field amplitude vector (tesla, sensor frame), defined up to a global flip."""

    vector: np.ndarray
    target_frequency: float

    def __post_init__(self):
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=float).reshape(3))

    def __neg__(self) -> "FieldVectorEstimate":
        return FieldVectorEstimate(-self.vector, self.target_frequency)

    def equivalent(self, other, tol: float = 1e-9) -> bool:
        """True when the vectors agree up to a global sign."""
        o = np.asarray(getattr(other, "vector", other), dtype=float)
        return bool(
            np.allclose(self.vector, o, rtol=0.0, atol=tol)
            or np.allclose(self.vector, -o, rtol=0.0, atol=tol)
        )


def wrap_angle(a):
    """Principal value in (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def single_bin_dft(w: SampleWindow, f: float) -> PhasorTriplet:
    """Correlate each axis with ``exp(-j 2 pi f k / rate)``.

    Amplitude is ``2/n`` times the magnitude of the sum, so a bin-aligned pure
    tone is recovered exactly and any DC offset drops out.
    """
    if not 0.0 <= f < w.rate / 2.0:
        raise NyquistViolation(f"frequency {f} Hz must be below rate/2 = {w.rate / 2.0} Hz")
    k = np.arange(w.n)
    basis = np.exp(-2j * np.pi * f * k / w.rate)
    sums = basis @ w.as_array()
    return PhasorTriplet(2.0 / w.n * np.abs(sums), np.angle(sums), f)


def resolve_signs(p: PhasorTriplet, amplitude_floor: float = AMPLITUDE_FLOOR) -> FieldVectorEstimate:
    """Turn phasor magnitudes into a signed vector.

    The strongest axis is the positive reference (ties go to the earlier axis).
    Any other axis at or above ``amplitude_floor`` is negated when its wrapped
    phase lag to the reference exceeds pi/2; weaker axes keep a positive sign.
    """
    amp = np.asarray(p.amplitude, dtype=float)
    if not np.any(amp >= amplitude_floor):
        raise AllAxesBelowFloor(
            f"max axis amplitude {amp.max():.3g} T is below the floor {amplitude_floor:.3g} T"
        )
    ref = int(np.argmax(amp))
    diff = np.abs(wrap_angle(np.asarray(p.phase, dtype=float) - p.phase[ref]))
    signs = np.where((amp >= amplitude_floor) & (diff > np.pi / 2.0), -1.0, 1.0)
    return FieldVectorEstimate(signs * amp, p.frequency)


def extract_field_vector(
    w: SampleWindow, f: float, amplitude_floor: float = AMPLITUDE_FLOOR
) -> FieldVectorEstimate:
    return resolve_signs(single_bin_dft(w, f), amplitude_floor)
