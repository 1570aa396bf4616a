"""
Vector, rotation, rigid-transform and line primitives.

Vectors are plain ``numpy`` arrays of shape ``(3,)``; rotations are ``(3, 3)``
arrays. ``Line3`` and ``RigidTransform`` are small immutable value types built
on top of them. Every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from maggrab.errors import ParallelLines

PARALLEL_EPS = 1e-9
UNIT_TOL = 1e-12
ROTATION_TOL = 1e-9


def vec3(v) -> np.ndarray:
    """Coerce ``v`` to a finite float array of shape (3,)."""
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"vector has non-finite components: {a}")
    return a


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("cannot normalize a zero or non-finite vector")
    return v / n


def angle_between(a, b) -> float:
    """Unsigned angle in [0, pi] between two nonzero vectors (atan2 form, stable near 0 and pi)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)), np.dot(a, b)))


# --------------------------------------------------------------------------
# Rotations
# --------------------------------------------------------------------------


def is_rotation(R, tol: float = ROTATION_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return bool(
        np.allclose(R.T @ R, np.eye(3), rtol=0.0, atol=tol)
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


def check_rotation(R, tol: float = ROTATION_TOL) -> np.ndarray:
    """Return ``R`` as a float array, raising ``ValueError`` unless it is a proper rotation."""
    R = np.asarray(R, dtype=float)
    if not is_rotation(R, tol):
        raise ValueError(f"not a proper rotation matrix:\n{R}")
    return R


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def skew(v) -> np.ndarray:
    x, y, z = vec3(v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_from_rotvec(rv) -> np.ndarray:
    """Rodrigues formula: axis * angle (radians) -> rotation matrix."""
    rv = vec3(rv)
    theta = np.linalg.norm(rv)
    if theta < 1e-12:
        return np.eye(3) + skew(rv)
    K = skew(rv / theta)
    return np.eye(3) + np.sin(theta) * K + (1.0 - np.cos(theta)) * (K @ K)


def rotation_from_axis_angle(axis, angle: float) -> np.ndarray:
    return rotation_from_rotvec(normalize(vec3(axis)) * angle)


def orthonormalize(R) -> np.ndarray:
    """Nearest proper rotation to ``R`` in the Frobenius sense (SVD projection)."""
    U, _, Vt = np.linalg.svd(np.asarray(R, dtype=float))
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def rotate_vector(R, v) -> np.ndarray:
    """Apply rotation ``R`` to vector ``v``."""
    return np.asarray(R, dtype=float) @ vec3(v)


# --------------------------------------------------------------------------
# Rigid transforms
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Maps coordinates from a child frame into a parent frame: ``x_parent = R x_child + t``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", check_rotation(self.rotation))
        object.__setattr__(self, "translation", vec3(self.translation))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, T) -> "RigidTransform":
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3], T[:3, 3])

    def as_matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def apply(self, p) -> np.ndarray:
        """Transform a point."""
        return self.rotation @ vec3(p) + self.translation

    def apply_vector(self, v) -> np.ndarray:
        """Transform a free vector (rotation only)."""
        return self.rotation @ vec3(v)

    def apply_line(self, line: "Line3") -> "Line3":
        return Line3(self.apply(line.point), self.apply_vector(line.direction))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """``self ∘ other``: apply ``other`` first, then ``self``."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    __matmul__ = compose

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def isclose(self, other: "RigidTransform", tol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, rtol=0.0, atol=tol)
            and np.allclose(self.translation, other.translation, rtol=0.0, atol=tol)
        )


# --------------------------------------------------------------------------
# Lines
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Line3:
    """Infinite line ``point + s * direction``; the direction is normalized on construction.

    Two lines compare equal when they describe the same point set, regardless of
    which point and which direction sign were used to build them.
    """

    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", vec3(self.point))
        object.__setattr__(self, "direction", normalize(vec3(self.direction)))

    def at(self, s: float) -> np.ndarray:
        return self.point + s * self.direction

    def canonical(self) -> "Line3":
        """Point closest to the origin and a direction whose first non-negligible component is positive."""
        d = self.direction
        for c in d:
            if abs(c) > UNIT_TOL:
                if c < 0:
                    d = -d
                break
        p = self.point - np.dot(self.point, d) * d
        return Line3(p, d)

    def distance_to(self, p) -> float:
        return float(np.linalg.norm(vec3(p) - closest_point_on_line(self, p)))

    def isclose(self, other: "Line3", tol: float = 1e-9) -> bool:
        a, b = self.canonical(), other.canonical()
        return bool(
            np.allclose(a.point, b.point, rtol=0.0, atol=tol)
            and np.allclose(a.direction, b.direction, rtol=0.0, atol=tol)
        )

    def __eq__(self, other):
        if not isinstance(other, Line3):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None

    def to_dict(self) -> dict:
        c = self.canonical()
        return {"point": c.point.tolist(), "direction": c.direction.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Line3":
        return cls(d["point"], d["direction"])


def closest_point_on_line(line: Line3, p) -> np.ndarray:
    """Orthogonal projection of ``p`` onto ``line``."""
    p = vec3(p)
    s = np.dot(p - line.point, line.direction)
    return line.point + s * line.direction


def closest_points_between_lines(a: Line3, b: Line3, parallel_eps: float = PARALLEL_EPS):
    """Closest pair of points ``(pa, pb)`` with ``pa`` on ``a`` and ``pb`` on ``b``.

    Solves the 2x2 normal equations of ``|a(s) - b(t)|^2``. Raises
    ``ParallelLines`` when ``|a.direction x b.direction| < parallel_eps``.
    """
    u, v = a.direction, b.direction
    cross = np.cross(u, v)
    denom = float(np.dot(cross, cross))
    if np.sqrt(denom) < parallel_eps:
        raise ParallelLines(f"line directions are parallel (|u x v| = {np.sqrt(denom):.3g})")
    w = a.point - b.point
    uv = float(np.dot(u, v))
    du = float(np.dot(u, w))
    dv = float(np.dot(v, w))
    # unit directions: |u|^2 = |v|^2 = 1, so the system determinant is 1 - uv^2 = |u x v|^2
    s = (uv * dv - du) / denom
    t = (dv - uv * du) / denom
    return a.point + s * u, b.point + t * v
