"""Rotation and pose value types.

Quaternions are stored scalar-first (w, x, y, z). The array helpers work
on ``(..., 4)`` / ``(..., 3)`` numpy arrays so the codec and fusion code
can process whole skeletons or tracks at once.
"""
import math
from dataclasses import dataclass

import numpy as np

from utils.exceptions import InvalidArgument

UNIT_TOLERANCE = 1e-6


def quat_multiply(a, b):
    """Hamilton product of two quaternion arrays (broadcasting)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack((
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ), axis=-1)


def quat_conjugate(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_rotate(q, v):
    """Rotate vectors ``v`` by unit quaternions ``q``."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w = q[..., :1]
    u = q[..., 1:]
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def quat_norms(q):
    return np.linalg.norm(np.asarray(q, dtype=float), axis=-1)


def is_unit(q):
    norms = quat_norms(q)
    return bool(np.all(np.isfinite(norms)) and np.all(np.abs(norms - 1.0) <= UNIT_TOLERANCE))


def angular_distances(a, b):
    """Rotation angle in degrees between quaternion arrays, double-cover aware.

    Uses the half-chord form, which stays accurate for tiny angles where
    ``acos`` of the dot product loses precision.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dots = np.sum(a * b, axis=-1, keepdims=True)
    signs = np.where(dots < 0.0, -1.0, 1.0)
    chord = np.linalg.norm(a - signs * b, axis=-1)
    span = np.linalg.norm(a + signs * b, axis=-1)
    return np.degrees(4.0 * np.arctan2(chord, span))


def quat_from_rotvec(rotvec):
    """Quaternions for rotation vectors (axis * angle in radians)."""
    rotvec = np.asarray(rotvec, dtype=float)
    angle = np.linalg.norm(rotvec, axis=-1, keepdims=True)
    half = 0.5 * angle
    # sin(half)/angle, with its limit 0.5 at angle 0
    scale = np.where(angle > 1e-12, np.sin(half) / np.where(angle > 1e-12, angle, 1.0), 0.5)
    return np.concatenate((np.cos(half), rotvec * scale), axis=-1)


def quat_to_rotvec(q):
    q = np.asarray(q, dtype=float)
    q = np.where(q[..., :1] < 0.0, -q, q)
    vec = q[..., 1:]
    sin_half = np.linalg.norm(vec, axis=-1, keepdims=True)
    angle = 2.0 * np.arctan2(sin_half, q[..., :1])
    scale = np.where(sin_half > 1e-12, angle / np.where(sin_half > 1e-12, sin_half, 1.0), 2.0)
    return vec * scale


def quat_power(q, fraction):
    """Fraction of the rotation ``q`` about its own axis (slerp from identity)."""
    return quat_from_rotvec(quat_to_rotvec(q) * fraction)


@dataclass(frozen=True, slots=True)
class UnitQuaternion:
    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(norm) or abs(norm - 1.0) > UNIT_TOLERANCE:
            raise InvalidArgument(f"quaternion norm {norm!r} is not 1")

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, values):
        w, x, y, z = (float(v) for v in values)
        return cls(w, x, y, z)

    @classmethod
    def from_axis_angle(cls, axis, degrees):
        axis = np.asarray(axis, dtype=float)
        length = float(np.linalg.norm(axis))
        if length == 0.0 or not math.isfinite(length):
            raise InvalidArgument("rotation axis must be a finite non-zero vector")
        half = math.radians(degrees) / 2.0
        s = math.sin(half) / length
        return cls(math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s)

    def as_array(self):
        return np.array((self.w, self.x, self.y, self.z))

    def conjugate(self):
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def __neg__(self):
        return UnitQuaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        return UnitQuaternion.from_array(quat_multiply(self.as_array(), other.as_array()))


@dataclass(frozen=True, slots=True)
class Position:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise InvalidArgument("position components must be finite")

    @classmethod
    def origin(cls):
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, values):
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    def as_array(self):
        return np.array((self.x, self.y, self.z))

    def distance_to(self, other):
        return float(np.linalg.norm(self.as_array() - other.as_array()))


@dataclass(frozen=True, slots=True)
class Pose:
    position: Position
    rotation: UnitQuaternion

    @classmethod
    def identity(cls):
        return cls(Position.origin(), UnitQuaternion.identity())

    def compose(self, other):
        """``self`` followed by ``other`` expressed in ``self``'s frame."""
        q = self.rotation.as_array()
        p = self.position.as_array() + quat_rotate(q, other.position.as_array())
        return Pose(Position.from_array(p), self.rotation * other.rotation)

    def inverse(self):
        q_inv = self.rotation.conjugate()
        p = -quat_rotate(q_inv.as_array(), self.position.as_array())
        return Pose(Position.from_array(p), q_inv)


def angular_distance(a, b):
    """Minimal rotation angle in degrees between two unit quaternions."""
    qa = a.as_array() if isinstance(a, UnitQuaternion) else np.asarray(a, dtype=float)
    qb = b.as_array() if isinstance(b, UnitQuaternion) else np.asarray(b, dtype=float)
    if not (is_unit(qa) and is_unit(qb)):
        raise InvalidArgument("angular_distance needs unit quaternions")
    return float(angular_distances(qa, qb))
